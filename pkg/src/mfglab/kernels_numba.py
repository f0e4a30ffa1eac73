"""Numba-compiled stencil and flux kernels (default backend).

Loop twins of :mod:`mfglab.kernels_numpy`; see that module for conventions.
fastmath stays off so both backends perform identical IEEE arithmetic.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def gradient_1d(f, h):
    n = f.shape[0]
    out = np.empty((1, n))
    inv = 1.0 / (2.0 * h)
    for j in range(n):
        jp = j + 1 if j + 1 < n else 0
        jm = j - 1 if j > 0 else n - 1
        out[0, j] = (f[jp] - f[jm]) * inv
    return out


@njit(cache=True)
def gradient_2d(f, h):
    n0, n1 = f.shape
    out = np.empty((2, n0, n1))
    inv = 1.0 / (2.0 * h)
    for i in range(n0):
        ip = i + 1 if i + 1 < n0 else 0
        im = i - 1 if i > 0 else n0 - 1
        for j in range(n1):
            jp = j + 1 if j + 1 < n1 else 0
            jm = j - 1 if j > 0 else n1 - 1
            out[0, i, j] = (f[ip, j] - f[im, j]) * inv
            out[1, i, j] = (f[i, jp] - f[i, jm]) * inv
    return out


@njit(cache=True)
def laplacian_1d(f, h):
    n = f.shape[0]
    out = np.empty(n)
    inv = 1.0 / (h * h)
    for j in range(n):
        jp = j + 1 if j + 1 < n else 0
        jm = j - 1 if j > 0 else n - 1
        out[j] = (f[jp] + f[jm] - 2.0 * f[j]) * inv
    return out


@njit(cache=True)
def laplacian_2d(f, h):
    n0, n1 = f.shape
    out = np.empty((n0, n1))
    inv = 1.0 / (h * h)
    for i in range(n0):
        ip = i + 1 if i + 1 < n0 else 0
        im = i - 1 if i > 0 else n0 - 1
        for j in range(n1):
            jp = j + 1 if j + 1 < n1 else 0
            jm = j - 1 if j > 0 else n1 - 1
            out[i, j] = (f[ip, j] + f[im, j] + f[i, jp] + f[i, jm] - 4.0 * f[i, j]) * inv
    return out


@njit(cache=True)
def divergence_faces_1d(v, h):
    n = v.shape[1]
    out = np.empty(n)
    for j in range(n):
        jm = j - 1 if j > 0 else n - 1
        out[j] = (v[0, j] - v[0, jm]) / h
    return out


@njit(cache=True)
def divergence_faces_2d(v, h):
    n0, n1 = v.shape[1], v.shape[2]
    out = np.empty((n0, n1))
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        for j in range(n1):
            jm = j - 1 if j > 0 else n1 - 1
            out[i, j] = (v[0, i, j] - v[0, im, j] + v[1, i, j] - v[1, i, jm]) / h
    return out


@njit(cache=True)
def upwind_divergence_1d(m, v, h):
    n = m.shape[0]
    flux = np.empty(n)
    for j in range(n):
        jp = j + 1 if j + 1 < n else 0
        vf = 0.5 * (v[0, j] + v[0, jp])
        flux[j] = vf * m[j] if vf > 0.0 else vf * m[jp]
    out = np.empty(n)
    for j in range(n):
        jm = j - 1 if j > 0 else n - 1
        out[j] = (flux[j] - flux[jm]) / h
    return out


@njit(cache=True)
def upwind_divergence_2d(m, v, h):
    n0, n1 = m.shape
    fx = np.empty((n0, n1))
    fy = np.empty((n0, n1))
    for i in range(n0):
        ip = i + 1 if i + 1 < n0 else 0
        for j in range(n1):
            jp = j + 1 if j + 1 < n1 else 0
            vf = 0.5 * (v[0, i, j] + v[0, ip, j])
            fx[i, j] = vf * m[i, j] if vf > 0.0 else vf * m[ip, j]
            wf = 0.5 * (v[1, i, j] + v[1, i, jp])
            fy[i, j] = wf * m[i, j] if wf > 0.0 else wf * m[i, jp]
    out = np.empty((n0, n1))
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        for j in range(n1):
            jm = j - 1 if j > 0 else n1 - 1
            out[i, j] = (fx[i, j] - fx[im, j] + fy[i, j] - fy[i, jm]) / h
    return out


@njit(cache=True)
def central_divergence_1d(m, v, h):
    n = m.shape[0]
    flux = np.empty(n)
    for j in range(n):
        jp = j + 1 if j + 1 < n else 0
        flux[j] = 0.5 * (v[0, j] * m[j] + v[0, jp] * m[jp])
    out = np.empty(n)
    for j in range(n):
        jm = j - 1 if j > 0 else n - 1
        out[j] = (flux[j] - flux[jm]) / h
    return out


@njit(cache=True)
def central_divergence_2d(m, v, h):
    n0, n1 = m.shape
    fx = np.empty((n0, n1))
    fy = np.empty((n0, n1))
    for i in range(n0):
        ip = i + 1 if i + 1 < n0 else 0
        for j in range(n1):
            jp = j + 1 if j + 1 < n1 else 0
            fx[i, j] = 0.5 * (v[0, i, j] * m[i, j] + v[0, ip, j] * m[ip, j])
            fy[i, j] = 0.5 * (v[1, i, j] * m[i, j] + v[1, i, jp] * m[i, jp])
    out = np.empty((n0, n1))
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        for j in range(n1):
            jm = j - 1 if j > 0 else n1 - 1
            out[i, j] = (fx[i, j] - fx[im, j] + fy[i, j] - fy[i, jm]) / h
    return out
