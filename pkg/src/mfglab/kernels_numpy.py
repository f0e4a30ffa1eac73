"""Pure numpy stencil and flux kernels (fallback backend).

Every function here has a numba twin in :mod:`mfglab.kernels_numba` with the
same signature and elementwise-identical arithmetic, so the two backends agree
to floating-point reproduction, not just to truncation order.

Conventions: arrays are C-ordered float64; axis i of a field is coordinate i;
``np.roll(f, -1, axis=i)`` reads the neighbour at +h along axis i. Face
quantities indexed by j live on the face between nodes j and j+1 (periodic).
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def gradient_1d(f: np.ndarray, h: float) -> np.ndarray:
    out = np.empty((1,) + f.shape)
    out[0] = (np.roll(f, -1) - np.roll(f, 1)) / (2.0 * h)
    return out


def gradient_2d(f: np.ndarray, h: float) -> np.ndarray:
    out = np.empty((2,) + f.shape)
    out[0] = (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * h)
    out[1] = (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2.0 * h)
    return out


def laplacian_1d(f: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(f, -1) + np.roll(f, 1) - 2.0 * f) / (h * h)


def laplacian_2d(f: np.ndarray, h: float) -> np.ndarray:
    return (
        np.roll(f, -1, axis=0)
        + np.roll(f, 1, axis=0)
        + np.roll(f, -1, axis=1)
        + np.roll(f, 1, axis=1)
        - 4.0 * f
    ) / (h * h)


def divergence_faces_1d(v: np.ndarray, h: float) -> np.ndarray:
    return (v[0] - np.roll(v[0], 1)) / h


def divergence_faces_2d(v: np.ndarray, h: float) -> np.ndarray:
    return (v[0] - np.roll(v[0], 1, axis=0) + v[1] - np.roll(v[1], 1, axis=1)) / h


def _upwind_face_flux(m: np.ndarray, v_node: np.ndarray, axis: int) -> np.ndarray:
    # Face velocity is the arithmetic mean of the two adjacent node values;
    # the transported density is taken from the upwind side.
    vf = 0.5 * (v_node + np.roll(v_node, -1, axis=axis))
    return np.where(vf > 0.0, vf * m, vf * np.roll(m, -1, axis=axis))


def upwind_divergence_1d(m: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    flux = _upwind_face_flux(m, v[0], axis=0)
    return (flux - np.roll(flux, 1)) / h


def upwind_divergence_2d(m: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    fx = _upwind_face_flux(m, v[0], axis=0)
    fy = _upwind_face_flux(m, v[1], axis=1)
    return (fx - np.roll(fx, 1, axis=0) + fy - np.roll(fy, 1, axis=1)) / h


def central_divergence_1d(m: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    q = v[0] * m
    flux = 0.5 * (q + np.roll(q, -1))
    return (flux - np.roll(flux, 1)) / h


def central_divergence_2d(m: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    qx = v[0] * m
    qy = v[1] * m
    fx = 0.5 * (qx + np.roll(qx, -1, axis=0))
    fy = 0.5 * (qy + np.roll(qy, -1, axis=1))
    return (fx - np.roll(fx, 1, axis=0) + fy - np.roll(fy, 1, axis=1)) / h
