"""Hamiltonians: built-in families, finite games, Isaacs operators.

A :class:`HamiltonianModel` bundles vectorized callables for H and DH with a
certified constant ``c0`` bounding sup|DH| + sup|D2H|. That constant is what
the uniqueness smallness condition c0 < 1/(12 M) consumes, so each built-in
family derives it analytically; models built from finite games only get a
sampled estimate and are flagged uncertified.

For a two-player finite game with dynamics table f(a, b) (dim-vector) and
running cost table h(a, b), the lower and upper Isaacs Hamiltonians are

    lower(p) = min_a max_b { -f(a, b) . p - h(a, b) }
    upper(p) = max_b min_a { -f(a, b) . p - h(a, b) }

and upper <= lower always (pure order logic). The game has a value at p when
the two coincide; only then does a single Hamiltonian model make sense.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import GameHasNoValueError

__all__ = [
    "HamiltonianModel",
    "make_zero",
    "make_nonconvex_sine",
    "make_drift_plus",
    "DiscreteGame",
    "isaacs_lower",
    "isaacs_upper",
    "game_hamiltonian",
    "SmallnessReport",
    "check_uniqueness_smallness",
    "derivative_bound_report",
]


@dataclass(frozen=True)
class HamiltonianModel:
    """A Hamiltonian p -> H(p) with gradient and a derivative bound.

    ``value`` maps an array of shape (dim, ...) to shape (...); ``grad``
    preserves the shape. ``c0`` bounds sup|DH| + sup|D2H| over all p; it is
    exact for the built-in families (``c0_certified=True``) and a sampled
    estimate for game-derived models. ``drift`` is the linear part removed
    from the derivative bound by the drift-shift result: H(p) = drift . p +
    K(p) with only K subject to the bound.
    """

    dim: int
    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    c0: float
    drift: np.ndarray = field(default=None)  # type: ignore[assignment]
    c0_certified: bool = True
    label: str = ""

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if not (self.c0 >= 0.0 and math.isfinite(self.c0)):
            raise ValueError(f"c0 must be finite and >= 0, got {self.c0}")
        drift = np.zeros(self.dim) if self.drift is None else np.asarray(self.drift, float)
        if drift.shape != (self.dim,):
            raise ValueError(f"drift must have shape ({self.dim},), got {drift.shape}")
        object.__setattr__(self, "drift", drift)


def make_zero(dim: int) -> HamiltonianModel:
    """The degenerate H == 0 model, used by decoupled oracles and presets."""

    def value(p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, float)
        return np.zeros(p.shape[1:])

    def grad(p: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(p, float))

    return HamiltonianModel(dim=dim, value=value, grad=grad, c0=0.0, label="zero")


def make_nonconvex_sine(c: float, dim: int) -> HamiltonianModel:
    """H(p) = (c/2) sum_i sin(p_i), a bounded nonconvex family.

    DH_i(p) = (c/2) cos(p_i), so sup|DH| = (c/2) sqrt(dim); the Hessian is
    diagonal with entries -(c/2) sin(p_i), operator norm at most c/2. The
    certified constant is the sum, c0 = (c/2)(sqrt(dim) + 1), which equals c
    in one dimension. The second derivative changes sign, so the family is
    neither convex nor concave for any c > 0.
    """
    if not (c > 0.0 and math.isfinite(c)):
        raise ValueError(f"c must be positive and finite, got {c}")
    half = 0.5 * c

    def value(p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, float)
        return half * np.sin(p).sum(axis=0)

    def grad(p: np.ndarray) -> np.ndarray:
        return half * np.cos(np.asarray(p, float))

    c0 = half * (math.sqrt(dim) + 1.0)
    return HamiltonianModel(dim=dim, value=value, grad=grad, c0=c0, label=f"sine(c={c:g})")


def make_drift_plus(b, k: HamiltonianModel) -> HamiltonianModel:
    """H(p) = b . p + K(p): a linear drift plus a bounded part.

    The drift is recorded separately and exempt from the derivative bound;
    the model inherits c0 from K alone, which is exactly what the drift-shift
    uniqueness result permits.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (k.dim,):
        raise ValueError(f"b must have shape ({k.dim},), got {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError("b must be finite")
    bcol = b.reshape((k.dim,) + (1,) * 0)

    def value(p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, float)
        return np.tensordot(b, p, axes=(0, 0)) + k.value(p)

    def grad(p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, float)
        shape = (k.dim,) + (1,) * (p.ndim - 1)
        return bcol.reshape(shape) + k.grad(p)

    return HamiltonianModel(
        dim=k.dim,
        value=value,
        grad=grad,
        c0=k.c0,
        drift=b,
        c0_certified=k.c0_certified,
        label=f"drift({np.array2string(b)})+{k.label or 'K'}",
    )


# -- finite games ------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteGame:
    """Finite two-player game: dynamics f(a, b) in R^dim, running cost h(a, b).

    ``f_table`` has shape (na, nb, dim), ``h_table`` has shape (na, nb).
    Player a minimizes, player b maximizes.
    """

    f_table: np.ndarray
    h_table: np.ndarray

    def __post_init__(self) -> None:
        f = np.asarray(self.f_table, dtype=float)
        h = np.asarray(self.h_table, dtype=float)
        if f.ndim != 3 or f.shape[2] not in (1, 2):
            raise ValueError(f"f_table must have shape (na, nb, dim<=2), got {f.shape}")
        if h.shape != f.shape[:2]:
            raise ValueError(
                f"h_table shape {h.shape} does not match f_table actions {f.shape[:2]}"
            )
        if f.shape[0] < 1 or f.shape[1] < 1:
            raise ValueError("both players need at least one action")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(h))):
            raise ValueError("game tables must be finite")
        object.__setattr__(self, "f_table", f)
        object.__setattr__(self, "h_table", h)

    @property
    def dim(self) -> int:
        return self.f_table.shape[2]

    @property
    def num_actions(self) -> tuple:
        return self.f_table.shape[:2]

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "f": self.f_table.tolist(),
            "h": self.h_table.tolist(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "DiscreteGame":
        dim = int(doc["dim"])
        f = np.asarray(doc["f"], dtype=float)
        # scalar entries are accepted for one-dimensional dynamics
        if f.ndim == 2 and dim == 1:
            f = f[:, :, None]
        h = np.asarray(doc["h"], dtype=float)
        if f.ndim != 3 or f.shape[2] != dim:
            raise ValueError(f"dynamics table shape {f.shape} does not match dim={dim}")
        return cls(f_table=f, h_table=h)

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "DiscreteGame":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def _payoff(game: DiscreteGame, p: np.ndarray) -> np.ndarray:
    """Table of -f(a,b) . p - h(a,b), batched over trailing axes of p."""
    p = np.asarray(p, dtype=float)
    if p.shape[0] != game.dim:
        raise ValueError(f"p must have leading dimension {game.dim}, got {p.shape}")
    vals = -np.einsum("abd,d...->ab...", game.f_table, p)
    extra = (slice(None), slice(None)) + (None,) * (p.ndim - 1)
    return vals - game.h_table[extra]


def isaacs_lower(game: DiscreteGame, p: np.ndarray) -> np.ndarray:
    """min over a of max over b of the payoff; scalar for p of shape (dim,)."""
    vals = _payoff(game, p)
    out = vals.max(axis=1).min(axis=0)
    return float(out) if np.ndim(out) == 0 else out


def isaacs_upper(game: DiscreteGame, p: np.ndarray) -> np.ndarray:
    """max over b of min over a of the payoff; never exceeds the lower value."""
    vals = _payoff(game, p)
    out = vals.min(axis=0).max(axis=0)
    return float(out) if np.ndim(out) == 0 else out


def _fd_hessian_norm(value: Callable, p: np.ndarray, step: float) -> float:
    """Operator norm of the finite-difference Hessian at a single point p."""
    dim = p.shape[0]
    if dim == 1:
        d2 = (value(p + step) - 2.0 * value(p) + value(p - step)) / step**2
        return abs(float(d2))
    H = np.empty((dim, dim))
    for i in range(dim):
        ei = np.zeros(dim)
        ei[i] = step
        H[i, i] = float(value(p + ei) - 2.0 * value(p) + value(p - ei)) / step**2
    e0 = np.array([step, 0.0])
    e1 = np.array([0.0, step])
    mixed = (
        float(value(p + e0 + e1))
        - float(value(p + e0 - e1))
        - float(value(p - e0 + e1))
        + float(value(p - e0 - e1))
    ) / (4.0 * step**2)
    H[0, 1] = H[1, 0] = mixed
    return float(np.max(np.abs(np.linalg.eigvalsh(H))))


def game_hamiltonian(
    game: DiscreteGame,
    samples: np.ndarray,
    fd_step: float = 1e-4,
    value_tol: float = 1e-12,
) -> HamiltonianModel:
    """Build a HamiltonianModel from a finite game that has a value.

    ``samples`` is an array of momenta, shape (dim, num_samples). The lower
    and upper Isaacs values must agree within ``value_tol`` at every sample,
    otherwise :class:`GameHasNoValueError` reports the worst gap. The
    gradient is a central finite difference of the (piecewise linear in p)
    value, and c0 is estimated on the samples and flagged uncertified: these
    models are for inspection and simulation, never for certified uniqueness
    claims.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[None, :]
    if samples.shape[0] != game.dim or samples.shape[1] < 1:
        raise ValueError(
            f"samples must have shape ({game.dim}, num_samples), got {samples.shape}"
        )
    lower = isaacs_lower(game, samples)
    upper = isaacs_upper(game, samples)
    gaps = np.asarray(lower) - np.asarray(upper)
    worst = int(np.argmax(gaps))
    if gaps[worst] > value_tol:
        raise GameHasNoValueError(float(gaps[worst]), samples[:, worst].copy())

    def value(p: np.ndarray) -> np.ndarray:
        return isaacs_lower(game, p)

    def grad(p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        out = np.empty_like(p)
        for i in range(game.dim):
            shift = np.zeros_like(p)
            shift[i] = fd_step
            out[i] = (value(p + shift) - value(p - shift)) / (2.0 * fd_step)
        return out

    grad_sup = float(np.max(np.abs(grad(samples))))
    hess_sup = max(
        _fd_hessian_norm(value, samples[:, j].copy(), fd_step)
        for j in range(samples.shape[1])
    )
    return HamiltonianModel(
        dim=game.dim,
        value=value,
        grad=grad,
        c0=grad_sup + hess_sup,
        c0_certified=False,
        label="game",
    )


# -- structural checks ---------------------------------------------------------


@dataclass(frozen=True)
class SmallnessReport:
    """Outcome of the uniqueness smallness test c0 < 1/(12 m_cap).

    ``consequence_bound`` is the coarser bound min{1/(4(m_cap+2)),
    1/(2 sqrt 5)} that the threshold implies (with equality exactly at
    m_cap = 1), recorded so reports show both constants.
    """

    holds: bool
    c0: float
    m_cap: float
    threshold: float
    consequence_bound: float

    def to_json_dict(self) -> dict:
        return {
            "holds": self.holds,
            "c0": self.c0,
            "m_cap": self.m_cap,
            "threshold": self.threshold,
            "consequence_bound": self.consequence_bound,
        }


def check_uniqueness_smallness(hm: HamiltonianModel, m_cap: float) -> SmallnessReport:
    """Check c0 < 1/(12 m_cap), the regime where the fixed point is unique.

    ``m_cap`` is the sup of the terminal density; it is at least 1 for any
    unit-mass density on the unit torus, and values below 1 are rejected.
    """
    if not (m_cap >= 1.0 and math.isfinite(m_cap)):
        raise ValueError(f"m_cap must be >= 1 (unit-mass density sup), got {m_cap}")
    threshold = 1.0 / (12.0 * m_cap)
    consequence = min(1.0 / (4.0 * (m_cap + 2.0)), 1.0 / (2.0 * math.sqrt(5.0)))
    return SmallnessReport(
        holds=bool(hm.c0 < threshold),
        c0=float(hm.c0),
        m_cap=float(m_cap),
        threshold=threshold,
        consequence_bound=consequence,
    )


def derivative_bound_report(
    hm: HamiltonianModel,
    samples: np.ndarray,
    fd_step: float = 1e-4,
    slack: float = 0.05,
) -> dict:
    """Sampled audit of the certificate sup|DH| + sup|D2H| <= c0.

    Returns observed maxima and the worst mismatch between ``grad`` and a
    central finite difference of ``value``. ``ok`` allows ``slack`` relative
    headroom over c0 to absorb finite-difference error.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[None, :]
    if samples.shape[0] != hm.dim:
        raise ValueError(f"samples must have shape ({hm.dim}, num), got {samples.shape}")
    g = hm.grad(samples)
    # the drift part is exempt from the bound
    g = g - hm.drift.reshape((hm.dim,) + (1,) * (samples.ndim - 1))
    grad_sup = float(np.max(np.sqrt((g**2).sum(axis=0))))
    hess_sup = max(
        _fd_hessian_norm(hm.value, samples[:, j].copy(), fd_step)
        for j in range(samples.shape[1])
    )
    fd = np.empty_like(samples)
    for i in range(hm.dim):
        shift = np.zeros_like(samples)
        shift[i] = fd_step
        fd[i] = (hm.value(samples + shift) - hm.value(samples - shift)) / (2.0 * fd_step)
    grad_gap = float(np.max(np.abs(fd - hm.grad(samples))))
    observed = grad_sup + hess_sup
    return {
        "grad_sup": grad_sup,
        "hess_sup": hess_sup,
        "observed": observed,
        "c0": hm.c0,
        "ok": observed <= hm.c0 * (1.0 + slack) + 1e-12,
        "grad_fd_gap": grad_gap,
    }
