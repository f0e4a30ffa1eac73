"""Checks of the structural estimates behind existence and uniqueness.

Every check here mirrors an a priori estimate that the continuum theory
guarantees, evaluated with the same discrete operators the solvers use:

* ``density_bounds_check``: membership in the invariant class
  {0 <= m <= M, unit mass per slice}.
* ``gradient_bound_check``: the adjoint-method bound
  sup |u_{x_i}| <= T M sup|D rho| + sup|D u0|.
* ``adjoint_representation_check``: the representation identity behind that
  bound, evaluated against an actual adjoint solve from a mollified point
  mass.
* ``uniqueness_energy_series``: the pair functional

      E(t) = int (u1-u2)(m2-m1) + (u1-u2)^2/4 - (m1-m2)^2 dx

  whose weighted form e^{-t/2} E(t) is non-increasing along genuine solution
  pairs in the smallness regime.
* ``energy_inequalities``: the three differential inequalities that combine
  into that decay, checked slice by slice with centered differences.

The two pair diagnostics are solution-only statements: feeding fields that
do not nearly solve the system would produce meaningless verdicts, so both
gate their inputs on the discrete PDE residuals and raise
:class:`ResidualTooLargeError` when the inputs are not near-solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coupling import periodized_bump
from .errors import ResidualTooLargeError, UnderResolvedError
from .fp import fp_residual, integrate_density_forward
from .grid import TorusGrid
from .hjb import hjb_residual, solve_hjb
from .problem import MfgProblem

__all__ = [
    "DensityBoundsReport",
    "density_bounds_check",
    "GradientBoundReport",
    "gradient_bound_check",
    "AdjointReport",
    "adjoint_representation_check",
    "UniquenessEnergySeries",
    "uniqueness_energy_series",
    "EnergyReport",
    "energy_inequalities",
    "default_residual_gate",
]

MIN_TOL = 1e-10
MASS_TOL = 1e-9
UPPER_SLACK = 0.10
GRADIENT_SLACK = 1.05


# -- invariant class ---------------------------------------------------------


@dataclass(frozen=True)
class DensityBoundsReport:
    """Extremes and mass drift of a density trajectory against the class cap."""

    min_m: float
    max_m: float
    mass_err: float
    m_cap: float
    holds: bool
    upper_slack_exceeded: bool

    def to_json_dict(self) -> dict:
        return {
            "min_m": self.min_m,
            "max_m": self.max_m,
            "mass_err": self.mass_err,
            "m_cap": self.m_cap,
            "holds": self.holds,
            "upper_slack_exceeded": self.upper_slack_exceeded,
        }


def density_bounds_check(grid: TorusGrid, m: np.ndarray, m_cap: float) -> DensityBoundsReport:
    """Check a trajectory (or single slice) against {0 <= m <= M, mass 1}.

    ``holds`` requires min >= -1e-10 and per-slice mass error <= 1e-9. The
    upper bound is reported relative to ``m_cap`` with 10% slack but never
    fails the check: coarse grids legitimately overshoot the continuum
    ceiling a little.
    """
    m = np.asarray(m, dtype=float)
    masses = grid.integrate(m)
    min_m = float(np.min(m))
    max_m = float(np.max(m))
    mass_err = float(np.max(np.abs(np.asarray(masses) - 1.0)))
    return DensityBoundsReport(
        min_m=min_m,
        max_m=max_m,
        mass_err=mass_err,
        m_cap=float(m_cap),
        holds=(min_m >= -MIN_TOL) and (mass_err <= MASS_TOL),
        upper_slack_exceeded=max_m > m_cap * (1.0 + UPPER_SLACK),
    )


# -- gradient bound ------------------------------------------------------------


@dataclass(frozen=True)
class GradientBoundReport:
    """Observed sup of |u_{x_i}| against the a priori bound."""

    lhs: float
    rhs: float
    holds: bool
    horizon_term: float
    initial_term: float
    d2_sup_observed: float

    def to_json_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "holds": self.holds,
            "horizon_term": self.horizon_term,
            "initial_term": self.initial_term,
            "d2_sup_observed": self.d2_sup_observed,
        }


def _hessian_opnorm_sup(grid: TorusGrid, f: np.ndarray) -> float:
    g = grid.gradient(f)
    if grid.dim == 1:
        return float(np.max(np.abs(grid.laplacian(f))))
    h0 = grid.gradient(g[0])
    h1 = grid.gradient(g[1])
    a, b, c = h0[0], 0.5 * (h0[1] + h1[0]), h1[1]
    half_sum = 0.5 * (a + c)
    half_diff = 0.5 * (a - c)
    return float(np.max(np.abs(half_sum) + np.sqrt(half_diff**2 + b**2)))


def gradient_bound_check(u: np.ndarray, problem: MfgProblem) -> GradientBoundReport:
    """Check sup_{x,t,i} |u_{x_i}| <= T M sup|D rho| + sup|D u0| with 5% slack.

    The right-hand side is assembled from the kernel's certified derivative
    sup and the discrete gradient of u0; the check passes in the degenerate
    rhs = 0 case (constant data, flat kernel) with absolute slack 1e-10.
    The sup of the Hessian operator norm over all slices is monitored and
    reported, never asserted: no honest discrete constant exists for it.
    """
    grid = problem.grid
    u = grid.check_spacetime_field(u, "u")
    lhs = 0.0
    d2_sup = 0.0
    for k in range(grid.nt + 1):
        g = grid.gradient(u[k])
        lhs = max(lhs, float(np.max(np.abs(g))))
        d2_sup = max(d2_sup, _hessian_opnorm_sup(grid, u[k]))
    horizon_term = grid.t_final * problem.m_cap * problem.kernel.d_rho_sup
    initial_term = float(np.max(np.abs(grid.gradient(problem.u0))))
    rhs = horizon_term + initial_term
    return GradientBoundReport(
        lhs=lhs,
        rhs=rhs,
        holds=lhs <= GRADIENT_SLACK * rhs + 1e-10,
        horizon_term=horizon_term,
        initial_term=initial_term,
        d2_sup_observed=d2_sup,
    )


# -- adjoint representation ------------------------------------------------------


@dataclass(frozen=True)
class AdjointReport:
    """Both sides of the representation identity and the adjoint health."""

    lhs: np.ndarray
    rhs: np.ndarray
    gap: float
    sigma_mass_err: float
    sigma_min: float

    def to_json_dict(self) -> dict:
        return {
            "lhs": list(np.atleast_1d(self.lhs)),
            "rhs": list(np.atleast_1d(self.rhs)),
            "gap": self.gap,
            "sigma_mass_err": self.sigma_mass_err,
            "sigma_min": self.sigma_min,
        }


def adjoint_representation_check(
    problem: MfgProblem,
    m: np.ndarray,
    x0,
    t0: int,
    mollify_width: float,
) -> AdjointReport:
    """Verify the gradient representation identity at a mollified point.

    With u the value solve for m and sigma the adjoint density started from
    a mollified delta eta at node ``x0`` and time index ``t0`` (transported
    backward by -div(DH(Du) sigma) = Lap sigma + sigma_t), the identity

        int u_{x_i}(t0) eta dx
            = int_0^{t0} int f_{x_i} sigma dx dt + int (u0)_{x_i} sigma(0) dx

    holds exactly in the continuum for every component i, where f is the
    coupling source. Discretely the two sides differ by the scheme error;
    the gap must shrink under joint refinement of h and dt.

    The sigma solve reuses the density machinery but tuned for consistency
    order instead of monotonicity: the same spectral diffusion multiplier as
    the value solver (with the density default the trivial decoupled case
    would show a spurious O(t0 h^2) gap), central flux and Strang splitting
    (both second order; positivity of sigma is reported, not needed).
    """
    grid = problem.grid
    m = grid.check_spacetime_field(m, "m")
    if not (isinstance(t0, (int, np.integer)) and 1 <= t0 <= grid.nt):
        raise ValueError(f"t0 must be a time index in [1, nt], got {t0!r}")
    if mollify_width < 4.0 * grid.h:
        raise UnderResolvedError(
            f"mollify_width {mollify_width} is below the resolvable scale "
            f"4h = {4.0 * grid.h}"
        )
    if not mollify_width < 0.5:
        raise ValueError(f"mollify_width must be below 1/2, got {mollify_width}")
    x0 = np.atleast_1d(np.asarray(x0, dtype=int))
    if x0.shape != (grid.dim,):
        raise ValueError(f"x0 must be a node index of length {grid.dim}, got {x0}")
    if np.any(x0 < 0) or np.any(x0 >= grid.n):
        raise ValueError(f"x0 must index grid nodes in [0, {grid.n}), got {x0}")

    u = solve_hjb(problem, m)
    center = x0 * grid.h
    eta = periodized_bump(grid, center, mollify_width)
    eta = eta / grid.integrate(eta)

    sub_grid = TorusGrid(dim=grid.dim, n=grid.n, t_final=t0 * grid.dt, nt=int(t0))
    H = problem.hamiltonian
    vel = np.empty((t0, grid.dim) + grid.shape)
    for k in range(t0):
        u_mid = 0.5 * (u[t0 - k] + u[t0 - k - 1])
        vel[k] = -H.grad(grid.gradient(u_mid))
    sigma = integrate_density_forward(
        sub_grid, vel, eta, "spectral", "central", "strang"
    )[::-1]

    grad_u_t0 = grid.gradient(u[t0])
    lhs = np.array([grid.integrate(grad_u_t0[i] * eta) for i in range(grid.dim)])

    sources = problem.kernel.double_convolve(m[: t0 + 1])
    q = np.empty((grid.dim, t0 + 1))
    for k in range(t0 + 1):
        gf = grid.gradient(sources[k])
        for i in range(grid.dim):
            q[i, k] = grid.integrate(gf[i] * sigma[k])
    grad_u0 = grid.gradient(problem.u0)
    rhs = np.array(
        [
            float(np.trapezoid(q[i], dx=grid.dt))
            + grid.integrate(grad_u0[i] * sigma[0])
            for i in range(grid.dim)
        ]
    )
    masses = grid.integrate(sigma)
    return AdjointReport(
        lhs=lhs,
        rhs=rhs,
        gap=float(np.max(np.abs(lhs - rhs))),
        sigma_mass_err=float(np.max(np.abs(masses - 1.0))),
        sigma_min=float(np.min(sigma)),
    )


# -- pair diagnostics -----------------------------------------------------------


def default_residual_gate(problem: MfgProblem, *fields: np.ndarray) -> float:
    """Threshold separating near-solutions from garbage.

    Ten times a scheme-order estimate (dt + h) scaled by the observed field
    roughness (sup of the stencil laplacian over all slices). Truncation
    error of a genuine solution is that roughness times powers of h and dt,
    so solver output sits below the gate, while fields that do not solve the
    system leave an O(roughness) defect and land far above it.
    """
    grid = problem.grid
    rough = 1.0
    for f in fields:
        f = np.asarray(f, dtype=float)
        slices = f[None] if f.ndim == grid.dim else f
        for k in range(slices.shape[0]):
            rough = max(rough, float(np.max(np.abs(grid.laplacian(slices[k])))))
    return 10.0 * (grid.dt + grid.h) * rough


def _gate_pair(
    problem: MfgProblem,
    u: np.ndarray,
    m: np.ndarray,
    label: str,
    max_residual: float | None,
) -> None:
    gate = (
        max_residual
        if max_residual is not None
        else default_residual_gate(problem, u, m)
    )
    r_value = hjb_residual(problem, u, m)
    if r_value > gate:
        raise ResidualTooLargeError(
            f"value residual of pair {label} is {r_value:.3e} > gate {gate:.3e}; "
            "inputs must be near-solutions"
        )
    r_density = fp_residual(problem, u, m)
    if r_density > gate:
        raise ResidualTooLargeError(
            f"density residual of pair {label} is {r_density:.3e} > gate {gate:.3e}; "
            "inputs must be near-solutions"
        )


@dataclass(frozen=True)
class UniquenessEnergySeries:
    """The pair energy E(t) sampled at the time nodes.

    ``decay_violation`` is the largest positive increment of the weighted
    series e^{-t/2} E(t) between consecutive nodes; it vanishes (up to
    scheme error) for genuine solution pairs in the smallness regime.
    """

    times: np.ndarray
    values: np.ndarray
    decay_violation: float

    @property
    def weighted(self) -> np.ndarray:
        return np.exp(-0.5 * self.times) * self.values

    def to_json_dict(self) -> dict:
        return {
            "times": list(self.times),
            "values": list(self.values),
            "decay_violation": self.decay_violation,
        }


def uniqueness_energy_series(
    u1: np.ndarray,
    m1: np.ndarray,
    u2: np.ndarray,
    m2: np.ndarray,
    problem: MfgProblem,
    max_residual: float | None = None,
) -> UniquenessEnergySeries:
    """Evaluate the pair energy and its weighted decay defect.

    The two pairs must each nearly solve the system on ``problem``'s grid
    with its Hamiltonian and kernel (terminal and initial data may differ
    between them); otherwise :class:`ResidualTooLargeError`. The energy is

        E(t) = int (u1-u2)(m2-m1) + (u1-u2)^2/4 - (m1-m2)^2 dx,

    nonpositive at t = 0 for shared initial values, nonnegative at t = T for
    shared terminal densities, and e^{-t/2} E(t) never increases along exact
    solution pairs in the smallness regime.
    """
    grid = problem.grid
    u1 = grid.check_spacetime_field(u1, "u1")
    u2 = grid.check_spacetime_field(u2, "u2")
    m1 = grid.check_spacetime_field(m1, "m1")
    m2 = grid.check_spacetime_field(m2, "m2")
    _gate_pair(problem, u1, m1, "1", max_residual)
    _gate_pair(problem, u2, m2, "2", max_residual)
    du = u1 - u2
    dm = m1 - m2
    integrand = du * (m2 - m1) + 0.25 * du**2 - dm**2
    values = np.asarray(grid.integrate(integrand))
    times = grid.times()
    weighted = np.exp(-0.5 * times) * values
    increments = np.diff(weighted)
    decay_violation = float(max(0.0, np.max(increments))) if increments.size else 0.0
    return UniquenessEnergySeries(
        times=times, values=values, decay_violation=decay_violation
    )


@dataclass(frozen=True)
class EnergyReport:
    """Worst positive defects of the three differential inequalities.

    ``cross_violation`` is the defect of

        d/dt int (u1-u2)(m2-m1) <= -int |rho*(m1-m2)|^2
                                   + 2 c0 M int |D(u1-u2)|^2,

    ``value_violation`` of

        d/dt int (u1-u2)^2 <= -int |D(u1-u2)|^2 + (1/4 + c0^2) int (u1-u2)^2
                              + 4 int |rho*(m1-m2)|^2,

    ``density_violation`` of

        d/dt (-int (m1-m2)^2) <= -(2 - c0 (2+M)) int (m1-m2)^2
                                 + c0 M int |D(u1-u2)|^2,

    with time derivatives replaced by centered differences at interior
    nodes. All three must sit at scheme-error level for genuine pairs.
    """

    cross_violation: float
    value_violation: float
    density_violation: float
    c0: float
    m_cap: float

    def to_json_dict(self) -> dict:
        return {
            "cross_violation": self.cross_violation,
            "value_violation": self.value_violation,
            "density_violation": self.density_violation,
            "constants_used": {"c0": self.c0, "m_cap": self.m_cap},
        }


def energy_inequalities(
    u1: np.ndarray,
    m1: np.ndarray,
    u2: np.ndarray,
    m2: np.ndarray,
    problem: MfgProblem,
    max_residual: float | None = None,
) -> EnergyReport:
    """Check the three pair inequalities slice by slice.

    Constants come from the problem: c0 from the Hamiltonian certificate and
    M as the observed ceiling of both trajectories (at least the terminal
    cap), which is the constant the inequalities actually use.
    """
    grid = problem.grid
    u1 = grid.check_spacetime_field(u1, "u1")
    u2 = grid.check_spacetime_field(u2, "u2")
    m1 = grid.check_spacetime_field(m1, "m1")
    m2 = grid.check_spacetime_field(m2, "m2")
    _gate_pair(problem, u1, m1, "1", max_residual)
    _gate_pair(problem, u2, m2, "2", max_residual)
    c0 = problem.hamiltonian.c0
    m_cap = max(problem.m_cap, float(np.max(m1)), float(np.max(m2)))
    nt = grid.nt
    dt = grid.dt
    du = u1 - u2
    dm = m1 - m2
    a = np.asarray(grid.integrate(du * (m2 - m1)))
    b = np.asarray(grid.integrate(du**2))
    c = np.asarray(grid.integrate(dm**2))
    g = np.empty(nt + 1)
    for k in range(nt + 1):
        grad_du = grid.gradient(du[k])
        g[k] = grid.integrate((grad_du**2).sum(axis=0))
    conv = problem.kernel.half_convolve(dm)
    r = np.asarray(grid.integrate(conv**2))

    ks = slice(1, nt)
    da = (a[2:] - a[:-2]) / (2.0 * dt)
    db = (b[2:] - b[:-2]) / (2.0 * dt)
    dc = (c[2:] - c[:-2]) / (2.0 * dt)
    cross = da + r[ks] - 2.0 * c0 * m_cap * g[ks]
    value = db + g[ks] - (0.25 + c0**2) * b[ks] - 4.0 * r[ks]
    density = -dc + (2.0 - c0 * (2.0 + m_cap)) * c[ks] - c0 * m_cap * g[ks]

    def worst(arr: np.ndarray) -> float:
        return float(max(0.0, np.max(arr))) if arr.size else 0.0

    return EnergyReport(
        cross_violation=worst(cross),
        value_violation=worst(value),
        density_violation=worst(density),
        c0=c0,
        m_cap=m_cap,
    )
