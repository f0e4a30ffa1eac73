"""mfglab: a numerical laboratory for a nonconvex mean field games system.

The package solves the coupled system

    forward:   u_t + H(Du) = Lap u + rho * (rho * m)
    backward: -m_t - div(DH(Du) m) = Lap m

on the periodic unit torus (dimension 1 or 2), with initial value u(0) = u0
and terminal density m(T) = m_T, where rho is a smooth symmetric mollifier
and H is bounded in C^2 but need not be convex. A damped fixed-point
iteration couples the two PDE solvers; diagnostics check the structural
estimates that make existence and uniqueness work in the smallness regime.
"""

from .backend import active_backend, set_backend
from .config import build_problem, build_solver_config, load_config, load_schema
from .coupling import Kernel, double_convolve, half_convolve, make_kernel, zero_kernel
from .diagnostics import (
    AdjointReport,
    DensityBoundsReport,
    EnergyReport,
    GradientBoundReport,
    UniquenessEnergySeries,
    adjoint_representation_check,
    default_residual_gate,
    density_bounds_check,
    energy_inequalities,
    gradient_bound_check,
    uniqueness_energy_series,
)
from .errors import (
    BlowUpError,
    ConfigError,
    GameHasNoValueError,
    GridMismatchError,
    InvalidDensityError,
    MfgLabError,
    NotConvergedError,
    ResidualTooLargeError,
    UnderResolvedError,
)
from .fixed_point import (
    MfgSolution,
    SolverConfig,
    UniquenessReport,
    fixed_point_map,
    solve_mfg,
    uniqueness_probe,
)
from .fp import fp_residual, solve_fp
from .grid import TorusGrid
from .hamiltonian import (
    DiscreteGame,
    HamiltonianModel,
    SmallnessReport,
    check_uniqueness_smallness,
    derivative_bound_report,
    game_hamiltonian,
    isaacs_lower,
    isaacs_upper,
    make_drift_plus,
    make_nonconvex_sine,
    make_zero,
)
from .hjb import hjb_residual, solve_hjb
from .problem import MfgProblem
from .solution_io import read_solution, write_solution

__version__ = "0.1.0"

__all__ = [
    "AdjointReport",
    "BlowUpError",
    "ConfigError",
    "DensityBoundsReport",
    "DiscreteGame",
    "EnergyReport",
    "GameHasNoValueError",
    "GradientBoundReport",
    "GridMismatchError",
    "HamiltonianModel",
    "InvalidDensityError",
    "Kernel",
    "MfgLabError",
    "MfgProblem",
    "MfgSolution",
    "NotConvergedError",
    "ResidualTooLargeError",
    "SmallnessReport",
    "SolverConfig",
    "TorusGrid",
    "UnderResolvedError",
    "UniquenessEnergySeries",
    "UniquenessReport",
    "active_backend",
    "adjoint_representation_check",
    "build_problem",
    "build_solver_config",
    "check_uniqueness_smallness",
    "default_residual_gate",
    "density_bounds_check",
    "derivative_bound_report",
    "double_convolve",
    "energy_inequalities",
    "fixed_point_map",
    "fp_residual",
    "game_hamiltonian",
    "gradient_bound_check",
    "half_convolve",
    "hjb_residual",
    "isaacs_lower",
    "isaacs_upper",
    "load_config",
    "load_schema",
    "make_drift_plus",
    "make_kernel",
    "make_nonconvex_sine",
    "make_zero",
    "read_solution",
    "set_backend",
    "solve_fp",
    "solve_hjb",
    "solve_mfg",
    "uniqueness_energy_series",
    "uniqueness_probe",
    "write_solution",
    "zero_kernel",
]
