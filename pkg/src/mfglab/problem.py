"""Problem container: grid, Hamiltonian, coupling kernel, and data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupling import Kernel
from .errors import GridMismatchError, InvalidDensityError
from .grid import TorusGrid
from .hamiltonian import HamiltonianModel

__all__ = ["MfgProblem"]

MASS_TOL = 1e-12


@dataclass(frozen=True)
class MfgProblem:
    """One well-posed instance of the coupled system.

    ``u0`` is the initial value of the forward PDE, ``m_terminal`` the
    terminal density of the backward one. The terminal density must be
    nonnegative with unit mass; its sup ``m_cap`` is the ceiling M of the
    invariant class {0 <= m <= M} that the fixed-point map preserves.
    """

    grid: TorusGrid
    hamiltonian: HamiltonianModel
    kernel: Kernel
    u0: np.ndarray
    m_terminal: np.ndarray

    def __post_init__(self) -> None:
        u0 = self.grid.check_field(self.u0, "u0")
        mT = self.grid.check_field(self.m_terminal, "m_terminal")
        if self.hamiltonian.dim != self.grid.dim:
            raise GridMismatchError(
                f"hamiltonian dim {self.hamiltonian.dim} != grid dim {self.grid.dim}"
            )
        if self.kernel.grid != self.grid:
            raise GridMismatchError("kernel was built on a different grid")
        if float(np.min(mT)) < -MASS_TOL:
            raise InvalidDensityError(
                f"terminal density must be nonnegative, min={float(np.min(mT)):.3e}"
            )
        mass = self.grid.integrate(mT)
        if abs(mass - 1.0) > MASS_TOL:
            raise InvalidDensityError(
                f"terminal density must have unit mass, got {mass:.15f}"
            )
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "m_terminal", mT)

    @property
    def m_cap(self) -> float:
        """Sup of the terminal density; at least 1 for unit-mass data."""
        return float(np.max(self.m_terminal))

    @property
    def t_final(self) -> float:
        return self.grid.t_final

    def cfl_advective(self) -> float:
        """Worst-case advective Courant number 2 dim c0 dt / h.

        The density update is monotone (hence positivity preserving) when
        this is at most 1; the built-in presets sit far below.
        """
        speed = self.hamiltonian.c0 + float(np.abs(self.hamiltonian.drift).sum())
        return 2.0 * self.grid.dim * speed * self.grid.dt / self.grid.h
