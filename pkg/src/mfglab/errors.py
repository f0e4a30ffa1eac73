"""Exception types shared across the package."""


class MfgLabError(Exception):
    """Base class for all package errors."""


class GridMismatchError(MfgLabError):
    """Field shape or grid metadata does not match the expected grid."""


class BlowUpError(MfgLabError):
    """A solver iterate left the trust region (sup norm above 1e10)."""


class InvalidDensityError(MfgLabError):
    """A density violates the invariant class 0 <= m <= M with unit mass."""


class GameHasNoValueError(MfgLabError):
    """Lower and upper Isaacs values disagree at some momentum sample."""

    def __init__(self, gap: float, p) -> None:
        super().__init__(
            f"upper and lower game values differ by {gap:.3e} at p={p!r}"
        )
        self.gap = gap
        self.p = p


class NotConvergedError(MfgLabError):
    """An iteration that must converge for the requested report did not."""

    def __init__(self, message: str, report=None) -> None:
        super().__init__(message)
        self.report = report


class ResidualTooLargeError(MfgLabError):
    """Inputs to a solution-only diagnostic are not near-solutions."""


class UnderResolvedError(MfgLabError):
    """A requested length scale falls below the resolvable grid scale."""


class ConfigError(MfgLabError):
    """A run configuration failed validation or could not be loaded."""
