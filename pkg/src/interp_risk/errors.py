"""Exception and warning types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent arguments (dimension mismatches, bad flags)."""


class DomainError(InputError):
    """Arguments outside the regime where a closed-form result is defined."""


class SolverError(RuntimeError):
    """A fixed-point or root solver failed (no bracket, singular system)."""


class EstimationError(RuntimeError):
    """A data-driven estimation procedure failed."""


class DegreesOfFreedomError(EstimationError):
    """Residual degrees of freedom exhausted; a larger l1 penalty is needed."""


class EstimateUndefinedError(EstimationError):
    """An estimated ratio is undefined after nonnegativity clamping.

    Carries the partial estimates so callers can inspect what degenerated.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConvergenceWarning(UserWarning):
    """An iterative solver stopped at its sweep cap before reaching tolerance."""
