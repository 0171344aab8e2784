"""Exception types shared across the package."""


class TransformDomainError(ValueError):
    """A transform was evaluated outside its domain (Re(s) < 0)."""


class StabilityError(ValueError):
    """The offered load makes the system unstable."""

    def __init__(self, message: str, total_load: float | None = None):
        super().__init__(message)
        self.total_load = total_load


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its budget."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class InversionError(RuntimeError):
    """Numerical transform inversion produced unusable values."""


class SimulationError(RuntimeError):
    """The simulation could not produce usable output."""


class ScenarioError(ValueError):
    """A scenario file could not be parsed or validated."""


class ValidationFailure(RuntimeError):
    """The analytic-vs-simulation validation report contains failures."""
