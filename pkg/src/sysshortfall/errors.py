"""Exception types shared across the package."""


class DomainError(ValueError):
    """A point lies outside the interior domain of a conjugate map."""


class SolverError(RuntimeError):
    """An iterative solver failed to converge.

    Carries the best residual seen so that callers can report diagnostics.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ScenarioFormatError(ValueError):
    """A scenario file failed to parse or violates the scenario invariants."""
