"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain where a quantity is defined."""


class DimensionError(ValueError):
    """Samples do not match the grid they are used with."""


class IntegrationError(ArithmeticError):
    """A profile integration left its admissible region."""


class StepError(ArithmeticError):
    """The nonlinear solve inside a time step did not converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
