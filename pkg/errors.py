from typing import Optional


class HomogenizationError(Exception):
    """
    Base class for every error raised by the homogenization toolkit.
    """


class ConfigError(HomogenizationError):
    """
    Raised when a configuration value is missing, malformed or out of range.

    :param field: Dotted path of the offending configuration field.
    :param reason: Human readable explanation.
    """

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")

    def __reduce__(self):
        # errors cross process boundaries when ε rows run in a pool
        return self.__class__, (self.field, self.reason)


class GridError(ConfigError, ValueError):
    """
    Raised when grid, mask or coefficient parameters are rejected.
    """


class NumericError(HomogenizationError):
    """
    Base class for numeric failures. Carries the name of the failing stage.

    :param stage: Name of the computation stage that failed.
    :param message: Description of the failure.
    """

    def __init__(self, stage: str, message: str):
        self.stage = stage
        self.message = message
        super().__init__(f"[{stage}] {message}")

    def __reduce__(self):
        return self.__class__, (self.stage, self.message)


class SolverConvergenceError(NumericError):
    """
    Raised when conjugate gradients does not reach the requested tolerance.
    """

    def __init__(self, stage: str, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(stage, f"no convergence after {iterations} iterations "
                                f"(relative residual {residual:.3e})")

    def __reduce__(self):
        return self.__class__, (self.stage, self.iterations, self.residual)


class ResolutionMismatchError(NumericError, ValueError):
    """
    Raised when a cell grid cannot be sampled on the fine grid of a domain.
    """

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(stage or "first_order_approx", message)

    def __reduce__(self):
        return self.__class__, (self.message, self.stage)
