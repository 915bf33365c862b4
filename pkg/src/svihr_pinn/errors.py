"""Exception hierarchy shared by all modules."""


class SvihrError(Exception):
    """Base class for errors raised by this package."""


class NumericalError(SvihrError, ArithmeticError):
    """A numerical failure (maps to exit code 2 on the command line)."""


class NonFiniteError(NumericalError):
    pass


class SingularDivisionError(NumericalError, ZeroDivisionError):
    pass


class PositivityError(NumericalError):
    """The NSFD positivity condition failed for a step."""

    def __init__(self, message, step=None, denominator=None):
        super().__init__(message)
        self.step = step
        self.denominator = denominator


class NoFeasibleParametersError(NumericalError):
    pass


class TrainingDivergedError(NumericalError):
    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class DuplicateOutcomesError(NumericalError):
    pass


class ExhaustedIntervalError(NumericalError):
    pass


class ParameterCountError(SvihrError, ValueError):
    pass


class DataFormatError(SvihrError, ValueError):
    pass


class ConfigError(SvihrError, ValueError):
    pass
