"""Exception types shared across modules."""


class WeakHypError(Exception):
    """Base class for all package errors."""


class SpecError(WeakHypError, ValueError):
    pass


class HyperbolicityViolation(WeakHypError, ArithmeticError):
    """A characteristic root has a non-negligible imaginary part."""


class DegenerateData(WeakHypError, ValueError):
    pass


class ClassificationAmbiguous(WeakHypError):
    """Root multiplicity structure does not fit any of the three cases."""


class HorizonTooShort(WeakHypError, ValueError):
    pass


class CoincidentNodes(WeakHypError, ZeroDivisionError):
    pass


class IllConditioned(WeakHypError):
    pass


class NoThreshold(WeakHypError):
    """The energy bracket never becomes nonpositive on the frequency grid."""

    def __init__(self, message, brackets=None):
        super().__init__(message)
        self.brackets = brackets


class StepUnderflow(WeakHypError, ArithmeticError):
    pass


class FitDegenerate(WeakHypError, ValueError):
    pass


class ConfigError(WeakHypError, ValueError):
    pass
