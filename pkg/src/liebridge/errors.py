"""Exception types shared across the package."""


class LieBridgeError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(LieBridgeError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(LieBridgeError, ValueError):
    """A scalar argument lies outside the domain of the requested function."""


class CutLocusError(LieBridgeError, ArithmeticError):
    """The group logarithm was requested at or too close to the cut locus.

    Rotations by an angle within EPS_CUT of pi have no stable logarithm;
    callers either treat this as a hard error or substitute a documented
    fallback (the bridge samplers zero the guiding vector and count the hit).
    """


class NotSPDError(LieBridgeError, ValueError):
    """A matrix expected to be symmetric positive definite is not."""


class HorizonError(LieBridgeError, ValueError):
    """A guided quantity was evaluated at or beyond the terminal time."""


class NumericalError(LieBridgeError, ArithmeticError):
    """An iterative numerical routine failed to converge or went non-finite."""


class DegenerateWeights(LieBridgeError, ArithmeticError):
    """No importance weight carries information (all underflowed or non-finite)."""


class NonFiniteLikelihood(LieBridgeError, ArithmeticError):
    """The log-likelihood became non-finite during optimization.

    Carries the partial optimization trace in the ``trace`` attribute when the
    failure happened mid-fit, so callers can inspect or persist what completed.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace
