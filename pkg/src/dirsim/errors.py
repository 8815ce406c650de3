"""Exception hierarchy shared by every module of the package."""


class DirsimError(Exception):
    """Base class for all package errors."""


class ValidationError(DirsimError, ValueError):
    pass


class NonPositiveLoss(ValidationError):
    pass


class NegativeMagnitude(ValidationError):
    pass


class GammaExceedsLoss(ValidationError):
    """Dissipative coupling larger than the intrinsic loss; damping matrix not PSD."""


class MarginallyStable(DirsimError):
    """Some eigenvalue of the dynamical matrix has a non-negative imaginary part."""


class DivergentSteadyState(DirsimError):
    pass


class DetuningUnsupported(DirsimError):
    """Closed forms only hold on resonance (zero detuning)."""


class BothEmpty(DirsimError, ZeroDivisionError):
    """Imbalance is undefined when both populations vanish."""


class TraceDrift(DirsimError):
    pass


class CutoffTooSmall(DirsimError):
    pass


class ParseError(DirsimError):
    pass


class UnknownKey(ParseError):
    pass


class ToleranceExceeded(DirsimError):
    pass
