"""Exception types shared across the package."""


class QnmresError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(QnmresError, ValueError):
    """A parameter set violates a documented invariant."""


class NonPositiveFrequency(ValidationError):
    """A frequency that must be positive is zero, negative, or NaN."""


class NonPositiveLinewidth(ValidationError):
    """A linewidth that must be positive is zero, negative, or NaN."""


class OverdampedMode(ValidationError):
    """Mode quality factor is not finite and above 1/2."""


class BadGrid(ValidationError):
    """A sweep or frequency grid is malformed."""


class PhaseSingular(ValidationError):
    """The requested quantity diverges at this mode phase."""


class NegativeSpectralDensity(QnmresError, ArithmeticError):
    """The phase-corrected spectral density is negative and the policy forbids clamping."""


class NegativeBathFrequency(QnmresError, ArithmeticError):
    """A dressed transition falls at a non-positive absolute bath frequency."""


class DegenerateManifold(ValidationError):
    """Dressed-state splitting vanishes; the closed-form branch is undefined."""


class DegenerateSteadyState(QnmresError, ArithmeticError):
    """The generator kernel is not one-dimensional; no unique stationary state."""


class EigenvalueAmbiguous(QnmresError, ArithmeticError):
    """Spectral and trajectory-fit decay rates disagree beyond tolerance."""


class StepSizeUnderflow(QnmresError, RuntimeError):
    """The adaptive integrator reduced its step below the useful limit."""


class ToleranceNotMet(QnmresError, RuntimeError):
    """A runtime accuracy or convergence target could not be reached."""


class NegativeSpectrum(QnmresError, ArithmeticError):
    """The spectrum estimator produced negativity beyond numerical dust."""


class ParseError(QnmresError, ValueError):
    """A configuration file or override string could not be parsed."""
