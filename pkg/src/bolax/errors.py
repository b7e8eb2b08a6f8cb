"""Exception hierarchy. Numerical failures map to CLI exit code 4."""


class BolaxError(Exception):
    """Base class for all package errors."""


class NumericalFailure(BolaxError):
    """A numerical procedure failed to produce a trustworthy result."""


class SingularResolvent(NumericalFailure):
    """Resolvent solve residual exceeded tolerance; λ is too close to the spectrum."""


class NonConvergedPowerIteration(NumericalFailure):
    pass


class QRNonconvergence(NumericalFailure):
    pass


class DiscAssignmentConflict(NumericalFailure):
    """A localization disc holds zero or several eigenvalues."""


class ContourThroughSpectrum(NumericalFailure):
    pass


class NonIntegerTrace(NumericalFailure):
    pass


class MethodUnavailable(BolaxError):
    """Requested method is undefined for this input (e.g. eigenvectors of complex u)."""


class PhaseDegenerate(NumericalFailure):
    pass


class GridTooSmall(NumericalFailure):
    pass


class RootOutOfDisc(BolaxError, ValueError):
    pass


class BandTooSmall(BolaxError, ValueError):
    pass


class PotentialFormatError(BolaxError, ValueError):
    """Schema violation in a potential file or table."""


class CertificateFailure(BolaxError):
    """Raised by strict certificates; carries the failing report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BoundViolated(CertificateFailure):
    pass


class CountMismatch(CertificateFailure):
    def __init__(self, message, report=None, n=None):
        super().__init__(message, report)
        self.n = n


class GateFailed(CertificateFailure):
    """A smallness precondition of an estimate does not hold."""


class GapTooSmallWarning(UserWarning):
    pass
