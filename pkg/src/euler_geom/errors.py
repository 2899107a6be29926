"""Exception hierarchy shared by all modules."""


class EulerGeomError(Exception):
    """Base class for every error raised by the package."""


class QuadratureFailure(EulerGeomError):
    pass


class InvalidOrdering(EulerGeomError, ValueError):
    pass


class DomainError(EulerGeomError, ValueError):
    pass


class NotApplicable(EulerGeomError):
    pass


class EmptySupport(EulerGeomError):
    pass


class BlowUp(EulerGeomError, FloatingPointError):
    pass


class NonConvexWeight(EulerGeomError, ValueError):
    pass


class PoleError(EulerGeomError, ValueError):
    """Evaluation requested at (or numerically at) a pole."""


class FitDegenerate(EulerGeomError):
    pass


class VacuumState(EulerGeomError, ValueError):
    pass


class UnsupportedPair(EulerGeomError, ValueError):
    pass


class NoConvergence(EulerGeomError):
    pass


class DivisionDomain(EulerGeomError, ZeroDivisionError):
    pass


class ConfigError(EulerGeomError, ValueError):
    pass


class AliasWarning(UserWarning):
    """Spectral tail of a transform holds a non-negligible share of the energy."""
