"""
Errors raised by the containment engine.

Every error carries a stable ``code`` used in CLI messages and recorded runs.
"""


class ContainmentError(ValueError):
    """Base class for all containment errors"""

    code = 'containment-error'

    def __init__(self, message='', **context):
        self.context = context
        super().__init__(message or self.code)

    def to_dict(self):
        return {'code': self.code, 'message': str(self), **self.context}


class InvalidParams(ContainmentError):
    code = 'invalid-params'


class InvalidSize(ContainmentError):
    code = 'invalid-size'


class InstanceTooLarge(ContainmentError):
    code = 'instance-too-large'


class InvalidV(ContainmentError):
    code = 'invalid-v'


class DegenerateGamma(ContainmentError):
    code = 'degenerate-gamma'


class BetaNotStrict(ContainmentError):
    code = 'beta-not-strict'


class RegimeNotCovered(ContainmentError):
    code = 'regime-not-covered'


class InvalidKstar(ContainmentError):
    code = 'invalid-kstar'


class InvalidRegime(ContainmentError):
    code = 'invalid-regime'


class InvalidZ(ContainmentError):
    code = 'invalid-z'


class InfeasibleRegion(ContainmentError):
    code = 'infeasible'


class TargetUnreachable(ContainmentError):
    code = 'target-unreachable'


class InsufficientPoints(ContainmentError):
    code = 'insufficient-points'


class ConfigInvalid(ContainmentError):
    code = 'config-invalid'


class RateSpecError(ContainmentError):
    code = 'invalid-rate-spec'


class OracleMismatch(ContainmentError):
    """Raised when a cross-validation relation is violated"""

    code = 'oracle-mismatch'
