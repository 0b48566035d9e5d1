"""Exception hierarchy shared by all modules.

Each class carries the CLI exit code it maps to.
"""


class CritlabError(Exception):
    exit_code = 1


class InvalidParameter(CritlabError, ValueError):
    exit_code = 2


class CapacityExceeded(CritlabError):
    """Raised when an exact computation would exceed its size budget."""

    exit_code = 3

    def __init__(self, message, dimension=None):
        super().__init__(message)
        self.dimension = dimension


class ConvergenceFailure(CritlabError):
    exit_code = 4

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class GeometricDegeneracy(CritlabError):
    exit_code = 2


class NumericRange(CritlabError):
    exit_code = 2


class DegenerateStatistic(CritlabError):
    exit_code = 2


class SingularCovariance(CritlabError):
    exit_code = 2


class RayDegeneracy(CritlabError):
    """A loop vertex lies (numerically) on a puncture's cut ray."""

    exit_code = 2


class InvalidInput(CritlabError):
    """Precondition of an inequality check is violated; carries a witness."""

    exit_code = 2

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
