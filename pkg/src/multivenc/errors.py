"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes, so library callers can catch the same
classes the command line reports.
"""


class MultivencError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(MultivencError, ValueError):
    """Malformed or incomplete configuration / input file."""


class IrrationalEntryError(MultivencError, ValueError):
    """An encoding entry could not be represented as an exact rational."""


class RankDeficiencyError(MultivencError, ValueError):
    """A matrix that must have rank 3 does not."""


class DimensionError(MultivencError, ValueError):
    """Operands with incompatible shapes."""


class UndefinedLcmError(MultivencError, ValueError):
    """Least common multiple requested for inputs that are all zero."""


class IndeterminatePhaseError(MultivencError, ValueError):
    """A conjugate product vanished, so its angle is undefined."""
