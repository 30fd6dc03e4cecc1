"""Exception hierarchy shared by every module."""


class SpecShatterError(Exception):
    """Base class for all library errors."""

    code = "error"


class NonFinite(SpecShatterError, ValueError):
    code = "non_finite"


class DefectiveOrClustered(SpecShatterError, ValueError):
    """Eigenvalues too close for condition numbers to be meaningful."""

    code = "defective_or_clustered"


class UnknownFamily(SpecShatterError, ValueError):
    code = "unknown_family"


class InsufficientTrials(SpecShatterError, ValueError):
    code = "insufficient_trials"


class DegenerateRegion(SpecShatterError, ValueError):
    code = "degenerate_region"


class ResolutionTooCoarse(SpecShatterError, ValueError):
    code = "resolution_too_coarse"


class RankTooHigh(SpecShatterError, ValueError):
    code = "rank_too_high"


class NotPSD(SpecShatterError, ValueError):
    code = "not_psd"


class TooManySubsets(SpecShatterError, ValueError):
    code = "too_many_subsets"


class SingularBlock(SpecShatterError, ValueError):
    code = "singular_block"


class InapplicableBound(SpecShatterError, ValueError):
    code = "inapplicable_bound"


class TooFewPoints(SpecShatterError, ValueError):
    code = "too_few_points"


class PreconditionViolated(SpecShatterError, ValueError):
    code = "precondition_violated"


class MissingColumns(SpecShatterError, ValueError):
    code = "missing_columns"


class ConfigError(SpecShatterError, ValueError):
    code = "config"
