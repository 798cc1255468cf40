"""Exception hierarchy shared by every stage of the reduction chain."""


class ReductionError(Exception):
    """Base class. The CLI maps these to exit code 2 unless noted."""


class OracleCapExceeded(ReductionError):
    pass


class DimensionMismatch(ReductionError):
    pass


class ZeroMatrix(ReductionError):
    pass


class NotIntegerMatrix(ReductionError):
    pass


class EmptyRowOrColumn(ReductionError):
    pass


class NotZeroRowSum(ReductionError):
    pass


class OddPairSet(ReductionError):
    pass


class NotGz2(ReductionError):
    pass


class BlockCollision(ReductionError):
    pass


class NotMc2(ReductionError):
    pass


class NotStrict(ReductionError):
    pass


class NonPositiveWeight(ReductionError):
    pass


class DegeneratePairing(ReductionError):
    pass


class BitCollision(ReductionError):
    pass


class NonStrictEdge(ReductionError):
    pass


class MaxIterationsExceeded(ReductionError):
    pass


class ParseError(ReductionError):
    pass
