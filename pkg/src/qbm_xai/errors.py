"""Exception hierarchy. Each family maps to one CLI exit code."""


class QbmXaiError(Exception):
    exit_code = 1


class IoFailure(QbmXaiError):
    exit_code = 3


class FormatError(QbmXaiError):
    exit_code = 4


class BadMagic(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


class DataError(QbmXaiError):
    exit_code = 5


class EmptyResult(DataError):
    pass


class DegenerateSplit(DataError):
    pass


class DegenerateData(DataError):
    pass


class EmptyData(DataError):
    pass


class EmptyBatch(DataError):
    pass


class NumericalError(QbmXaiError):
    exit_code = 6


class RankDeficient(NumericalError):
    pass


class NonFinite(NumericalError):
    pass


class NonFiniteAngle(NonFinite):
    pass


class NonFiniteLoss(NonFinite):
    pass


class NonFiniteValue(NonFinite):
    pass


class UnnormalizedState(NumericalError):
    pass


class NotADistribution(NumericalError):
    pass


class DegenerateDistances(NumericalError):
    pass


class ShapeError(QbmXaiError, ValueError):
    """Bad index, shape or argument to an operation."""

    exit_code = 2


class DimensionMismatch(ShapeError):
    pass


class QubitOutOfRange(ShapeError):
    pass


class SameQubit(ShapeError):
    pass


class BadCoordinate(ShapeError):
    pass


class NonBinaryInput(ShapeError):
    pass


class PerplexityTooLarge(ShapeError):
    pass


class SingleCluster(ShapeError):
    pass


class MissingArtifact(QbmXaiError):
    exit_code = 7


class DegenerateAttribution(QbmXaiError):
    exit_code = 8
