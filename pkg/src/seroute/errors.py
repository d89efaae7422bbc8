"""Typed errors raised across the toolkit.

Construction of domain values is total: a caller either gets a valid value
or one of these exceptions, never a half-built object.
"""


class SerouteError(Exception):
    """Base class for every toolkit-specific error."""


class ValidationError(SerouteError, ValueError):
    """A value violated a documented invariant."""


class DuplicateId(ValidationError):
    """Two models in a pair share the same identifier."""


class TierMismatch(ValidationError):
    """A model pair does not consist of one strong and one weak model."""


class EmptyInput(ValidationError):
    """An operation that needs at least one element received none."""


class DegenerateDenominator(SerouteError):
    """A normalizing denominator was too close to zero to divide by."""


class ZeroVector(ValidationError):
    """A vector with zero norm where a direction is required."""


class DimensionMismatch(ValidationError):
    """Two vectors (or a vector and a model) disagree on dimensionality."""


class EmptyTrainingSet(ValidationError):
    """A router was asked to train or predict with no training records."""


class NoDecisiveRecords(ValidationError):
    """Training data contains only ties where a decisive outcome is needed."""


class EmptyBenchmark(ValidationError):
    """A benchmark sweep was asked to run over zero items."""


class TargetUnreachable(SerouteError):
    """No point on a cost-quality curve reaches the requested accuracy."""


class ZeroTotal(ValidationError):
    """A score was requested over zero judged queries."""


class UnsupportedVersion(SerouteError):
    """An artifact file declares a format version this build cannot read."""


class CorruptArtifact(SerouteError):
    """An artifact file is unreadable or fails its integrity check."""


class OracleFailure(SerouteError):
    """The entailment oracle could not produce a verdict."""


class ProviderFailure(SerouteError):
    """A remote provider (embedding, generation) failed after retries."""


class JudgeFailure(SerouteError):
    """The judge endpoint failed after retries or returned a bad payload."""


class BackendFailure(SerouteError):
    """A completion backend failed after retries."""


class BackendTimeout(SerouteError):
    """A completion backend did not answer within its deadline."""


class UnparseableVerdict(SerouteError):
    """A judge reply matched none of the accepted verdict forms."""


class MissingInput(ValidationError):
    """A pipeline stage input file does not exist.

    `path` names the offending file so callers can report it.
    """

    def __init__(self, path: str, message: str | None = None):
        self.path = path
        super().__init__(message or f"missing input: {path}")


class StageMismatch(ValidationError):
    """A pipeline input was not produced by the declared upstream stage."""
