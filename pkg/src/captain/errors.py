"""Exception types shared across the engine."""


class CaptainError(Exception):
    """Base class for all engine errors."""


class MalformedBundle(CaptainError):
    """Annotation bundle violates the manifest schema."""


class DimensionMismatch(MalformedBundle):
    """A stored plane or vector does not match the declared dimensions."""


class ValueOutOfRange(MalformedBundle):
    """A numeric field lies outside its allowed range."""


class ZeroSaliency(CaptainError):
    """Saliency map is identically zero; no center of mass exists."""


class SingleClass(CaptainError):
    """Classifier training received samples from only one class."""


class DegenerateTraining(CaptainError):
    """A class has too few samples to train a pairwise model."""


class TooFewJoints(CaptainError):
    """Skeleton has fewer than the minimum joints for feature extraction."""


class EmptyInput(CaptainError):
    """An operation received an empty sample set."""


class KTooLarge(CaptainError):
    """Requested more clusters than available samples."""


class EmptyCorpus(CaptainError):
    """Corpus manifest lists no bundles."""


class DuplicateId(CaptainError):
    """Image id already present in the composition model."""


class EmptyModel(CaptainError):
    """Composition model has no rows."""


class MissingRoot(CaptainError):
    """Skeleton lacks the nose/neck chain root required for polar conversion."""


class NoSharedJoints(CaptainError):
    """Two poses share no jointly-present joints."""


class EmptyTaken(CaptainError):
    """Shot selection received no candidate shots."""


class EmptyPreferred(CaptainError):
    """Shot selection requires a non-empty preferred pose set."""


class EmptySession(CaptainError):
    """Favorite-shot selection requires a style set and candidate shots."""
