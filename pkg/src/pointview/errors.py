"""Exception types shared across the toolkit."""


class PointViewError(Exception):
    """Base class for every error raised by this package."""


class EmptyCloudError(PointViewError):
    """An operation received or loaded a point cloud with no points."""


class ParseError(PointViewError):
    """A point-cloud file or manifest line could not be parsed."""


class FormatError(PointViewError):
    """A binary store, checkpoint, or image file violates its layout."""


class DomainError(PointViewError):
    """An argument is outside the operation's domain (shape, range, option)."""


class FeatureLookupError(PointViewError):
    """A precomputed feature store has no row for the requested key."""


class AlignmentError(PointViewError):
    """Two logits tables cannot be aligned for fusion."""
