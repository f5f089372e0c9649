"""Exception types shared across the package."""


class MkgeError(Exception):
    """Base class for all package-specific errors."""


class DegenerateElement(MkgeError):
    """Normalization requested for an element with (near-)zero norm."""


class TagMismatch(MkgeError):
    """Binary operation on module elements of different kinds."""


class EmptyTuple(MkgeError):
    """Norm map applied to an empty tuple of elements."""


class NotUnit(MkgeError):
    """Group element expected to be unit-norm is not."""


class ZeroScaling(MkgeError):
    """GL(1) scaling by zero is not a group element."""


class LengthMismatch(MkgeError):
    """Tuple operands of different lengths."""


class ShapeMismatch(MkgeError):
    """Array shapes inconsistent with the parameter store."""


class NonFiniteLoss(MkgeError):
    """Training loss became NaN or Inf."""


class ParseError(MkgeError):
    """Malformed line in a triple file or config file."""


class MissingFile(MkgeError):
    """Expected dataset or checkpoint file not found."""


class DuplicateTriple(MkgeError):
    """The same triple appears twice within one split."""


class BadMagic(MkgeError):
    """Checkpoint file does not start with the expected magic bytes."""


class VersionUnsupported(MkgeError):
    """Checkpoint format version not handled by this build."""


class DigestMismatch(MkgeError):
    """Checkpoint config digest does not match the current setup."""
