"""Exception types shared across the package."""


class TruncQuantError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TruncQuantError):
    """An input value lies outside the operation's domain."""


class DegenerateInputError(TruncQuantError):
    """The input admits no meaningful normalization (e.g. zero range)."""


class PrecisionOrderError(TruncQuantError):
    """A bit-precision argument violates the required ordering."""


class ShapeError(TruncQuantError):
    """Array shapes do not match."""


class FormatError(TruncQuantError):
    """A file does not conform to the binary tensor format.

    ``offset`` is the byte offset at which parsing failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class TrainingError(TruncQuantError):
    """Training diverged or could not proceed."""
