"""Exception types shared across the package."""


class PqcError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PqcError):
    """A coordinate, square, or height lies outside the configured domain."""


class DimensionError(PqcError):
    """The operation is not available for the configured dimension."""


class DuplicatePointError(PqcError):
    """Identical coordinates were given where distinct points are required."""


class UnsortedInputError(PqcError):
    """An input sequence is not in increasing Morton order."""


class TruncatedStreamError(PqcError):
    """A bit stream ended in the middle of a code word."""


class CorruptPayloadError(PqcError):
    """A block payload failed to decode.

    ``block_index`` and ``bit_offset`` locate the failure when known.
    """

    def __init__(self, message, block_index=None, bit_offset=None):
        if block_index is not None:
            message = f"block {block_index}, bit offset {bit_offset}: {message}"
        super().__init__(message)
        self.block_index = block_index
        self.bit_offset = bit_offset


class FormatError(PqcError):
    """A persistent file is not a well-formed PQC1 file."""


class ParseError(PqcError):
    """A text input line could not be parsed."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class OutOfRangeError(PqcError):
    """A parsed value does not fit in the configured coordinate width."""


class RefineError(PqcError):
    """Refinement could not finish within its round budget."""


class GenerationError(PqcError):
    """Synthetic point-set generation failed its feasibility or post checks."""
