"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """A precondition on an argument was violated."""


class DegenerateInputError(ValueError):
    """No admissible decoding exists; ``frame`` is the first frame at fault."""

    def __init__(self, frame, message=None):
        self.frame = frame
        super().__init__(message or f"no admissible state at frame {frame}")


class FormatError(ValueError):
    """A file does not match the expected on-disk layout or content."""


class BatchDecodeError(RuntimeError):
    """One or more sequences in a batch failed.

    ``results`` holds the successful paths (``None`` where decoding failed)
    and ``errors`` maps sequence index to the exception raised for it.
    """

    def __init__(self, results, errors):
        self.results = results
        self.errors = errors
        detail = "; ".join(f"sequence {i}: {e}" for i, e in sorted(errors.items()))
        super().__init__(f"{len(errors)} of {len(results)} sequences failed ({detail})")
