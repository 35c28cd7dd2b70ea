"""Exception types shared across the toolkit."""


class ChatactError(Exception):
    """Base class for all toolkit errors (CLI maps these to exit code 2)."""


class TranscriptError(ChatactError):
    """Malformed transcript input."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class TaxonomyError(ChatactError):
    """Invalid taxonomy file or unknown label."""


class AnnotationError(ChatactError):
    """Annotation records that do not resolve against the corpus."""


class ModelError(ChatactError):
    """Model files or inputs that violate the model contract."""


class StoreError(ChatactError):
    """Project store content that is missing or inconsistent."""
