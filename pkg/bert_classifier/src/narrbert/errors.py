"""Error types for the classifier package."""


class ClassifierError(Exception):
    """Base class for everything this package raises on purpose."""


class ConfigError(ClassifierError):
    """Invalid fine-tune settings or flags."""


class DatasetFormatError(ClassifierError):
    """A dataset JSONL line violates the exchange format."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        self.message = message
        super().__init__(f"line {line_no}: {message}")


class ModelMismatchError(ClassifierError):
    """Tokenizer and model weights in a directory disagree."""
