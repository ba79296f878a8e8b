"""Exception types shared across the toolkit."""


class NarrkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(NarrkitError):
    """Invalid or inconsistent configuration."""


class CorpusFormatError(NarrkitError):
    """A corpus artifact on disk is malformed or has the wrong magic."""


class AnnotationParseError(NarrkitError):
    """An external mention annotation file could not be parsed."""

    def __init__(self, line_no, message):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class MentionOverlapError(NarrkitError):
    """Two mention spans overlap, so replacement is ambiguous."""


class VocabularyError(NarrkitError):
    """Vocabulary construction failed (e.g. nothing survives min_count)."""


class DimensionMismatchError(NarrkitError):
    """Embedding matrices or vectors with incompatible shapes."""


class NumericOverflowError(NarrkitError):
    """A non-finite value appeared where a finite one is required."""


class ZeroVectorError(NarrkitError):
    """Cosine distance is undefined for a zero-norm vector."""


class UnknownCharacterError(NarrkitError):
    """A character canonical has no row in the vocabulary."""


class EmbeddingFormatError(NarrkitError):
    """An embedding file on disk is malformed."""


class DatasetFormatError(NarrkitError):
    """A relation dataset JSONL file is malformed."""

    def __init__(self, line_no, message):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class MissingArtifactError(NarrkitError):
    """A pipeline stage needs an artifact an earlier stage has not produced."""
