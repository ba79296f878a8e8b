"""Transformer sentence classifier for character relation datasets.

Drop-in replacement for the pipeline's baseline classifier: consumes
the dataset JSONL format, emits the prediction exchange format.
"""

from .data import Sample, load_dataset, write_predictions
from .errors import (
    ClassifierError,
    ConfigError,
    DatasetFormatError,
    ModelMismatchError,
)
from .model import SPECIAL_TOKENS, FinetuneConfig, finetune, predict

__version__ = "0.1.0"

__all__ = [
    "ClassifierError",
    "ConfigError",
    "DatasetFormatError",
    "FinetuneConfig",
    "ModelMismatchError",
    "SPECIAL_TOKENS",
    "Sample",
    "__version__",
    "finetune",
    "load_dataset",
    "predict",
    "write_predictions",
]
