"""Toolkit for modelling character relationships in narrative text.

Pipeline: tokenise books, de-alias character mentions, train static and
per-slice embeddings over a shared frozen context matrix, track
character distances across the narrative, and build a distantly
supervised relation dataset with a baseline classifier.
"""

from .corpus import (
    Document,
    Slice,
    Token,
    document_from_text,
    replace_mentions,
    slice_corpus,
    split_sentences,
    tokenize,
)
from .dealias import (
    CharacterCluster,
    FamilyCluster,
    Mention,
    build_clusters,
    dbscan,
    family_clusters,
    mention_candidates,
    seq_match_distance,
)
from .errors import NarrkitError
from .relations import (
    Metrics,
    RelationSample,
    SentenceClassifier,
    bag_aggregate,
    cross_validate,
    evaluate,
    extract_pair_sentences,
    train_baseline,
)
from .sgns import (
    EmbeddingMatrices,
    TrainConfig,
    Vocabulary,
    build_vocab,
    draw_negatives,
    sgns_gradients,
    sgns_step,
    train_static,
)
from .temporal import InitScheme, TemporalEmbeddings, train_slice, train_temporal
from .trajectory import (
    Projection2D,
    character_vector,
    cosine_distance,
    distance_series,
    pca_project,
)

__version__ = "0.1.0"

__all__ = [
    "CharacterCluster",
    "Document",
    "EmbeddingMatrices",
    "FamilyCluster",
    "InitScheme",
    "Mention",
    "Metrics",
    "NarrkitError",
    "Projection2D",
    "RelationSample",
    "SentenceClassifier",
    "Slice",
    "TemporalEmbeddings",
    "Token",
    "TrainConfig",
    "Vocabulary",
    "bag_aggregate",
    "build_clusters",
    "build_vocab",
    "character_vector",
    "cosine_distance",
    "cross_validate",
    "dbscan",
    "distance_series",
    "document_from_text",
    "draw_negatives",
    "evaluate",
    "extract_pair_sentences",
    "family_clusters",
    "mention_candidates",
    "pca_project",
    "replace_mentions",
    "seq_match_distance",
    "sgns_gradients",
    "sgns_step",
    "slice_corpus",
    "split_sentences",
    "tokenize",
    "train_baseline",
    "train_slice",
    "train_static",
    "train_temporal",
]
