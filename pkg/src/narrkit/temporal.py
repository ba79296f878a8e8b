"""Per-slice embeddings over a shared, frozen context matrix.

A static model is trained on the whole text first.  Each narrative
slice then gets its own word matrix W_t, trained with the static
context matrix held fixed so that all W_t live in a comparable space.
Initialisation is either the static W for every slice, or the previous
slice's result (dynamic chaining).
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, EmbeddingFormatError
from .sgns import (
    EmbeddingMatrices,
    TrainConfig,
    Vocabulary,
    _train_epochs,
    mix_seed,
    read_embeddings,
    write_embeddings,
)


class InitScheme(enum.Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


@dataclass
class TemporalEmbeddings:
    vocab: Vocabulary
    W_ctx: np.ndarray
    slices: list[np.ndarray]

    def __post_init__(self):
        for t, W in enumerate(self.slices):
            if W.shape != self.W_ctx.shape:
                raise DimensionMismatchError(
                    f"slice {t} matrix {W.shape} vs context {self.W_ctx.shape}"
                )

    @property
    def n_slices(self) -> int:
        return len(self.slices)


def train_slice(
    slice_tokens,
    vocab: Vocabulary,
    W_init: np.ndarray,
    W_ctx: np.ndarray,
    cfg: TrainConfig,
    loss_sink=None,
) -> np.ndarray:
    """Train one slice's word matrix against a frozen context matrix.

    W_init is copied, never written.  cfg must have freeze_context set;
    the global vocabulary (and so the global noise distribution) is
    reused for every slice.
    """
    if not cfg.freeze_context:
        raise ValueError("slice training requires freeze_context")
    if W_init.shape != W_ctx.shape:
        raise DimensionMismatchError(
            f"W_init {W_init.shape} vs W_ctx {W_ctx.shape}"
        )
    if W_init.shape != (len(vocab), cfg.dim):
        raise DimensionMismatchError(
            f"matrices {W_init.shape} vs vocabulary {(len(vocab), cfg.dim)}"
        )
    W_t = W_init.copy()
    M = EmbeddingMatrices(W=W_t, W_ctx=W_ctx)
    rng = np.random.default_rng(cfg.seed)
    stream = vocab.encode(slice_tokens)
    _train_epochs(M, stream, vocab, cfg, rng, loss_sink)
    return W_t


def train_temporal(
    slice_streams,
    static: EmbeddingMatrices,
    vocab: Vocabulary,
    scheme: InitScheme,
    cfg: TrainConfig,
    slice_seeds=None,
) -> TemporalEmbeddings:
    """Train one word matrix per slice over the shared context matrix.

    slice_streams is one token list per slice, in narrative order.
    STATIC initialises every slice from the static W (slices are then
    independent of each other); DYNAMIC initialises slice t from slice
    t-1 and so must run in order.  Per-slice seeds default to
    mix_seed(cfg.seed, t).
    """
    if not slice_streams:
        raise ValueError("need at least one slice")
    if slice_seeds is not None and len(slice_seeds) != len(slice_streams):
        raise ValueError(
            f"{len(slice_seeds)} seeds for {len(slice_streams)} slices"
        )
    cfg = replace(cfg, freeze_context=True)
    out: list[np.ndarray] = []
    prev = static.W
    for t, stream in enumerate(slice_streams):
        seed = slice_seeds[t] if slice_seeds is not None else mix_seed(cfg.seed, t)
        init = static.W if scheme is InitScheme.STATIC else prev
        W_t = train_slice(stream, vocab, init, static.W_ctx, replace(cfg, seed=seed))
        out.append(W_t)
        prev = W_t
    return TemporalEmbeddings(vocab=vocab, W_ctx=static.W_ctx, slices=out)


def save_bundle(
    T: TemporalEmbeddings,
    out_dir,
    scheme: InitScheme,
    slice_size: int,
    cfg: TrainConfig,
    corpus_hash: str = "",
) -> None:
    """Write ctx.emb, slice_<t>.emb and a manifest describing the run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tokens = list(T.vocab.tokens)
    write_embeddings(out / "ctx.emb", tokens, T.W_ctx)
    for t, W in enumerate(T.slices):
        write_embeddings(out / f"slice_{t}.emb", tokens, W)
    manifest = {
        "scheme": scheme.value,
        "n_slices": T.n_slices,
        "slice_size": slice_size,
        "counts": list(T.vocab.counts),
        "corpus_hash": corpus_hash,
        "train": {
            "dim": cfg.dim,
            "window": cfg.window,
            "negatives": cfg.negatives,
            "epochs": cfg.epochs,
            "lr_start": cfg.lr_start,
            "lr_end": cfg.lr_end,
            "min_count": cfg.min_count,
            "subsample_threshold": cfg.subsample_threshold,
            "seed": cfg.seed,
        },
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8"
    )


def load_bundle(bundle_dir) -> tuple[TemporalEmbeddings, dict]:
    d = Path(bundle_dir)
    manifest = json.loads((d / "manifest.json").read_text(encoding="utf-8"))
    tokens, W_ctx = read_embeddings(d / "ctx.emb")
    counts = manifest["counts"]
    if len(counts) != len(tokens):
        raise EmbeddingFormatError(
            f"{d}: manifest counts ({len(counts)}) do not match vocabulary ({len(tokens)})"
        )
    cvec = np.array(counts, dtype=np.float64)
    weights = cvec**0.75
    weights /= weights.sum()
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    vocab = Vocabulary(
        tokens=tuple(tokens),
        counts=tuple(int(c) for c in counts),
        index={t: i for i, t in enumerate(tokens)},
        noise_weights=weights,
        noise_cdf=cdf,
    )
    slices = []
    for t in range(manifest["n_slices"]):
        s_tokens, W = read_embeddings(d / f"slice_{t}.emb")
        if s_tokens != tokens:
            raise EmbeddingFormatError(f"{d}: slice {t} vocabulary differs from ctx.emb")
        slices.append(W)
    return TemporalEmbeddings(vocab=vocab, W_ctx=W_ctx, slices=slices), manifest


def corpus_digest(paths) -> str:
    """Stable hex digest over a list of artifact files (order given)."""
    h = hashlib.sha256()
    for p in paths:
        h.update(hashlib.sha256(Path(p).read_bytes()).digest())
    return h.hexdigest()
