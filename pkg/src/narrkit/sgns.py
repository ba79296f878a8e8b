"""Skip-gram with negative sampling, from scratch on numpy.

Two matrices are trained: W holds the word vectors, W_ctx the context
vectors.  The per-pair loss is

    -log sigma(w.c) - sum_neg log sigma(-w.c_neg)

optimised by plain SGD with a linearly decayed learning rate.  Matrices
are float32; dot products and the loss accumulate in float64.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmbeddingFormatError,
    NumericOverflowError,
    VocabularyError,
)

EMB_MAGIC = "NARR-EMB v1"

_NEG_RESAMPLE_LIMIT = 100


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr_start: float = 0.025
    lr_end: float = 0.0001
    min_count: int = 5
    subsample_threshold: float | None = None
    seed: int = 1
    freeze_context: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.negatives < 1:
            raise ValueError(f"negatives must be >= 1, got {self.negatives}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if not (self.lr_start >= self.lr_end >= 0.0):
            raise ValueError(
                f"need lr_start >= lr_end >= 0, got {self.lr_start}, {self.lr_end}"
            )
        if self.min_count < 1:
            raise ValueError(f"min_count must be >= 1, got {self.min_count}")
        if self.subsample_threshold is not None and self.subsample_threshold <= 0:
            raise ValueError("subsample_threshold must be positive when set")


@dataclass(frozen=True)
class Vocabulary:
    """Token-to-index map with counts and the negative-sampling
    distribution (counts**0.75, normalised)."""

    tokens: tuple[str, ...]
    counts: tuple[int, ...]
    index: dict[str, int]
    noise_weights: np.ndarray
    noise_cdf: np.ndarray

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def encode(self, tokens) -> np.ndarray:
        """Token ids of the in-vocabulary tokens, OOV dropped."""
        idx = self.index
        return np.array([idx[t] for t in tokens if t in idx], dtype=np.int64)


def build_vocab(tokens, min_count: int, protected=frozenset()) -> Vocabulary:
    """Count tokens and keep those with count >= min_count or listed in
    protected.  Order: count descending, then token ascending."""
    counts = Counter(t for t in tokens if t)
    kept = [t for t, c in counts.items() if c >= min_count or t in protected]
    if not kept:
        raise VocabularyError(
            f"no token reaches min_count={min_count}; vocabulary would be empty"
        )
    kept.sort(key=lambda t: (-counts[t], t))
    cvec = np.array([counts[t] for t in kept], dtype=np.float64)
    weights = cvec**0.75
    weights /= weights.sum()
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return Vocabulary(
        tokens=tuple(kept),
        counts=tuple(int(counts[t]) for t in kept),
        index={t: i for i, t in enumerate(kept)},
        noise_weights=weights,
        noise_cdf=cdf,
    )


@dataclass
class EmbeddingMatrices:
    W: np.ndarray
    W_ctx: np.ndarray

    def __post_init__(self):
        if self.W.shape != self.W_ctx.shape:
            raise DimensionMismatchError(
                f"W {self.W.shape} and W_ctx {self.W_ctx.shape} differ in shape"
            )

    @property
    def dim(self) -> int:
        return self.W.shape[1]


def init_matrices(vocab_size: int, dim: int, rng: np.random.Generator) -> EmbeddingMatrices:
    """W uniform in [-0.5/dim, 0.5/dim), W_ctx all zeros."""
    W = ((rng.random((vocab_size, dim)) - 0.5) / dim).astype(np.float32)
    W_ctx = np.zeros((vocab_size, dim), dtype=np.float32)
    return EmbeddingMatrices(W=W, W_ctx=W_ctx)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _softplus(x):
    # log(1 + e^x), stable on both tails
    return np.logaddexp(0.0, x)


def sgns_gradients(M: EmbeddingMatrices, center: int, context: int, negatives):
    """Loss and exact gradients for one (center, context, negatives) step.

    Returns (loss, g_w, g_ctx, g_negs) where g_negs has one row per
    negative index, in order.  Dot products accumulate in float64.
    """
    w = M.W[center]
    c = M.W_ctx[context]
    neg_idx = np.asarray(negatives, dtype=np.int64)
    C_neg = M.W_ctx[neg_idx]

    pos_dot = np.sum(w * c, dtype=np.float64)
    neg_dots = np.sum(C_neg * w, axis=1, dtype=np.float64)
    if not (np.isfinite(pos_dot) and np.all(np.isfinite(neg_dots))):
        raise NumericOverflowError(
            f"non-finite dot product at center={center}, context={context}"
        )

    loss = float(_softplus(-pos_dot) + np.sum(_softplus(neg_dots)))

    g_pos = _sigmoid(pos_dot) - 1.0
    g_negs_scalar = _sigmoid(neg_dots)
    g_w = g_pos * c + g_negs_scalar @ C_neg
    g_ctx = g_pos * w
    g_negs = np.outer(g_negs_scalar, w)
    return loss, g_w, g_ctx, g_negs


def sgns_step(
    center: int,
    context: int,
    negatives,
    M: EmbeddingMatrices,
    lr: float,
    freeze_context: bool = False,
) -> float:
    """One SGD step on M in place; returns the pre-update loss.

    Duplicate negative indices accumulate their gradients.  With
    freeze_context, W_ctx is left untouched byte for byte.
    """
    loss, g_w, g_ctx, g_negs = sgns_gradients(M, center, context, negatives)
    M.W[center] -= lr * g_w
    if not freeze_context:
        neg_idx = np.asarray(negatives, dtype=np.int64)
        M.W_ctx[context] -= lr * g_ctx
        np.subtract.at(M.W_ctx, neg_idx, lr * g_negs)
    return loss


def draw_negatives(vocab: Vocabulary, k: int, rng: np.random.Generator) -> np.ndarray:
    """k indices sampled from the noise distribution (with replacement)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return np.searchsorted(vocab.noise_cdf, rng.random(k), side="right").astype(np.int64)


def _subsample(stream: np.ndarray, vocab: Vocabulary, threshold: float, rng) -> np.ndarray:
    freqs = np.array(vocab.counts, dtype=np.float64)
    freqs /= freqs.sum()
    keep = np.minimum(1.0, np.sqrt(threshold / freqs))
    return stream[rng.random(len(stream)) < keep[stream]]


def _pair_count(length: int, window: int) -> int:
    total = 0
    for i in range(length):
        total += min(i + window, length - 1) - max(i - window, 0)
    return total


def _train_epochs(
    M: EmbeddingMatrices,
    stream: np.ndarray,
    vocab: Vocabulary,
    cfg: TrainConfig,
    rng: np.random.Generator,
    loss_sink=None,
) -> None:
    """cfg.epochs passes over all (center, context) pairs of the stream.

    The learning rate decays linearly from lr_start to lr_end over the
    planned step budget (epochs x pairs of the unsubsampled stream).
    Negatives colliding with the context are redrawn; a pair is skipped
    if no clean draw shows up within the retry limit.
    """
    planned = cfg.epochs * _pair_count(len(stream), cfg.window)
    if planned == 0:
        for _ in range(cfg.epochs):
            if loss_sink is not None:
                loss_sink.append(0.0)
        return
    lr_span = cfg.lr_start - cfg.lr_end
    step = 0
    for _ in range(cfg.epochs):
        if cfg.subsample_threshold is not None:
            epoch_stream = _subsample(stream, vocab, cfg.subsample_threshold, rng)
        else:
            epoch_stream = stream
        L = len(epoch_stream)
        epoch_loss = 0.0
        pairs = 0
        for i in range(L):
            center = int(epoch_stream[i])
            lo = 0 if i < cfg.window else i - cfg.window
            hi = min(L, i + cfg.window + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                context = int(epoch_stream[j])
                negs = draw_negatives(vocab, cfg.negatives, rng)
                tries = 0
                while context in negs:
                    tries += 1
                    if tries >= _NEG_RESAMPLE_LIMIT:
                        break
                    negs = draw_negatives(vocab, cfg.negatives, rng)
                if context in negs:
                    step += 1
                    continue
                lr = cfg.lr_start - lr_span * min(step, planned) / planned
                epoch_loss += sgns_step(center, context, negs, M, lr, cfg.freeze_context)
                step += 1
                pairs += 1
        if loss_sink is not None:
            loss_sink.append(epoch_loss / pairs if pairs else 0.0)


def train_static(
    tokens,
    cfg: TrainConfig,
    protected=frozenset(),
    loss_sink=None,
) -> tuple[Vocabulary, EmbeddingMatrices]:
    """Train embeddings on the full token stream.

    protected tokens are kept in the vocabulary regardless of count
    (character canonicals must always get a vector).
    """
    vocab = build_vocab(tokens, cfg.min_count, protected)
    rng = np.random.default_rng(cfg.seed)
    M = init_matrices(len(vocab), cfg.dim, rng)
    stream = vocab.encode(tokens)
    _train_epochs(M, stream, vocab, cfg, rng, loss_sink)
    return vocab, M


def _fmt_float(x: np.floating) -> str:
    # Shortest representation that round-trips the float32 value.
    return repr(float(np.float32(x)))


def write_embeddings(path, tokens, matrix: np.ndarray) -> None:
    """Text format: "NARR-EMB v1 <count> <dim>" header, then one
    "token v1 .. vdim" line per row.  Values round-trip float32."""
    if len(tokens) != matrix.shape[0]:
        raise DimensionMismatchError(
            f"{len(tokens)} tokens vs {matrix.shape[0]} matrix rows"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{EMB_MAGIC} {len(tokens)} {matrix.shape[1]}\n")
        for tok, row in zip(tokens, matrix):
            fh.write(tok + " " + " ".join(_fmt_float(v) for v in row) + "\n")


def read_embeddings(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        parts = header.split(" ")
        if len(parts) != 4 or " ".join(parts[:2]) != EMB_MAGIC:
            raise EmbeddingFormatError(f"{path}: bad header {header!r}")
        try:
            count, dim = int(parts[2]), int(parts[3])
        except ValueError:
            raise EmbeddingFormatError(f"{path}: bad header {header!r}")
        tokens = []
        rows = np.empty((count, dim), dtype=np.float32)
        for r in range(count):
            line = fh.readline()
            if not line:
                raise EmbeddingFormatError(f"{path}: expected {count} rows, got {r}")
            fields = line.rstrip("\n").split(" ")
            if len(fields) != dim + 1:
                raise EmbeddingFormatError(f"{path}: row {r} has {len(fields) - 1} values, expected {dim}")
            tokens.append(fields[0])
            try:
                rows[r] = [float(v) for v in fields[1:]]
            except ValueError:
                raise EmbeddingFormatError(f"{path}: row {r} has a non-numeric value")
        if fh.readline():
            raise EmbeddingFormatError(f"{path}: trailing data after {count} rows")
    return tokens, rows


def mix_seed(seed: int, salt: int) -> int:
    """Deterministic seed derived from (seed, salt), splitmix64 style."""
    z = (seed * 0x9E3779B97F4A7C15 + salt + 0x632BE59BD9B4E019) % (1 << 64)
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) % (1 << 64)
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) % (1 << 64)
    return z ^ (z >> 31)
