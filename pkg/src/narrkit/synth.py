"""Bundled synthetic corpora.

Tiny deterministic generators used by the tests and by the examples in
the README: a drift corpus where one character's closest companion
changes across slices, and separable relation datasets for the
baseline classifier.
"""

from __future__ import annotations

import numpy as np

from .relations import RelationSample
from .sgns import TrainConfig

# Each companion pair gets a private filler pool.  Proximity in the
# trained space comes from shared context distributions, not from mere
# adjacency, so the pools are what make x close to its companion.
_FILLERS_Y = ("road", "house", "night", "storm")
_FILLERS_Z = ("river", "field", "smoke", "lamp")

_NAMES = ("ada", "bram", "cora", "dinah", "edgar", "finn", "greta", "hugo")
_PLACES = ("mill", "orchard", "harbour", "meadow", "chapel", "market")
_POS_VERBS = ("embraced", "comforted", "defended", "nursed")
_NEG_VERBS = ("suspected", "avoided", "confronted", "ignored")
_POS_TAILS = ("for they were kin", "as family would", "like kin do")
_NEG_TAILS = ("as strangers do", "without a word", "from across the road")


def drift_streams(n_units: int = 80, seed: int = 0):
    """Three slice streams where x's companion drifts from y to z.

    Slice 0 pairs x with y over y's filler pool, slice 2 pairs x with z
    over z's pool.  Slice 1 still leans on y but flips every fourth
    unit to z; an even mix would park x at the midpoint, which sits
    slightly farther from y than the slice-2 endpoint does, breaking
    monotonicity.  Returns (slice_streams, full_stream).
    """
    rng = np.random.default_rng(seed)

    def unit(a: str, b: str, pool: tuple[str, ...]) -> list[str]:
        f1, f2 = rng.choice(len(pool), size=2)
        return [a, b, pool[f1], pool[f2]]

    s0 = [t for _ in range(n_units) for t in unit("x", "y", _FILLERS_Y)]
    s1 = [
        t
        for k in range(n_units)
        for t in (
            unit("x", "z", _FILLERS_Z) if k % 4 == 3 else unit("x", "y", _FILLERS_Y)
        )
    ]
    s2 = [t for _ in range(n_units) for t in unit("x", "z", _FILLERS_Z)]
    slices = [s0, s1, s2]
    return slices, [t for s in slices for t in s]


def drift_config() -> tuple[TrainConfig, TrainConfig]:
    """(static_cfg, slice_cfg) calibrated for the drift corpus."""
    static_cfg = TrainConfig(
        dim=16, window=2, negatives=3, epochs=3,
        lr_start=0.05, lr_end=0.001, min_count=1,
    )
    slice_cfg = TrainConfig(
        dim=16, window=2, negatives=3, epochs=10,
        lr_start=0.05, lr_end=0.001, min_count=1, freeze_context=True,
    )
    return static_cfg, slice_cfg


def drift_book(n_units: int = 100, seed: int = 0) -> str:
    """The drift corpus as raw narrative text for the full pipeline.

    Names are capitalised mid-sentence so the mention heuristic finds
    them; each slice-sized part tells the same story as drift_streams.
    """
    rng = np.random.default_rng(seed)

    def sentence(a: str, b: str, pool: tuple[str, ...]) -> str:
        f1, f2 = rng.choice(len(pool), size=2)
        return f"Then {a} met {b} by the {pool[f1]} and the {pool[f2]}."

    parts = []
    for k in range(n_units):
        parts.append(sentence("Xan", "Yor", _FILLERS_Y))
    for k in range(n_units):
        if k % 4 == 3:
            parts.append(sentence("Xan", "Zed", _FILLERS_Z))
        else:
            parts.append(sentence("Xan", "Yor", _FILLERS_Y))
    for k in range(n_units):
        parts.append(sentence("Xan", "Zed", _FILLERS_Z))
    return " ".join(parts) + "\n"


def drift_book_tokens_per_part(n_units: int = 100) -> int:
    # "Then A met B by the f and the f ." is 11 tokens.
    return 11 * n_units


def _sample_text(rng: np.random.Generator, positive: bool) -> str:
    verbs = _POS_VERBS if positive else _NEG_VERBS
    tails = _POS_TAILS if positive else _NEG_TAILS
    verb = verbs[rng.integers(len(verbs))]
    place = _PLACES[rng.integers(len(_PLACES))]
    tail = tails[rng.integers(len(tails))]
    return f"[CHAR1] {verb} [CHAR2] near the {place} {tail} ."


def separable_dataset(
    n: int = 200, seed: int = 0, source: str = "synth", noise: float = 0.0
) -> list[RelationSample]:
    """Balanced, (nearly) linearly separable relation samples.

    Positive sentences carry kin/family wording, negatives do not.
    noise flips that wiring for a fraction of samples, which keeps
    cross-validation tables away from a degenerate 100%.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        a, b = rng.choice(len(_NAMES), size=2, replace=False)
        c1, c2 = sorted((_NAMES[a], _NAMES[b]))
        label = i % 2 == 0
        wording = not label if rng.random() < noise else label
        out.append(
            RelationSample(
                text=_sample_text(rng, wording),
                c1=c1,
                c2=c2,
                label=label,
                source=source,
                sentence_index=i,
            )
        )
    return out


def crossval_sources(
    n_sources: int = 6, per_source: int = 30, seed: int = 0, noise: float = 0.1
) -> list[RelationSample]:
    """Multi-source dataset for leave-one-source-out cross-validation."""
    out = []
    for k in range(n_sources):
        out.extend(
            separable_dataset(
                n=per_source, seed=seed + 1000 * k, source=f"book{k}", noise=noise
            )
        )
    return out
