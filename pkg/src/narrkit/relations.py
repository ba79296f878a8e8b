"""Distantly supervised family-relation extraction.

Sentences mentioning two characters become samples with the pair masked
by placeholders; the label says whether the two belong to the same
family cluster.  A hashed-feature logistic regression gives a fast
baseline, evaluated per sentence and per pair (a pair is related if any
of its sentences is predicted related), with leave-one-book-out
cross-validation.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from .corpus import Document
from .errors import DatasetFormatError

log = logging.getLogger(__name__)

PLACEHOLDER_1 = "[CHAR1]"
PLACEHOLDER_2 = "[CHAR2]"
PLACEHOLDER_OTHER = "[CHAR]"

HASH_BUCKETS = 1 << 18
BASELINE_EPOCHS = 10
BASELINE_LR = 0.1
BASELINE_L2 = 1e-4


@dataclass(frozen=True)
class RelationSample:
    """One masked sentence for one character pair; c1 < c2 always."""

    text: str
    c1: str
    c2: str
    label: bool | None
    source: str
    sentence_index: int

    def __post_init__(self):
        if self.c1 >= self.c2:
            raise ValueError(f"pair not canonically ordered: {self.c1!r}, {self.c2!r}")


def extract_pair_sentences(doc: Document, clusters) -> list[RelationSample]:
    """One unlabeled sample per unordered character pair per sentence.

    The document must already have its mentions collapsed to entity
    tokens.  In each sample the first occurrence of either pair member
    becomes [CHAR1]/[CHAR2] (numbering follows the sorted pair); any
    further entity token, pair repeats included, becomes [CHAR].
    """
    known = {c.canonical for c in clusters}
    out = []
    for s_idx, (a, b) in enumerate(doc.sentences):
        present = []
        for t in doc.tokens[a:b]:
            if t.is_entity and t.norm in known and t.norm not in present:
                present.append(t.norm)
        if len(present) < 2:
            continue
        for c1, c2 in combinations(sorted(present), 2):
            words = []
            seen1 = seen2 = False
            for t in doc.tokens[a:b]:
                if not t.is_entity:
                    words.append(t.surface)
                elif t.norm == c1 and not seen1:
                    words.append(PLACEHOLDER_1)
                    seen1 = True
                elif t.norm == c2 and not seen2:
                    words.append(PLACEHOLDER_2)
                    seen2 = True
                else:
                    words.append(PLACEHOLDER_OTHER)
            out.append(
                RelationSample(
                    text=" ".join(words),
                    c1=c1,
                    c2=c2,
                    label=None,
                    source=doc.id,
                    sentence_index=s_idx,
                )
            )
    return out


def family_index(clusters, families) -> dict[str, int]:
    """canonical -> family id, for clusters that belong to a family."""
    by_id = {c.id: c.canonical for c in clusters}
    out = {}
    for f in families:
        for cid in f.members:
            out[by_id[cid]] = f.id
    return out


def auto_label(sample: RelationSample, families, clusters) -> RelationSample:
    """Label a sample by family co-membership of its pair."""
    fam = family_index(clusters, families)
    f1, f2 = fam.get(sample.c1), fam.get(sample.c2)
    return replace(sample, label=f1 is not None and f1 == f2)


def label_samples(samples, families, clusters) -> list[RelationSample]:
    fam = family_index(clusters, families)
    out = []
    for s in samples:
        f1, f2 = fam.get(s.c1), fam.get(s.c2)
        out.append(replace(s, label=f1 is not None and f1 == f2))
    return out


def emit_dataset(samples, path) -> None:
    """One JSON object per line: text, c1, c2, label (0/1), source,
    sent_id.  Every sample must be labeled."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in samples:
            if s.label is None:
                raise ValueError(f"unlabeled sample for pair ({s.c1}, {s.c2})")
            fh.write(
                json.dumps(
                    {
                        "text": s.text,
                        "c1": s.c1,
                        "c2": s.c2,
                        "label": int(s.label),
                        "source": s.source,
                        "sent_id": s.sentence_index,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_dataset(path) -> list[RelationSample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetFormatError(line_no, f"bad JSON ({e.msg})")
            if not isinstance(obj, dict):
                raise DatasetFormatError(line_no, "expected a JSON object")
            try:
                text, c1, c2 = obj["text"], obj["c1"], obj["c2"]
                label, source, sent_id = obj["label"], obj["source"], obj["sent_id"]
            except KeyError as e:
                raise DatasetFormatError(line_no, f"missing key {e.args[0]!r}")
            if not all(isinstance(v, str) for v in (text, c1, c2, source)):
                raise DatasetFormatError(line_no, "text/c1/c2/source must be strings")
            if label not in (0, 1) or isinstance(label, bool):
                raise DatasetFormatError(line_no, f"label must be 0 or 1, got {label!r}")
            if not isinstance(sent_id, int) or isinstance(sent_id, bool):
                raise DatasetFormatError(line_no, f"sent_id must be an integer, got {sent_id!r}")
            try:
                out.append(
                    RelationSample(
                        text=text, c1=c1, c2=c2, label=bool(label),
                        source=source, sentence_index=sent_id,
                    )
                )
            except ValueError as e:
                raise DatasetFormatError(line_no, str(e))
    return out


def fnv1a64(data: str) -> int:
    """64-bit FNV-1a over the UTF-8 bytes."""
    h = 0xCBF29CE484222325
    for byte in data.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) % (1 << 64)
    return h


def _feature_indices(text: str) -> np.ndarray:
    """Hashed unigram and bigram buckets of the whitespace-split,
    lowercased text (multiplicity kept)."""
    toks = text.lower().split()
    grams = toks + [a + "\x1f" + b for a, b in zip(toks, toks[1:])]
    return np.array([fnv1a64(g) & (HASH_BUCKETS - 1) for g in grams], dtype=np.int64)


@dataclass
class SentenceClassifier:
    """Logistic regression over hashed n-gram features."""

    w: np.ndarray
    b: float

    def decision(self, text: str) -> float:
        idx, cnt = np.unique(_feature_indices(text), return_counts=True)
        return float(self.w[idx] @ cnt + self.b) if idx.size else self.b

    def predict(self, texts) -> list[bool]:
        return [self.decision(t) > 0.0 for t in texts]

    def save(self, path) -> None:
        np.savez(path, w=self.w, b=np.float64(self.b), buckets=np.int64(HASH_BUCKETS))

    @classmethod
    def load(cls, path) -> "SentenceClassifier":
        data = np.load(path)
        if int(data["buckets"]) != HASH_BUCKETS:
            raise ValueError(f"model was trained with {int(data['buckets'])} buckets")
        return cls(w=data["w"], b=float(data["b"]))


def train_baseline(samples, seed: int = 1) -> SentenceClassifier:
    """SGD logistic regression; epochs, lr and L2 are fixed so two runs
    with the same seed produce identical weights."""
    labels = {s.label for s in samples}
    if labels != {True, False}:
        raise ValueError("training set must contain both classes")
    feats = [_feature_indices(s.text) for s in samples]
    cached = [np.unique(f, return_counts=True) for f in feats]
    y = np.array([1.0 if s.label else 0.0 for s in samples])
    w = np.zeros(HASH_BUCKETS, dtype=np.float64)
    b = 0.0
    rng = np.random.default_rng(seed)
    for _ in range(BASELINE_EPOCHS):
        for k in rng.permutation(len(samples)):
            idx, cnt = cached[k]
            z = w[idx] @ cnt + b if idx.size else b
            p = 1.0 / (1.0 + np.exp(-z))
            g = p - y[k]
            if idx.size:
                w[idx] -= BASELINE_LR * (g * cnt + BASELINE_L2 * w[idx])
            b -= BASELINE_LR * g
    return SentenceClassifier(w=w, b=b)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class Metrics:
    negative: ClassMetrics
    positive: ClassMetrics
    weighted: ClassMetrics


def _prf(tp: int, fp: int, fn: int, support: int) -> ClassMetrics:
    # Zero denominators count as zero scores, not errors.
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return ClassMetrics(precision=p, recall=r, f1=f, support=support)


def evaluate(pred, gold) -> Metrics:
    """Per-class precision/recall/F1 plus the support-weighted average."""
    if len(pred) != len(gold):
        raise ValueError(f"{len(pred)} predictions vs {len(gold)} gold labels")
    if not gold:
        raise ValueError("nothing to evaluate")
    tp = sum(1 for p, g in zip(pred, gold) if p and g)
    fp = sum(1 for p, g in zip(pred, gold) if p and not g)
    fn = sum(1 for p, g in zip(pred, gold) if not p and g)
    tn = len(gold) - tp - fp - fn
    pos = _prf(tp, fp, fn, tp + fn)
    neg = _prf(tn, fn, fp, tn + fp)
    n = len(gold)
    weighted = ClassMetrics(
        precision=(neg.precision * neg.support + pos.precision * pos.support) / n,
        recall=(neg.recall * neg.support + pos.recall * pos.support) / n,
        f1=(neg.f1 * neg.support + pos.f1 * pos.support) / n,
        support=n,
    )
    return Metrics(negative=neg, positive=pos, weighted=weighted)


@dataclass(frozen=True)
class PairPrediction:
    source: str
    c1: str
    c2: str
    sentence_predictions: tuple[bool, ...]

    @property
    def pair_label(self) -> bool:
        return any(self.sentence_predictions)


def group_pairs(samples, values) -> list[tuple[tuple[str, str, str], list]]:
    """Group per-sample values by (source, c1, c2), keys sorted."""
    if len(samples) != len(values):
        raise ValueError(f"{len(samples)} samples vs {len(values)} values")
    groups: dict[tuple[str, str, str], list] = {}
    for s, v in zip(samples, values):
        groups.setdefault((s.source, s.c1, s.c2), []).append(v)
    return [(k, groups[k]) for k in sorted(groups)]


def bag_aggregate(samples, sentence_predictions) -> list[PairPrediction]:
    """OR-combine sentence predictions into one prediction per pair."""
    if not samples:
        raise ValueError("nothing to aggregate")
    out = []
    for (source, c1, c2), preds in group_pairs(samples, sentence_predictions):
        out.append(
            PairPrediction(
                source=source, c1=c1, c2=c2, sentence_predictions=tuple(preds)
            )
        )
    return out


def pair_gold(samples) -> list[tuple[tuple[str, str, str], bool]]:
    """Gold pair labels (all sentences of a pair share the label)."""
    return [(k, any(v)) for k, v in group_pairs(samples, [bool(s.label) for s in samples])]


@dataclass(frozen=True)
class CrossValReport:
    folds: tuple[tuple[str, Metrics], ...]
    skipped: tuple[str, ...]

    def summary(self) -> dict[str, dict[str, tuple[float, float]]]:
        """(mean, sample stdev) per class and metric over folds."""
        out: dict[str, dict[str, tuple[float, float]]] = {}
        for cls in ("negative", "positive", "weighted"):
            out[cls] = {}
            for met in ("precision", "recall", "f1"):
                vals = np.array(
                    [getattr(getattr(m, cls), met) for _, m in self.folds]
                )
                mean = float(vals.mean())
                std = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
                out[cls][met] = (mean, std)
        return out


def cross_validate(samples, trainer, seed: int = 1) -> CrossValReport:
    """Leave-one-source-out cross-validation.

    trainer(train_samples, seed) -> model with .predict(texts).  The
    same seed goes to every fold, so identical folds give identical
    metrics.  Folds whose training half lacks a class are skipped with
    a warning.
    """
    sources = sorted({s.source for s in samples})
    if len(sources) < 2:
        raise ValueError(f"cross-validation needs >= 2 sources, got {len(sources)}")
    folds = []
    skipped = []
    for src in sources:
        train = [s for s in samples if s.source != src]
        test = [s for s in samples if s.source == src]
        if len({s.label for s in train}) < 2:
            log.warning("fold %r skipped: training half has a single class", src)
            skipped.append(src)
            continue
        model = trainer(train, seed)
        pred = model.predict([s.text for s in test])
        folds.append((src, evaluate(pred, [bool(s.label) for s in test])))
    if not folds:
        raise ValueError("every fold was skipped; labels are degenerate")
    return CrossValReport(folds=tuple(folds), skipped=tuple(skipped))


def render_report(report: CrossValReport) -> str:
    """Fixed-width table: one row per class, mean +/- stdev percentages."""
    summary = report.summary()
    rows = [("Negative", "negative"), ("Positive", "positive"), ("All", "weighted")]
    lines = [f"{'Samples':<10}{'Precision':>12}{'Recall':>12}{'F-score':>12}"]
    for name, key in rows:
        cells = []
        for met in ("precision", "recall", "f1"):
            mean, std = summary[key][met]
            cells.append(f"{mean * 100:.0f}±{std * 100:.0f}%")
        lines.append(f"{name:<10}{cells[0]:>12}{cells[1]:>12}{cells[2]:>12}")
    if report.skipped:
        lines.append("skipped folds: " + ", ".join(report.skipped))
    return "\n".join(lines)


def write_predictions(path, samples, predictions) -> None:
    """Prediction exchange file: one JSON object per line with sent_id,
    source, c1, c2 and pred (0/1), aligned with the dataset."""
    if len(samples) != len(predictions):
        raise ValueError(f"{len(samples)} samples vs {len(predictions)} predictions")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s, p in zip(samples, predictions):
            fh.write(
                json.dumps(
                    {
                        "sent_id": s.sentence_index,
                        "source": s.source,
                        "c1": s.c1,
                        "c2": s.c2,
                        "pred": int(p),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_predictions(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetFormatError(line_no, f"bad JSON ({e.msg})")
            for key in ("sent_id", "source", "c1", "c2", "pred"):
                if key not in obj:
                    raise DatasetFormatError(line_no, f"missing key {key!r}")
            if obj["pred"] not in (0, 1):
                raise DatasetFormatError(line_no, f"pred must be 0 or 1, got {obj['pred']!r}")
            out.append(obj)
    return out


def align_predictions(samples, pred_rows) -> list[bool]:
    """Match prediction rows to samples by (source, sent_id, c1, c2)."""
    table: dict[tuple, list[int]] = {}
    for row in pred_rows:
        key = (row["source"], row["sent_id"], row["c1"], row["c2"])
        table.setdefault(key, []).append(int(row["pred"]))
    out = []
    missing = 0
    for s in samples:
        key = (s.source, s.sentence_index, s.c1, s.c2)
        vals = table.get(key)
        if not vals:
            missing += 1
            continue
        out.append(bool(vals.pop(0)))
    if missing:
        raise ValueError(f"{missing} samples have no prediction")
    extra = sum(len(v) for v in table.values())
    if extra:
        raise ValueError(f"{extra} predictions match no sample")
    return out
