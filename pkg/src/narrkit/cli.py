"""Pipeline command line.

Stages communicate only through files in the workspace, so each
subcommand can run in a fresh process.  Everything an artifact depends
on (config echo, input/output hashes) is recorded in run.json with
workspace-relative paths; two runs from identical inputs produce
byte-identical workspaces.

    workspace/
      corpus/    <book>.narr.json, <book>.resolved.narr.json
      clusters/  clusters.json, families.json
      emb/       static.w.emb, static.ctx.emb, temporal/
      traj/      distances.csv, projection.csv, *.svg
      dataset/   samples.jsonl, baseline.npz
      reports/   eval.json, crossval.json
      run.json
"""

from __future__ import annotations

import dataclasses
import functools
import hashlib
import json
import os
from pathlib import Path

import click
import numpy as np

from . import corpus as corpus_mod
from . import dealias as dealias_mod
from . import relations as rel
from . import trajectory as traj_mod
from .errors import ConfigError, MissingArtifactError, NarrkitError
from .sgns import (
    EmbeddingMatrices,
    TrainConfig,
    build_vocab,
    read_embeddings,
    train_static,
    write_embeddings,
)
from .temporal import InitScheme, corpus_digest, load_bundle, save_bundle, train_temporal

WORKSPACE_ENV = "NARRKIT_WORKSPACE"


# ---------------------------------------------------------------- config

@dataclasses.dataclass(frozen=True)
class DealiasOptions:
    eps_alias: float = 0.40
    eps_family: float = 0.60
    min_pts: int = 1
    mention_mode: str = "heuristic"
    annotations: dict | None = None


@dataclasses.dataclass(frozen=True)
class TemporalOptions:
    scheme: str = "dynamic"
    epochs: int = 5
    lr_start: float = 0.01
    lr_end: float = 0.0001


@dataclasses.dataclass(frozen=True)
class RelationsOptions:
    predictions: str | None = None


@dataclasses.dataclass(frozen=True)
class PipelineConfig:
    books: tuple[str, ...]
    workspace: str = "workspace"
    seed: int = 1
    slice_size: int = 10000
    anchor: str | None = None
    characters: tuple[str, ...] | None = None
    dealias: DealiasOptions = DealiasOptions()
    train: TrainConfig = TrainConfig()
    temporal: TemporalOptions = TemporalOptions()
    relations: RelationsOptions = RelationsOptions()


def _check_keys(d: dict, allowed, where: str) -> None:
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(unknown)}")


def _opt_int(d: dict, key: str, default: int, where: str) -> int:
    v = d.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"{where}.{key} must be an integer, got {v!r}")
    return v


def _opt_float(d: dict, key: str, default: float, where: str) -> float:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {v!r}")
    return float(v)


def _opt_str(d: dict, key: str, default, where: str):
    v = d.get(key, default)
    if v is not None and not isinstance(v, str):
        raise ConfigError(f"{where}.{key} must be a string, got {v!r}")
    return v


def parse_config(payload: dict) -> PipelineConfig:
    if not isinstance(payload, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(
        payload,
        {"books", "workspace", "seed", "slice_size", "anchor", "characters",
         "dealias", "train", "temporal", "relations"},
        "config",
    )
    books = payload.get("books")
    if (
        not isinstance(books, list)
        or not books
        or not all(isinstance(b, str) and b for b in books)
    ):
        raise ConfigError("config.books must be a non-empty list of paths")

    d = payload.get("dealias", {})
    if not isinstance(d, dict):
        raise ConfigError("config.dealias must be an object")
    _check_keys(d, {"eps_alias", "eps_family", "min_pts", "mention_mode", "annotations"}, "dealias")
    annotations = d.get("annotations")
    if annotations is not None and (
        not isinstance(annotations, dict)
        or not all(isinstance(k, str) and isinstance(v, str) for k, v in annotations.items())
    ):
        raise ConfigError("dealias.annotations must map book ids to file paths")
    dealias_opts = DealiasOptions(
        eps_alias=_opt_float(d, "eps_alias", 0.40, "dealias"),
        eps_family=_opt_float(d, "eps_family", 0.60, "dealias"),
        min_pts=_opt_int(d, "min_pts", 1, "dealias"),
        mention_mode=_opt_str(d, "mention_mode", "heuristic", "dealias"),
        annotations=annotations,
    )
    if dealias_opts.mention_mode not in ("heuristic", "external"):
        raise ConfigError(f"dealias.mention_mode must be heuristic or external, got {dealias_opts.mention_mode!r}")
    if not (0 <= dealias_opts.eps_alias < dealias_opts.eps_family):
        raise ConfigError(
            f"need 0 <= eps_alias < eps_family, got {dealias_opts.eps_alias}, {dealias_opts.eps_family}"
        )
    if dealias_opts.min_pts < 1:
        raise ConfigError(f"dealias.min_pts must be >= 1, got {dealias_opts.min_pts}")

    t = payload.get("train", {})
    if not isinstance(t, dict):
        raise ConfigError("config.train must be an object")
    _check_keys(
        t,
        {"dim", "window", "negatives", "epochs", "lr_start", "lr_end",
         "min_count", "subsample_threshold"},
        "train",
    )
    sub = t.get("subsample_threshold")
    if sub is not None and (isinstance(sub, bool) or not isinstance(sub, (int, float))):
        raise ConfigError(f"train.subsample_threshold must be a number or null, got {sub!r}")
    try:
        train_cfg = TrainConfig(
            dim=_opt_int(t, "dim", 100, "train"),
            window=_opt_int(t, "window", 5, "train"),
            negatives=_opt_int(t, "negatives", 5, "train"),
            epochs=_opt_int(t, "epochs", 5, "train"),
            lr_start=_opt_float(t, "lr_start", 0.025, "train"),
            lr_end=_opt_float(t, "lr_end", 0.0001, "train"),
            min_count=_opt_int(t, "min_count", 5, "train"),
            subsample_threshold=None if sub is None else float(sub),
        )
    except ValueError as e:
        raise ConfigError(f"train: {e}")

    tp = payload.get("temporal", {})
    if not isinstance(tp, dict):
        raise ConfigError("config.temporal must be an object")
    _check_keys(tp, {"scheme", "epochs", "lr_start", "lr_end"}, "temporal")
    temporal_opts = TemporalOptions(
        scheme=_opt_str(tp, "scheme", "dynamic", "temporal"),
        epochs=_opt_int(tp, "epochs", 5, "temporal"),
        lr_start=_opt_float(tp, "lr_start", 0.01, "temporal"),
        lr_end=_opt_float(tp, "lr_end", 0.0001, "temporal"),
    )
    if temporal_opts.scheme not in ("static", "dynamic"):
        raise ConfigError(f"temporal.scheme must be static or dynamic, got {temporal_opts.scheme!r}")

    r = payload.get("relations", {})
    if not isinstance(r, dict):
        raise ConfigError("config.relations must be an object")
    _check_keys(r, {"predictions"}, "relations")
    relations_opts = RelationsOptions(predictions=_opt_str(r, "predictions", None, "relations"))

    characters = payload.get("characters")
    if characters is not None and (
        not isinstance(characters, list) or not all(isinstance(c, str) for c in characters)
    ):
        raise ConfigError("config.characters must be a list of canonicals")

    cfg = PipelineConfig(
        books=tuple(books),
        workspace=_opt_str(payload, "workspace", "workspace", "config"),
        seed=_opt_int(payload, "seed", 1, "config"),
        slice_size=_opt_int(payload, "slice_size", 10000, "config"),
        anchor=_opt_str(payload, "anchor", None, "config"),
        characters=None if characters is None else tuple(characters),
        dealias=dealias_opts,
        train=train_cfg,
        temporal=temporal_opts,
        relations=relations_opts,
    )
    if cfg.slice_size < 1:
        raise ConfigError(f"slice_size must be >= 1, got {cfg.slice_size}")
    ids = [Path(b).stem for b in cfg.books]
    if len(set(ids)) != len(ids):
        raise ConfigError("book file names must be distinct (ids are derived from them)")
    return cfg


class Stage:
    """Resolved paths and manifest bookkeeping for one subcommand run."""

    def __init__(self, config_path: str, seed: int | None, workspace: str | None):
        p = Path(config_path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {config_path}")
        try:
            payload = json.loads(p.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise ConfigError(f"{config_path}: not valid JSON ({e})")
        cfg = parse_config(payload)
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=seed)
        self.cfg = cfg
        self.base = p.parent
        ws = workspace or os.environ.get(WORKSPACE_ENV) or cfg.workspace
        self.ws = (self.base / ws).resolve() if not Path(ws).is_absolute() else Path(ws)
        self.echo = dataclasses.asdict(cfg)

    # -- paths
    def book_path(self, book: str) -> Path:
        q = Path(book)
        return q if q.is_absolute() else self.base / q

    def book_ids(self) -> list[str]:
        return [Path(b).stem for b in self.cfg.books]

    def sub(self, name: str) -> Path:
        d = self.ws / name
        d.mkdir(parents=True, exist_ok=True)
        return d

    def rel(self, path: Path) -> str:
        return path.relative_to(self.ws).as_posix()

    # -- artifacts required from earlier stages
    def need(self, path: Path, hint: str) -> Path:
        if not path.exists():
            raise MissingArtifactError(
                f"missing {self.rel(path) if path.is_relative_to(self.ws) else path}; run `narrkit {hint}` first"
            )
        return path

    def load_docs(self, suffix: str, hint: str):
        docs = []
        for book_id in self.book_ids():
            path = self.need(self.ws / "corpus" / f"{book_id}{suffix}", hint)
            doc, slices = corpus_mod.load_corpus(path)
            docs.append((doc, slices, path))
        return docs

    def load_clusters(self):
        path = self.need(self.ws / "clusters" / "clusters.json", "dealias")
        return dealias_mod.load_clusters(path), path

    def load_families(self):
        path = self.need(self.ws / "clusters" / "families.json", "dealias")
        return dealias_mod.load_families(path), path

    def record(self, stage: str, inputs: dict[str, str], outputs: dict[str, str]) -> None:
        path = self.ws / "run.json"
        manifest = (
            json.loads(path.read_text(encoding="utf-8"))
            if path.exists()
            else {"stages": {}}
        )
        manifest["stages"][stage] = {
            "config": self.echo,
            "inputs": inputs,
            "outputs": outputs,
        }
        path.write_text(
            json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8"
        )


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _digests(stage: Stage, paths) -> dict[str, str]:
    return {stage.rel(p): _digest(p) for p in paths}


def _metrics_dict(m: rel.Metrics) -> dict:
    return {
        cls: dataclasses.asdict(getattr(m, cls))
        for cls in ("negative", "positive", "weighted")
    }


# ---------------------------------------------------------------- cli

def _common(fn):
    @click.option("--config", "-c", "config_path", required=True, metavar="FILE",
                  help="Pipeline config (JSON).")
    @click.option("--seed", type=int, default=None, help="Override config seed.")
    @click.option("--workspace", default=None, metavar="DIR",
                  help="Override workspace directory.")
    @functools.wraps(fn)
    def wrapper(config_path, seed, workspace, **kwargs):
        try:
            stage = Stage(config_path, seed, workspace)
            fn(stage, **kwargs)
        except ConfigError as e:
            click.echo(f"config error: {e}", err=True)
            raise SystemExit(2)
        except NarrkitError as e:
            click.echo(f"error: {e}", err=True)
            raise SystemExit(1)
        except OSError as e:
            click.echo(f"error: {e}", err=True)
            raise SystemExit(1)
    return wrapper


@click.group()
def main():
    """Character relationship modelling over narrative text."""


@main.command()
@_common
def ingest(stage: Stage):
    """Tokenise raw book text into corpus artifacts."""
    out_dir = stage.sub("corpus")
    inputs, outputs = {}, []
    for book in stage.cfg.books:
        src = stage.book_path(book)
        if not src.is_file():
            raise ConfigError(f"book not found: {book}")
        text = src.read_text(encoding="utf-8")
        doc = corpus_mod.document_from_text(Path(book).stem, text)
        if not doc.tokens:
            raise NarrkitError(f"empty document: {book}")
        dst = out_dir / f"{doc.id}.narr.json"
        corpus_mod.save_corpus(doc, dst)
        inputs[book] = _digest(src)
        outputs.append(dst)
        click.echo(f"{doc.id}: {len(doc.tokens)} tokens, {len(doc.sentences)} sentences")
    stage.record("ingest", inputs, _digests(stage, outputs))


@main.command()
@_common
def dealias(stage: Stage):
    """Cluster character aliases and collapse mentions."""
    docs = stage.load_docs(".narr.json", "ingest")
    opts = stage.cfg.dealias
    mentions = []
    for doc, _, _ in docs:
        ann = None
        if opts.mention_mode == "external":
            ann_map = opts.annotations or {}
            if doc.id not in ann_map:
                raise ConfigError(f"dealias.annotations has no entry for book '{doc.id}'")
            ann = stage.book_path(ann_map[doc.id])
        mentions.extend(dealias_mod.mention_candidates(doc, opts.mention_mode, ann))
    if not mentions:
        raise NarrkitError("no character mentions found")
    clusters = dealias_mod.build_clusters(mentions, opts.eps_alias, opts.min_pts)
    families = dealias_mod.family_clusters(
        clusters, opts.eps_family, opts.min_pts, opts.eps_alias
    )
    cl_dir = stage.sub("clusters")
    dealias_mod.save_clusters(clusters, cl_dir / "clusters.json")
    dealias_mod.save_families(families, cl_dir / "families.json")
    outputs = [cl_dir / "clusters.json", cl_dir / "families.json"]
    for doc, _, _ in docs:
        resolved = corpus_mod.replace_mentions(doc, clusters)
        slices = corpus_mod.slice_corpus(resolved, stage.cfg.slice_size)
        dst = stage.ws / "corpus" / f"{doc.id}.resolved.narr.json"
        corpus_mod.save_corpus(resolved, dst, slices)
        outputs.append(dst)
        click.echo(f"{doc.id}: {len(slices)} slices")
    click.echo(f"{len(clusters)} characters, {len(families)} families")
    stage.record(
        "dealias",
        _digests(stage, [p for _, _, p in docs]),
        _digests(stage, outputs),
    )


def _load_static(stage: Stage):
    w_path = stage.need(stage.ws / "emb" / "static.w.emb", "train-static")
    c_path = stage.need(stage.ws / "emb" / "static.ctx.emb", "train-static")
    w_tokens, W = read_embeddings(w_path)
    c_tokens, W_ctx = read_embeddings(c_path)
    if w_tokens != c_tokens:
        raise NarrkitError("static embedding files disagree on the vocabulary")
    return w_tokens, EmbeddingMatrices(W=W, W_ctx=W_ctx), [w_path, c_path]


def _full_stream(docs) -> list[str]:
    stream = []
    for doc, _, _ in docs:
        stream.extend(corpus_mod.doc_norms(doc))
    return stream


@main.command("train-static")
@_common
def train_static_cmd(stage: Stage):
    """Train whole-text embeddings."""
    docs = stage.load_docs(".resolved.narr.json", "dealias")
    clusters, cl_path = stage.load_clusters()
    stream = _full_stream(docs)
    cfg = dataclasses.replace(stage.cfg.train, seed=stage.cfg.seed)
    losses: list[float] = []
    vocab, M = train_static(
        stream, cfg, protected=frozenset(c.canonical for c in clusters), loss_sink=losses
    )
    emb_dir = stage.sub("emb")
    write_embeddings(emb_dir / "static.w.emb", vocab.tokens, M.W)
    write_embeddings(emb_dir / "static.ctx.emb", vocab.tokens, M.W_ctx)
    for k, loss in enumerate(losses):
        click.echo(f"epoch {k}: mean loss {loss:.4f}")
    click.echo(f"vocabulary {len(vocab)}, dim {cfg.dim}")
    stage.record(
        "train-static",
        _digests(stage, [p for _, _, p in docs] + [cl_path]),
        _digests(stage, [emb_dir / "static.w.emb", emb_dir / "static.ctx.emb"]),
    )


@main.command("train-temporal")
@_common
def train_temporal_cmd(stage: Stage):
    """Train per-slice embeddings over the frozen context matrix."""
    docs = stage.load_docs(".resolved.narr.json", "dealias")
    clusters, cl_path = stage.load_clusters()
    vocab = build_vocab(
        _full_stream(docs),
        stage.cfg.train.min_count,
        frozenset(c.canonical for c in clusters),
    )
    tokens, static, static_paths = _load_static(stage)
    if tokens != list(vocab.tokens):
        raise NarrkitError("static embeddings are stale; re-run train-static")
    streams = []
    for doc, slices, path in docs:
        if slices is None:
            raise MissingArtifactError(f"{stage.rel(path)} has no slices; re-run dealias")
        for sl in slices:
            streams.append(corpus_mod.slice_norms(doc, sl))
    opts = stage.cfg.temporal
    slice_cfg = dataclasses.replace(
        stage.cfg.train,
        epochs=opts.epochs,
        lr_start=opts.lr_start,
        lr_end=opts.lr_end,
        seed=stage.cfg.seed,
        freeze_context=True,
    )
    T = train_temporal(streams, static, vocab, InitScheme(opts.scheme), slice_cfg)
    bundle_dir = stage.ws / "emb" / "temporal"
    save_bundle(
        T, bundle_dir, InitScheme(opts.scheme), stage.cfg.slice_size, slice_cfg,
        corpus_hash=corpus_digest([p for _, _, p in docs]),
    )
    click.echo(f"{T.n_slices} slices trained ({opts.scheme} initialisation)")
    outputs = [bundle_dir / "manifest.json", bundle_dir / "ctx.emb"]
    outputs += [bundle_dir / f"slice_{t}.emb" for t in range(T.n_slices)]
    stage.record(
        "train-temporal",
        _digests(stage, [p for _, _, p in docs] + [cl_path] + static_paths),
        _digests(stage, outputs),
    )


def _resolve_characters(stage: Stage, clusters):
    canon = {c.canonical: c for c in clusters}
    anchor = stage.cfg.anchor
    if not anchor:
        raise ConfigError("config.anchor is required for trajectories")
    if anchor not in canon:
        raise ConfigError(f"anchor '{anchor}' is not a character canonical")
    if stage.cfg.characters is not None:
        others = [c for c in stage.cfg.characters if c != anchor]
        for c in others:
            if c not in canon:
                raise ConfigError(f"character '{c}' is not a character canonical")
    else:
        ranked = sorted(
            (c for c in clusters if c.canonical != anchor),
            key=lambda c: (-c.mention_count, c.canonical),
        )
        others = [c.canonical for c in ranked[:4]]
    if not others:
        raise ConfigError("no characters to track besides the anchor")
    return anchor, others


@main.command()
@_common
def trajectories(stage: Stage):
    """Per-slice distances to the anchor plus a 2-D projection."""
    clusters, cl_path = stage.load_clusters()
    bundle_dir = stage.need(stage.ws / "emb" / "temporal", "train-temporal")
    T, _ = load_bundle(bundle_dir)
    anchor, others = _resolve_characters(stage, clusters)
    series = traj_mod.distance_series(anchor, others, T)
    out_dir = stage.sub("traj")
    traj_mod.write_distance_csv(out_dir / "distances.csv", others, series)
    chars = [anchor] + others
    vectors = []
    labels = []
    for ch in chars:
        for t, W in enumerate(T.slices):
            vectors.append(traj_mod.character_vector(ch, W, T.vocab))
            labels.append((ch, t))
    proj = traj_mod.pca_project(vectors)
    traj_mod.write_projection_csv(out_dir / "projection.csv", labels, proj.coords)
    click.echo(f"tracked {', '.join(others)} against {anchor} over {T.n_slices} slices")
    stage.record(
        "trajectories",
        _digests(stage, [cl_path, bundle_dir / "manifest.json"]),
        _digests(stage, [out_dir / "distances.csv", out_dir / "projection.csv"]),
    )


@main.command()
@_common
def dataset(stage: Stage):
    """Build the distantly supervised relation dataset."""
    docs = stage.load_docs(".resolved.narr.json", "dealias")
    clusters, cl_path = stage.load_clusters()
    families, fam_path = stage.load_families()
    samples = []
    for doc, _, _ in docs:
        samples.extend(rel.extract_pair_sentences(doc, clusters))
    if not samples:
        raise NarrkitError("no sentences mention two characters")
    samples = rel.label_samples(samples, families, clusters)
    out_dir = stage.sub("dataset")
    rel.emit_dataset(samples, out_dir / "samples.jsonl")
    pos = sum(1 for s in samples if s.label)
    click.echo(f"{len(samples)} samples ({pos} positive, {len(samples) - pos} negative)")
    stage.record(
        "dataset",
        _digests(stage, [p for _, _, p in docs] + [cl_path, fam_path]),
        _digests(stage, [out_dir / "samples.jsonl"]),
    )


@main.command("train-baseline")
@_common
def train_baseline_cmd(stage: Stage):
    """Train the hashed n-gram logistic regression."""
    ds_path = stage.need(stage.ws / "dataset" / "samples.jsonl", "dataset")
    samples = rel.load_dataset(ds_path)
    try:
        model = rel.train_baseline(samples, stage.cfg.seed)
    except ValueError as e:
        raise NarrkitError(str(e))
    out = stage.ws / "dataset" / "baseline.npz"
    model.save(out)
    m = rel.evaluate(model.predict([s.text for s in samples]), [bool(s.label) for s in samples])
    click.echo(f"training F1 (weighted): {m.weighted.f1:.3f}")
    stage.record(
        "train-baseline", _digests(stage, [ds_path]), _digests(stage, [out])
    )


def _predictions_for(stage: Stage, samples, pred_path):
    if pred_path is None and stage.cfg.relations.predictions is not None:
        pred_path = stage.book_path(stage.cfg.relations.predictions)
    if pred_path is not None:
        pred_path = Path(pred_path)
        if not pred_path.is_file():
            raise ConfigError(f"predictions file not found: {pred_path}")
        rows = rel.read_predictions(pred_path)
        try:
            return rel.align_predictions(samples, rows), pred_path
        except ValueError as e:
            raise NarrkitError(str(e))
    model_path = stage.ws / "dataset" / "baseline.npz"
    if not model_path.is_file():
        raise ConfigError(
            "no predictions: pass --pred, set relations.predictions, or run `narrkit train-baseline`"
        )
    model = rel.SentenceClassifier.load(model_path)
    return model.predict([s.text for s in samples]), model_path


@main.command("eval")
@click.option("--pred", "pred_path", default=None, metavar="FILE",
              help="Prediction exchange file (JSONL); defaults to the baseline model.")
@_common
def eval_cmd(stage: Stage, pred_path):
    """Score predictions per sentence and per pair."""
    ds_path = stage.need(stage.ws / "dataset" / "samples.jsonl", "dataset")
    samples = rel.load_dataset(ds_path)
    preds, pred_src = _predictions_for(stage, samples, pred_path)
    gold = [bool(s.label) for s in samples]
    sent_metrics = rel.evaluate(preds, gold)
    bags = rel.bag_aggregate(samples, preds)
    gold_pairs = rel.pair_gold(samples)
    pair_metrics = rel.evaluate(
        [b.pair_label for b in bags], [g for _, g in gold_pairs]
    )
    report = {
        "sentence": _metrics_dict(sent_metrics),
        "pair": _metrics_dict(pair_metrics),
        "pairs": {
            "total": len(bags),
            "positive": sum(1 for _, g in gold_pairs if g),
            "negative": sum(1 for _, g in gold_pairs if not g),
        },
    }
    out_dir = stage.sub("reports")
    (out_dir / "eval.json").write_text(
        json.dumps(report, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    click.echo(
        f"sentence F1 (weighted): {sent_metrics.weighted.f1:.3f}  "
        f"pair F1 (weighted): {pair_metrics.weighted.f1:.3f}"
    )
    inputs = {}
    for p in (ds_path, Path(pred_src)):
        key = stage.rel(p) if p.is_relative_to(stage.ws) else str(p)
        inputs[key] = _digest(p)
    stage.record("eval", inputs, _digests(stage, [out_dir / "eval.json"]))


@main.command()
@_common
def crossval(stage: Stage):
    """Leave-one-book-out cross-validation of the baseline."""
    ds_path = stage.need(stage.ws / "dataset" / "samples.jsonl", "dataset")
    samples = rel.load_dataset(ds_path)
    try:
        report = rel.cross_validate(samples, rel.train_baseline, stage.cfg.seed)
    except ValueError as e:
        raise NarrkitError(str(e))
    click.echo(rel.render_report(report))
    payload = {
        "folds": {src: _metrics_dict(m) for src, m in report.folds},
        "skipped": list(report.skipped),
        "summary": {
            cls: {met: {"mean": mean, "stdev": std} for met, (mean, std) in mets.items()}
            for cls, mets in report.summary().items()
        },
    }
    out_dir = stage.sub("reports")
    (out_dir / "crossval.json").write_text(
        json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    stage.record(
        "crossval", _digests(stage, [ds_path]), _digests(stage, [out_dir / "crossval.json"])
    )


def _read_csv_rows(path: Path) -> list[list[str]]:
    lines = path.read_text(encoding="utf-8").splitlines()
    return [line.split(",") for line in lines[1:] if line]


@main.command()
@_common
def plot(stage: Stage):
    """Render SVG charts from the trajectory CSVs."""
    traj_dir = stage.ws / "traj"
    dist_csv = traj_dir / "distances.csv"
    proj_csv = traj_dir / "projection.csv"
    if not dist_csv.is_file() and not proj_csv.is_file():
        raise MissingArtifactError("no trajectory CSVs; run `narrkit trajectories` first")
    inputs, outputs = [], []
    if dist_csv.is_file():
        rows = _read_csv_rows(dist_csv)
        chars = []
        for _, ch, _ in rows:
            if ch not in chars:
                chars.append(ch)
        n_slices = max(int(r[0]) for r in rows) + 1
        series = np.zeros((len(chars), n_slices))
        for t, ch, v in rows:
            series[chars.index(ch), int(t)] = float(v)
        traj_mod.write_series_svg(traj_dir / "distances.svg", chars, series)
        inputs.append(dist_csv)
        outputs.append(traj_dir / "distances.svg")
    if proj_csv.is_file():
        rows = _read_csv_rows(proj_csv)
        labels = [(ch, int(t)) for t, ch, _, _ in rows]
        coords = np.array([[float(x), float(y)] for _, _, x, y in rows])
        traj_mod.write_projection_svg(traj_dir / "projection.svg", labels, coords)
        inputs.append(proj_csv)
        outputs.append(traj_dir / "projection.svg")
    click.echo("wrote " + ", ".join(stage.rel(p) for p in outputs))
    stage.record("plot", _digests(stage, inputs), _digests(stage, outputs))


if __name__ == "__main__":
    main()
