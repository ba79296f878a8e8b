"""Character trajectories: cosine distances across slices, a 2-D PCA
view of the slice vectors, and deterministic CSV/SVG emitters.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, UnknownCharacterError, ZeroVectorError
from .sgns import Vocabulary
from .temporal import TemporalEmbeddings

_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2",
)


def cosine_distance(u, v) -> float:
    """1 - cos(u, v) in float64, clipped to [0, 2]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionMismatchError(f"vector shapes {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("cosine distance undefined for a zero vector")
    d = 1.0 - float(np.dot(u, v) / (nu * nv))
    return min(2.0, max(0.0, d))


def _canonical(c) -> str:
    return getattr(c, "canonical", c)


def character_vector(c, W_t: np.ndarray, vocab: Vocabulary) -> np.ndarray:
    """Row of W_t for a character cluster (or canonical string)."""
    canon = _canonical(c)
    if canon not in vocab:
        raise UnknownCharacterError(f"character '{canon}' not in vocabulary")
    return W_t[vocab.index[canon]]


def distance_series(anchor, others, T: TemporalEmbeddings) -> np.ndarray:
    """Cosine distance to the anchor per slice; shape (len(others), n_slices)."""
    if not others:
        raise ValueError("need at least one character to track")
    out = np.empty((len(others), T.n_slices), dtype=np.float64)
    for t, W in enumerate(T.slices):
        a = character_vector(anchor, W, T.vocab)
        for r, c in enumerate(others):
            out[r, t] = cosine_distance(a, character_vector(c, W, T.vocab))
    return out


@dataclass(frozen=True)
class Projection2D:
    coords: np.ndarray      # (n, 2)
    components: np.ndarray  # (2, d), orthonormal rows
    mean: np.ndarray        # (d,)


def _power_iteration(C: np.ndarray, tol: float = 1e-9, max_iter: int = 10000):
    """Dominant eigenpair of a PSD matrix; deterministic all-ones start.

    Returns (eigenvalue, vector) or None when the iteration collapses
    (zero matrix or a start vector orthogonal to the range).
    """
    d = C.shape[0]
    v = np.ones(d) / np.sqrt(d)
    for _ in range(max_iter):
        w = C @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return None
        w /= nw
        if min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < tol:
            v = w
            break
        v = w
    lam = float(v @ C @ v)
    if lam <= 0.0:
        return None
    return lam, v


def _fix_sign(v: np.ndarray) -> np.ndarray:
    # Largest-magnitude entry made positive; first index wins ties.
    return -v if v[int(np.argmax(np.abs(v)))] < 0 else v


def _complete_basis(comps: list[np.ndarray], d: int) -> list[np.ndarray]:
    """Extend comps to 2 orthonormal vectors with the first standard
    basis directions that survive Gram-Schmidt."""
    out = list(comps)
    e = 0
    while len(out) < 2:
        if e >= d:
            raise DimensionMismatchError("cannot project vectors of dimension < 2")
        v = np.zeros(d)
        v[e] = 1.0
        e += 1
        for u in out:
            v = v - (v @ u) * u
        n = np.linalg.norm(v)
        if n > 1e-9:
            out.append(_fix_sign(v / n))
    return out


def pca_project(vectors) -> Projection2D:
    """Project vectors onto their top-2 principal directions.

    Power iteration with deflation; component signs are fixed so the
    largest-magnitude entry is positive.  Rank-deficient inputs fall
    back to a deterministic orthonormal completion, so the components
    are always a valid 2-D frame.
    """
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 3:
        raise ValueError(f"need at least 3 vectors, got shape {X.shape}")
    n, d = X.shape
    if d < 2:
        raise DimensionMismatchError("cannot project vectors of dimension < 2")
    mean = X.mean(axis=0)
    Xc = X - mean
    C = (Xc.T @ Xc) / (n - 1)
    scale = max(1.0, float(np.trace(C)))

    comps: list[np.ndarray] = []
    for _ in range(2):
        got = _power_iteration(C)
        if got is None:
            break
        lam, v = got
        if lam <= 1e-12 * scale:
            break
        comps.append(_fix_sign(v))
        C = C - lam * np.outer(v, v)
    comps = _complete_basis(comps, d)
    components = np.vstack(comps)
    return Projection2D(coords=Xc @ components.T, components=components, mean=mean)


def write_distance_csv(path, characters, series: np.ndarray) -> None:
    """Rows "slice,character,distance", grouped by character then slice,
    distances with 6 decimals."""
    if len(characters) != series.shape[0]:
        raise DimensionMismatchError(
            f"{len(characters)} characters vs {series.shape[0]} series rows"
        )
    if series.size == 0:
        raise ValueError("empty distance series")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("slice,character,distance\n")
        for r, ch in enumerate(characters):
            for t in range(series.shape[1]):
                fh.write(f"{t},{ch},{series[r, t]:.6f}\n")


def write_projection_csv(path, labels, coords: np.ndarray) -> None:
    """Rows "slice,character,x,y"; labels are (character, slice) pairs
    aligned with coords."""
    if len(labels) != coords.shape[0]:
        raise DimensionMismatchError(f"{len(labels)} labels vs {coords.shape[0]} points")
    if coords.size == 0:
        raise ValueError("empty projection")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("slice,character,x,y\n")
        for (ch, t), (x, y) in zip(labels, coords):
            fh.write(f"{t},{ch},{x:.6f},{y:.6f}\n")


def _svg_head(title: str) -> list[str]:
    return [
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="800" height="400" viewBox="0 0 800 400">',
        '<rect x="0" y="0" width="800" height="400" fill="white"/>',
        f'<text x="400" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>',
    ]


def _scale(vals, lo_px, hi_px):
    vmin, vmax = float(np.min(vals)), float(np.max(vals))
    if vmax == vmin:
        vmax = vmin + 1.0
    span = vmax - vmin
    vmin -= 0.05 * span
    vmax += 0.05 * span
    return lambda v: lo_px + (v - vmin) * (hi_px - lo_px) / (vmax - vmin)


def write_series_svg(path, characters, series: np.ndarray, title: str = "distance to anchor") -> None:
    """One polyline per character over slice index; fixed 800x400 frame."""
    if series.size == 0 or len(characters) != series.shape[0]:
        raise ValueError("empty or mismatched series")
    n_slices = series.shape[1]
    xs = _scale(np.arange(n_slices), 60, 770)
    ys = _scale(series, 370, 40)  # y axis points up
    parts = _svg_head(title)
    parts.append('<line x1="60" y1="370" x2="770" y2="370" stroke="black" stroke-width="1"/>')
    parts.append('<line x1="60" y1="370" x2="60" y2="40" stroke="black" stroke-width="1"/>')
    for t in range(n_slices):
        x = xs(t)
        parts.append(
            f'<text x="{x:.2f}" y="388" text-anchor="middle" font-family="sans-serif" font-size="10">{t}</text>'
        )
    lo, hi = float(np.min(series)), float(np.max(series))
    parts.append(
        f'<text x="55" y="373" text-anchor="end" font-family="sans-serif" font-size="10">{lo:.2f}</text>'
    )
    parts.append(
        f'<text x="55" y="44" text-anchor="end" font-family="sans-serif" font-size="10">{hi:.2f}</text>'
    )
    for r, ch in enumerate(characters):
        color = _PALETTE[r % len(_PALETTE)]
        pts = " ".join(f"{xs(t):.2f},{ys(series[r, t]):.2f}" for t in range(n_slices))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        ly = 40 + 16 * r
        parts.append(f'<line x1="640" y1="{ly}" x2="664" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(
            f'<text x="670" y="{ly + 4}" font-family="sans-serif" font-size="11">{ch}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def write_projection_svg(path, labels, coords: np.ndarray, title: str = "2-D projection") -> None:
    """Per-character polyline through its slice-ordered projected points."""
    if coords.size == 0 or len(labels) != coords.shape[0]:
        raise ValueError("empty or mismatched projection")
    xs = _scale(coords[:, 0], 60, 770)
    ys = _scale(coords[:, 1], 370, 40)
    by_char: dict[str, list[tuple[int, int]]] = {}
    for k, (ch, t) in enumerate(labels):
        by_char.setdefault(ch, []).append((t, k))
    parts = _svg_head(title)
    for r, ch in enumerate(sorted(by_char)):
        color = _PALETTE[r % len(_PALETTE)]
        pts = sorted(by_char[ch])
        coords_str = " ".join(f"{xs(coords[k, 0]):.2f},{ys(coords[k, 1]):.2f}" for _, k in pts)
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords_str}"/>'
        )
        for t, k in pts:
            parts.append(
                f'<circle cx="{xs(coords[k, 0]):.2f}" cy="{ys(coords[k, 1]):.2f}" r="3" fill="{color}"/>'
            )
        last = pts[-1][1]
        parts.append(
            f'<text x="{xs(coords[last, 0]) + 6:.2f}" y="{ys(coords[last, 1]):.2f}" font-family="sans-serif" font-size="11" fill="{color}">{ch}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
