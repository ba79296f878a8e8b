"""Character de-aliasing: mention detection, string distance, DBSCAN
clustering of aliases, and family grouping.

Alias clustering follows the classic density-based procedure over a
string distance derived from the longest-common-block decomposition
(Ratcliff/Obershelp).  Everything is deterministic: points are scanned
in ascending index order and cluster expansion is breadth-first.
"""

from __future__ import annotations

import json
import re
from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import HONORIFICS, Document
from .errors import AnnotationParseError

# Norm forms never treated as mention tokens even when capitalised
# (sentence-initial words, pronouns, honorifics, chapter headings).
DEFAULT_STOPWORDS = frozenset(
    """
    the a an and but or then he she it they we you i his her him hers my
    mine your yours their theirs our ours its this that these those there
    here when what who whom how why where not no yes oh ah well now so if
    as at by in on of to from with for into upon chapter
    mr mrs dr st prof
    """.split()
)

_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class Mention:
    """One detected character mention in a document."""

    surface: str
    token_span: tuple[int, int]
    sentence_index: int
    char_span: tuple[int, int]
    doc_id: str = ""


@dataclass(frozen=True)
class CharacterCluster:
    """A set of aliases naming one character."""

    id: int
    canonical: str
    aliases: frozenset[str]
    mentions: tuple[Mention, ...] = ()

    @property
    def mention_count(self) -> int:
        return len(self.mentions)


@dataclass(frozen=True)
class FamilyCluster:
    """A group of character clusters sharing a family name."""

    id: int
    members: frozenset[int] = field(default_factory=frozenset)


def _honorific_before(doc: Document, i: int) -> bool:
    # Walk back over the honorific's own period: "Mr . Potter".
    j = i - 1
    while j >= 0 and doc.tokens[j].surface == ".":
        j -= 1
    return j >= 0 and doc.tokens[j].surface in HONORIFICS


def _mention_from_run(doc: Document, s_idx: int, start: int, end: int) -> Mention:
    toks = doc.tokens[start:end]
    return Mention(
        surface=" ".join(t.surface for t in toks),
        token_span=(start, end),
        sentence_index=s_idx,
        char_span=(toks[0].char_offset, toks[-1].char_offset + len(toks[-1].surface)),
        doc_id=doc.id,
    )


def mention_candidates(
    doc: Document,
    mode: str = "heuristic",
    annotations=None,
    stopwords: frozenset[str] = DEFAULT_STOPWORDS,
) -> list[Mention]:
    """Detect character mentions in a document.

    heuristic mode: maximal runs of capitalised tokens within one
    sentence, skipping stopword norms; a capitalised sentence-initial
    token only counts when an honorific precedes it (so ordinary
    sentence case does not flood the candidate set).

    external mode: spans are read verbatim from an annotation file with
    one "start<TAB>end<TAB>surface" line per mention (token indices,
    half-open).
    """
    if mode == "external":
        return _parse_annotations(doc, annotations)
    if mode != "heuristic":
        raise ValueError(f"unknown mention mode '{mode}'")

    out: list[Mention] = []
    for s_idx, (a, b) in enumerate(doc.sentences):
        run_start = None
        for i in range(a, b):
            tok = doc.tokens[i]
            ok = (
                tok.norm != ""
                and tok.norm not in stopwords
                and tok.surface[:1].isupper()
            )
            if ok and i == a and not _honorific_before(doc, i):
                ok = False
            if ok:
                if run_start is None:
                    run_start = i
            elif run_start is not None:
                out.append(_mention_from_run(doc, s_idx, run_start, i))
                run_start = None
        if run_start is not None:
            out.append(_mention_from_run(doc, s_idx, run_start, b))
    return out


def _parse_annotations(doc: Document, path) -> list[Mention]:
    if path is None:
        raise AnnotationParseError(0, "external mode needs an annotation file")
    sent_starts = [a for a, _ in doc.sentences]
    out = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise AnnotationParseError(line_no, f"expected 3 tab-separated fields, got {len(parts)}")
        try:
            start, end = int(parts[0]), int(parts[1])
        except ValueError:
            raise AnnotationParseError(line_no, f"non-integer token span: {parts[0]!r}, {parts[1]!r}")
        if not (0 <= start < end <= len(doc.tokens)):
            raise AnnotationParseError(line_no, f"span [{start}, {end}) outside document")
        # Sentence holding the first token of the span.
        s_idx = 0
        for k, sa in enumerate(sent_starts):
            if sa <= start:
                s_idx = k
            else:
                break
        toks = doc.tokens[start:end]
        out.append(
            Mention(
                surface=parts[2],
                token_span=(start, end),
                sentence_index=s_idx,
                char_span=(toks[0].char_offset, toks[-1].char_offset + len(toks[-1].surface)),
                doc_id=doc.id,
            )
        )
    return out


def _longest_block(a: str, alo: int, ahi: int, b: str, blo: int, bhi: int):
    """Longest matching block of a[alo:ahi] vs b[blo:bhi]; earliest in a,
    then in b, on ties."""
    best_i, best_j, best = alo, blo, 0
    j2len: dict[int, int] = {}
    for i in range(alo, ahi):
        new: dict[int, int] = {}
        ch = a[i]
        for j in range(blo, bhi):
            if b[j] == ch:
                k = j2len.get(j - 1, 0) + 1
                new[j] = k
                if k > best:
                    best, best_i, best_j = k, i - k + 1, j - k + 1
        j2len = new
    return best_i, best_j, best


def _match_total(a: str, b: str) -> int:
    """Total matched characters of the recursive longest-block decomposition."""
    total = 0
    stack = [(0, len(a), 0, len(b))]
    while stack:
        alo, ahi, blo, bhi = stack.pop()
        if alo >= ahi or blo >= bhi:
            continue
        i, j, k = _longest_block(a, alo, ahi, b, blo, bhi)
        if k == 0:
            continue
        total += k
        stack.append((alo, i, blo, j))
        stack.append((i + k, ahi, j + k, bhi))
    return total


def seq_match_distance(a: str, b: str) -> float:
    """1 - 2M/(|a|+|b|) with M the matched total of the longest-block
    decomposition, case-insensitive.

    The pair is canonicalised (sorted) before decomposing, so the
    distance is symmetric by construction.  Two empty strings are at
    distance 0.
    """
    a, b = a.lower(), b.lower()
    if a > b:
        a, b = b, a
    if not a and not b:
        return 0.0
    return 1.0 - 2.0 * _match_total(a, b) / (len(a) + len(b))


def dbscan(items, dist, eps: float, min_pts: int):
    """Density clustering over an explicit pairwise distance function.

    Returns (clusters, noise) where clusters is a list of index sets in
    creation order and noise the set of unassigned indices.  A point is
    core iff its eps-neighbourhood (self included) holds >= min_pts
    points.  Scan order is ascending index, expansion is FIFO, so the
    outcome is deterministic: a border point joins the cluster whose
    seed index is lowest among those that reach it.
    """
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    if min_pts < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")
    n = len(items)
    neigh: list[list[int]] = [[i] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if dist(items[i], items[j]) <= eps:
                neigh[i].append(j)
                neigh[j].append(i)
    for lst in neigh:
        lst.sort()

    UNSEEN, NOISE = -1, -2
    label = [UNSEEN] * n
    clusters: list[set[int]] = []
    for i in range(n):
        if label[i] != UNSEEN:
            continue
        if len(neigh[i]) < min_pts:
            label[i] = NOISE
            continue
        cid = len(clusters)
        clusters.append({i})
        label[i] = cid
        queue = deque(j for j in neigh[i] if j != i)
        while queue:
            j = queue.popleft()
            if label[j] == NOISE:
                label[j] = cid
                clusters[cid].add(j)
                continue
            if label[j] != UNSEEN:
                continue
            label[j] = cid
            clusters[cid].add(j)
            if len(neigh[j]) >= min_pts:
                queue.extend(k for k in neigh[j] if label[k] in (UNSEEN, NOISE))
    noise = {i for i in range(n) if label[i] == NOISE}
    return clusters, noise


def canonical_form(surface: str) -> str:
    return _WS_RE.sub("_", surface.strip()).lower()


def build_clusters(
    mentions: list[Mention], eps_alias: float, min_pts: int = 1
) -> list[CharacterCluster]:
    """Cluster mention surfaces into characters.

    Points are the distinct surfaces in sorted order.  Noise surfaces
    become singleton clusters (a rare name is still a character).  The
    canonical is the most frequent alias (ties to the lexicographically
    smallest), lowercased with whitespace collapsed to underscores;
    collisions get a numeric suffix.
    """
    if not mentions:
        return []
    counts = Counter(m.surface for m in mentions)
    surfaces = sorted(counts)
    groups, noise = dbscan(surfaces, seq_match_distance, eps_alias, min_pts)
    all_groups = [sorted(g) for g in groups] + [[i] for i in sorted(noise)]

    by_surface: dict[str, list[Mention]] = {s: [] for s in surfaces}
    for m in mentions:
        by_surface[m.surface].append(m)

    out = []
    used: set[str] = set()
    for cid, idxs in enumerate(all_groups):
        aliases = [surfaces[i] for i in idxs]
        rep = min(aliases, key=lambda s: (-counts[s], s))
        canon = canonical_form(rep)
        if canon in used:
            k = 2
            while f"{canon}_{k}" in used:
                k += 1
            canon = f"{canon}_{k}"
        used.add(canon)
        ms = sorted(
            (m for s in aliases for m in by_surface[s]),
            key=lambda m: (m.doc_id, m.char_span),
        )
        out.append(
            CharacterCluster(
                id=cid, canonical=canon, aliases=frozenset(aliases), mentions=tuple(ms)
            )
        )
    return out


def cluster_representative(cluster: CharacterCluster) -> str:
    """Longest alias (ties to the lexicographically smallest); family
    names tend to survive only in the long forms."""
    return min(cluster.aliases, key=lambda s: (-len(s), s))


def family_clusters(
    clusters: list[CharacterCluster],
    eps_family: float,
    min_pts: int = 1,
    eps_alias: float | None = None,
) -> list[FamilyCluster]:
    """Group character clusters into families by re-clustering their
    longest aliases at a looser radius.  Noise points form no family."""
    if eps_alias is not None and eps_family <= eps_alias:
        raise ValueError(
            f"eps_family ({eps_family}) must exceed eps_alias ({eps_alias})"
        )
    if not clusters:
        return []
    reps = [cluster_representative(c) for c in clusters]
    groups, _ = dbscan(reps, seq_match_distance, eps_family, min_pts)
    return [
        FamilyCluster(id=k, members=frozenset(clusters[i].id for i in g))
        for k, g in enumerate(groups)
    ]


def save_clusters(clusters: list[CharacterCluster], path) -> None:
    payload = [
        {
            "id": c.id,
            "canonical": c.canonical,
            "aliases": sorted(c.aliases),
            "mentions": [
                {
                    "surface": m.surface,
                    "token_span": list(m.token_span),
                    "sentence_index": m.sentence_index,
                    "char_span": list(m.char_span),
                    "doc_id": m.doc_id,
                }
                for m in c.mentions
            ],
        }
        for c in clusters
    ]
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=1), encoding="utf-8"
    )


def load_clusters(path) -> list[CharacterCluster]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    out = []
    for c in payload:
        ms = tuple(
            Mention(
                surface=m["surface"],
                token_span=tuple(m["token_span"]),
                sentence_index=m["sentence_index"],
                char_span=tuple(m["char_span"]),
                doc_id=m["doc_id"],
            )
            for m in c["mentions"]
        )
        out.append(
            CharacterCluster(
                id=c["id"],
                canonical=c["canonical"],
                aliases=frozenset(c["aliases"]),
                mentions=ms,
            )
        )
    return out


def save_families(families: list[FamilyCluster], path) -> None:
    payload = [{"id": f.id, "members": sorted(f.members)} for f in families]
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


def load_families(path) -> list[FamilyCluster]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [FamilyCluster(id=f["id"], members=frozenset(f["members"])) for f in payload]
