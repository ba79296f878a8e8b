"""Tokenisation, sentence segmentation, mention replacement and corpus slicing.

A Document is an immutable view of one book: the raw text, its token
sequence and the sentence segmentation over token indices.  Slices are
contiguous token ranges used later for per-slice embedding training.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import CorpusFormatError, MentionOverlapError

CORPUS_MAGIC = "NARR1"

# Word tokens keep internal apostrophes and hyphens ("don't", "self-made");
# any other non-space character is a token of its own.
_TOKEN_RE = re.compile(r"\w+(?:['’-]\w+)*|[^\w\s]")
_NON_WORD_RE = re.compile(r"[^\w]+")

SENTENCE_TERMINALS = frozenset({".", "!", "?"})
# Abbreviations whose trailing period must not end a sentence.
HONORIFICS = frozenset({"Mr", "Mrs", "Dr", "St", "Prof"})
# Tokens allowed to trail a terminal inside the same sentence (closing
# quotes and brackets, plus further terminals such as "?!").
_TRAILERS = frozenset({'"', "'", "”", "’", ")", "]"}) | SENTENCE_TERMINALS


@dataclass(frozen=True)
class Token:
    """One token: raw surface, normalised form, entity flag, char offset."""

    surface: str
    norm: str
    is_entity: bool = False
    char_offset: int = 0


@dataclass(frozen=True)
class Document:
    """A tokenised book with its sentence segmentation."""

    id: str
    raw: str
    tokens: tuple[Token, ...]
    sentences: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Slice:
    """A contiguous token range [start, end) of a document."""

    index: int
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad slice range [{self.start}, {self.end})")


def norm_form(surface: str) -> str:
    """Lowercased surface with every non-word character removed.

    Pure punctuation normalises to the empty string.
    """
    return _NON_WORD_RE.sub("", surface).lower()


def tokenize(text: str) -> list[Token]:
    """Split raw text into tokens, recording character offsets."""
    out = []
    for m in _TOKEN_RE.finditer(text):
        s = m.group(0)
        out.append(Token(surface=s, norm=norm_form(s), char_offset=m.start()))
    return out


def split_sentences(tokens: list[Token] | tuple[Token, ...]) -> list[tuple[int, int]]:
    """Segment a token sequence into sentence ranges.

    A sentence ends at ".", "!" or "?" unless the period directly follows
    an honorific.  Runs of terminals and closing quotes/brackets are kept
    with the sentence they close.  The returned half-open ranges partition
    [0, len(tokens)).
    """
    n = len(tokens)
    out: list[tuple[int, int]] = []
    start = 0
    i = 0
    while i < n:
        surf = tokens[i].surface
        if surf in SENTENCE_TERMINALS:
            if surf == "." and i > 0 and tokens[i - 1].surface in HONORIFICS:
                i += 1
                continue
            j = i + 1
            while j < n and tokens[j].surface in _TRAILERS:
                j += 1
            out.append((start, j))
            start = j
            i = j
        else:
            i += 1
    if start < n:
        out.append((start, n))
    return out


def document_from_text(doc_id: str, text: str) -> Document:
    toks = tokenize(text)
    sents = split_sentences(toks)
    return Document(id=doc_id, raw=text, tokens=tuple(toks), sentences=tuple(sents))


def validate_document(doc: Document) -> None:
    """Assert the sentence ranges partition the token sequence."""
    pos = 0
    for a, b in doc.sentences:
        if a != pos or b <= a:
            raise CorpusFormatError(f"sentence ranges do not partition tokens at {a}")
        pos = b
    if pos != len(doc.tokens):
        raise CorpusFormatError("sentence ranges do not cover the token sequence")


def _collapse_spans(doc: Document, spans: list[tuple[int, int, str]]) -> Document:
    """Rebuild doc with each char span collapsed to one entity token.

    spans are (char_start, char_end, canonical), already sorted and
    non-overlapping.
    """
    new_tokens: list[Token] = []
    # new_index[i] = position of old token i in the new sequence; one extra
    # slot at the end so sentence ranges can be remapped uniformly.
    new_index = [0] * (len(doc.tokens) + 1)
    si = 0
    cur_span = spans[0] if spans else None
    open_span = None  # span currently being collapsed
    for i, tok in enumerate(doc.tokens):
        t0 = tok.char_offset
        t1 = t0 + len(tok.surface)
        while cur_span is not None and cur_span[1] <= t0:
            si += 1
            cur_span = spans[si] if si < len(spans) else None
            open_span = None
        if cur_span is not None and t0 < cur_span[1] and t1 > cur_span[0]:
            if open_span is not cur_span:
                a, b, canon = cur_span
                new_index[i] = len(new_tokens)
                new_tokens.append(
                    Token(surface=doc.raw[a:b], norm=canon, is_entity=True, char_offset=a)
                )
                open_span = cur_span
            else:
                new_index[i] = len(new_tokens) - 1
        else:
            new_index[i] = len(new_tokens)
            new_tokens.append(tok)
    new_index[len(doc.tokens)] = len(new_tokens)

    new_sents = []
    for a, b in doc.sentences:
        na, nb = new_index[a], new_index[b]
        if nb > na:
            new_sents.append((na, nb))
    return replace(doc, tokens=tuple(new_tokens), sentences=tuple(new_sents))


def replace_mentions(doc: Document, clusters) -> Document:
    """Collapse every cluster mention in doc to a single entity token.

    The entity token keeps the raw surface of the span and carries the
    cluster canonical as its norm.  Mentions of other documents (by
    doc_id) are ignored.  Overlapping spans raise MentionOverlapError.
    Applying the same clusters twice is a no-op: a collapsed span maps
    onto itself.
    """
    spans: list[tuple[int, int, str]] = []
    for cl in clusters:
        for m in cl.mentions:
            if m.doc_id and m.doc_id != doc.id:
                continue
            a, b = m.char_span
            if not (0 <= a < b <= len(doc.raw)):
                raise MentionOverlapError(
                    f"mention span [{a}, {b}) outside document '{doc.id}'"
                )
            spans.append((a, b, cl.canonical))
    if not spans:
        return doc
    spans.sort()
    deduped = [spans[0]]
    for s in spans[1:]:
        prev = deduped[-1]
        if s[0] == prev[0] and s[1] == prev[1] and s[2] == prev[2]:
            continue  # same mention listed twice
        if s[0] < prev[1]:
            raise MentionOverlapError(
                f"overlapping mention spans [{prev[0]}, {prev[1]}) and [{s[0]}, {s[1]})"
            )
        deduped.append(s)
    return _collapse_spans(doc, deduped)


def slice_corpus(doc: Document, slice_size: int) -> list[Slice]:
    """Partition the token sequence into consecutive slices of slice_size
    tokens; the final slice keeps the remainder."""
    if slice_size < 1:
        raise ValueError(f"slice_size must be >= 1, got {slice_size}")
    n = len(doc.tokens)
    out = []
    for k, start in enumerate(range(0, n, slice_size)):
        out.append(Slice(index=k, start=start, end=min(start + slice_size, n)))
    return out


def slice_norms(doc: Document, sl: Slice) -> list[str]:
    """Non-empty normalised tokens of one slice, in order."""
    return [t.norm for t in doc.tokens[sl.start : sl.end] if t.norm]


def doc_norms(doc: Document) -> list[str]:
    return [t.norm for t in doc.tokens if t.norm]


def save_corpus(doc: Document, path, slices: list[Slice] | None = None) -> None:
    payload = {
        "magic": CORPUS_MAGIC,
        "id": doc.id,
        "raw": doc.raw,
        "tokens": [[t.surface, t.norm, int(t.is_entity), t.char_offset] for t in doc.tokens],
        "sentences": [list(s) for s in doc.sentences],
        "slices": None if slices is None else [[s.index, s.start, s.end] for s in slices],
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, separators=(",", ":")), encoding="utf-8"
    )


def load_corpus(path) -> tuple[Document, list[Slice] | None]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CorpusFormatError(f"{path}: not a corpus file ({e})") from e
    if not isinstance(payload, dict) or payload.get("magic") != CORPUS_MAGIC:
        raise CorpusFormatError(f"{path}: missing {CORPUS_MAGIC} magic")
    try:
        tokens = tuple(
            Token(surface=s, norm=n, is_entity=bool(e), char_offset=o)
            for s, n, e, o in payload["tokens"]
        )
        sents = tuple((int(a), int(b)) for a, b in payload["sentences"])
        doc = Document(id=payload["id"], raw=payload["raw"], tokens=tokens, sentences=sents)
        raw_slices = payload["slices"]
        slices = (
            None
            if raw_slices is None
            else [Slice(index=i, start=a, end=b) for i, a, b in raw_slices]
        )
    except (KeyError, TypeError, ValueError) as e:
        raise CorpusFormatError(f"{path}: malformed corpus payload ({e})") from e
    return doc, slices
