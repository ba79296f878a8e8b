"""Dataset and prediction files.

Both formats are owned by the pipeline that produces the dataset; this
module reads and writes them without importing it.  Dataset rows are
JSON objects {"text", "c1", "c2", "label", "source", "sent_id"}, one
per line; prediction rows are {"sent_id", "source", "c1", "c2",
"pred"} with pred in {0, 1}, one per input row, order preserved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DatasetFormatError

_FIELDS = {"text", "c1", "c2", "label", "source", "sent_id"}


@dataclass(frozen=True)
class Sample:
    text: str
    c1: str
    c2: str
    label: int
    source: str
    sent_id: int


def _require(cond: bool, line_no: int, message: str) -> None:
    if not cond:
        raise DatasetFormatError(line_no, message)


def load_dataset(path) -> list[Sample]:
    """Read dataset JSONL; strict about keys and types, empty file ok."""
    out: list[Sample] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                _require(False, line_no, "blank line")
            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetFormatError(line_no, f"not valid JSON: {e}") from e
            _require(isinstance(row, dict), line_no, "row is not an object")
            _require(
                set(row) == _FIELDS,
                line_no,
                f"fields {sorted(row)} != {sorted(_FIELDS)}",
            )
            for key in ("text", "c1", "c2", "source"):
                _require(isinstance(row[key], str), line_no, f"{key} must be a string")
            label = row["label"]
            _require(
                isinstance(label, int)
                and not isinstance(label, bool)
                and label in (0, 1),
                line_no,
                f"label must be 0 or 1, got {label!r}",
            )
            sent_id = row["sent_id"]
            _require(
                isinstance(sent_id, int) and not isinstance(sent_id, bool),
                line_no,
                f"sent_id must be an integer, got {sent_id!r}",
            )
            out.append(
                Sample(
                    text=row["text"], c1=row["c1"], c2=row["c2"],
                    label=label, source=row["source"], sent_id=sent_id,
                )
            )
    return out


def write_predictions(path, samples, predictions) -> None:
    """One exchange-format row per sample, copying id fields verbatim."""
    if len(samples) != len(predictions):
        raise ValueError(f"{len(samples)} samples vs {len(predictions)} predictions")
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s, p in zip(samples, predictions):
            row = {
                "sent_id": s.sent_id, "source": s.source,
                "c1": s.c1, "c2": s.c2, "pred": int(p),
            }
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
