"""Fine-tuning and inference for the sentence relation classifier.

A pretrained bidirectional transformer gets a 2-label sequence
classification head; the pair placeholders are registered as special
tokens so they survive tokenization as single units.  The pooled CLS
embedding feeds the head.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from .data import load_dataset, write_predictions
from .errors import ModelMismatchError

SPECIAL_TOKENS = ("[CHAR1]", "[CHAR2]", "[CHAR]")

_MANIFEST = "finetune.json"


@dataclass(frozen=True)
class FinetuneConfig:
    learning_rate: float = 2e-5
    warmup_proportion: float = 0.1
    epochs: int = 10
    max_sequence_length: int = 128
    batch_size: int = 16
    seed: int = 1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.warmup_proportion <= 1.0:
            raise ValueError(
                f"warmup_proportion must be in [0, 1], got {self.warmup_proportion}"
            )
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.max_sequence_length < 2:
            raise ValueError(
                f"max_sequence_length must be >= 2, got {self.max_sequence_length}"
            )
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def _encode(tokenizer, texts, max_len: int, device: str):
    return tokenizer(
        texts, truncation=True, max_length=max_len, padding=True,
        return_tensors="pt",
    ).to(device)


def finetune(
    data_path,
    base,
    out_dir,
    cfg: FinetuneConfig = FinetuneConfig(),
    device: str = "cpu",
    loss_sink=None,
) -> Path:
    """Fine-tune `base` on a dataset JSONL file and save to out_dir."""
    samples = load_dataset(data_path)
    if len({s.label for s in samples}) < 2:
        raise ValueError("training data has a single class")

    torch.manual_seed(cfg.seed)
    tokenizer = AutoTokenizer.from_pretrained(str(base))
    tokenizer.add_special_tokens({"additional_special_tokens": list(SPECIAL_TOKENS)})
    model = AutoModelForSequenceClassification.from_pretrained(str(base), num_labels=2)
    model.resize_token_embeddings(len(tokenizer))
    model.to(device)

    steps_per_epoch = math.ceil(len(samples) / cfg.batch_size)
    total = cfg.epochs * steps_per_epoch
    if total > 0:
        optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)
        warm = int(cfg.warmup_proportion * total)

        def lr_factor(step: int) -> float:
            if step < warm:
                return (step + 1) / max(1, warm)
            return max(0.0, (total - step) / max(1, total - warm))

        scheduler = torch.optim.lr_scheduler.LambdaLR(optimizer, lr_factor)
        order_rng = torch.Generator().manual_seed(cfg.seed)
        model.train()
        for _ in range(cfg.epochs):
            order = torch.randperm(len(samples), generator=order_rng).tolist()
            epoch_loss = 0.0
            for k in range(0, len(samples), cfg.batch_size):
                batch = [samples[j] for j in order[k : k + cfg.batch_size]]
                enc = _encode(
                    tokenizer, [s.text for s in batch],
                    cfg.max_sequence_length, device,
                )
                labels = torch.tensor([s.label for s in batch], device=device)
                loss = model(**enc, labels=labels).loss
                loss.backward()
                optimizer.step()
                scheduler.step()
                optimizer.zero_grad()
                epoch_loss += loss.item() * len(batch)
            if loss_sink is not None:
                loss_sink.append(epoch_loss / len(samples))

    out_dir = Path(out_dir)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    manifest = {
        "base": str(base),
        "config": asdict(cfg),
        "n_samples": len(samples),
        "special_tokens": list(SPECIAL_TOKENS),
    }
    (out_dir / _MANIFEST).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out_dir


def predict(
    model_dir,
    data_path,
    out_path,
    batch_size: int = 32,
    max_sequence_length: int | None = None,
    device: str = "cpu",
) -> list[int]:
    """Classify every dataset row; write the exchange file, return preds."""
    samples = load_dataset(data_path)

    tokenizer = AutoTokenizer.from_pretrained(str(model_dir))
    model = AutoModelForSequenceClassification.from_pretrained(str(model_dir))
    n_emb = model.get_input_embeddings().num_embeddings
    if len(tokenizer) != n_emb:
        raise ModelMismatchError(
            f"tokenizer has {len(tokenizer)} tokens but the model embeds {n_emb}"
        )
    if max_sequence_length is None:
        manifest = Path(model_dir) / _MANIFEST
        if manifest.is_file():
            max_sequence_length = json.loads(manifest.read_text())["config"][
                "max_sequence_length"
            ]
        else:
            max_sequence_length = FinetuneConfig().max_sequence_length

    model.to(device)
    model.eval()
    preds: list[int] = []
    with torch.no_grad():
        for k in range(0, len(samples), batch_size):
            batch = samples[k : k + batch_size]
            enc = _encode(
                tokenizer, [s.text for s in batch], max_sequence_length, device
            )
            preds.extend(model(**enc).logits.argmax(dim=-1).tolist())
    write_predictions(out_path, samples, preds)
    return preds
