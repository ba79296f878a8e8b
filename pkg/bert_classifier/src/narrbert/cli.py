"""Command line interface: finetune and predict."""

from __future__ import annotations

import sys

import click

from .errors import ClassifierError, ConfigError
from .model import FinetuneConfig, finetune, predict


def _quiet_transformers() -> None:
    import transformers

    transformers.logging.set_verbosity_error()
    transformers.logging.disable_progress_bar()


@click.group()
def main():
    """Transformer sentence classifier for character relation datasets."""
    _quiet_transformers()


def _fail(exc: BaseException, code: int):
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


@main.command("finetune")
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--base", default="bert-base-uncased", show_default=True)
@click.option("--lr", default=2e-5, show_default=True)
@click.option("--warmup", default=0.1, show_default=True)
@click.option("--epochs", default=10, show_default=True)
@click.option("--max-len", default=128, show_default=True)
@click.option("--batch-size", default=16, show_default=True)
@click.option("--seed", default=1, show_default=True)
@click.option("--device", default="cpu", show_default=True)
def finetune_cmd(data, out, base, lr, warmup, epochs, max_len, batch_size, seed, device):
    """Fine-tune a base checkpoint on a dataset JSONL file."""
    try:
        cfg = FinetuneConfig(
            learning_rate=lr, warmup_proportion=warmup, epochs=epochs,
            max_sequence_length=max_len, batch_size=batch_size, seed=seed,
        )
    except ValueError as e:
        _fail(ConfigError(str(e)), 2)
    losses: list[float] = []
    try:
        finetune(data, base, out, cfg, device=device, loss_sink=losses)
    except (ClassifierError, ValueError, OSError) as e:
        _fail(e, 1)
    for i, loss in enumerate(losses):
        click.echo(f"epoch {i}: mean loss {loss:.4f}")
    click.echo(f"saved model to {out}")


@main.command("predict")
@click.option("--model", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--batch-size", default=32, show_default=True)
@click.option("--max-len", default=None, type=int, help="Override the trained length.")
@click.option("--device", default="cpu", show_default=True)
def predict_cmd(model, data, out, batch_size, max_len, device):
    """Write exchange-format predictions for a dataset JSONL file."""
    try:
        preds = predict(
            model, data, out, batch_size=batch_size,
            max_sequence_length=max_len, device=device,
        )
    except (ClassifierError, ValueError, OSError) as e:
        _fail(e, 1)
    click.echo(f"{len(preds)} predictions -> {out}")


if __name__ == "__main__":
    main()
