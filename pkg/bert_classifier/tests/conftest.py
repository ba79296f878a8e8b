import json
import random

import pytest
import torch
import transformers
from tokenizers import BertWordPieceTokenizer
from transformers import BertConfig, BertModel, BertTokenizerFast

from narrbert import FinetuneConfig, finetune

transformers.logging.set_verbosity_error()
transformers.logging.disable_progress_bar()

_WORDS = (
    "embraced comforted defended nursed suspected avoided confronted ignored "
    "near the mill orchard harbour meadow chapel market for they were kin as "
    "family would like do strangers without a word from across road ."
).split()

_POS_VERBS = ("embraced", "comforted", "defended", "nursed")
_NEG_VERBS = ("suspected", "avoided", "confronted", "ignored")
_POS_TAILS = ("for they were kin", "as family would", "like kin do")
_NEG_TAILS = ("as strangers do", "without a word", "from across the road")
_PLACES = ("mill", "orchard", "harbour", "meadow", "chapel", "market")
_NAMES = ("ada", "bram", "cora", "dinah", "edgar", "finn")


def _rows(n, seed, source, fixed_label):
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        label = i % 2 if fixed_label is None else fixed_label
        verbs = _POS_VERBS if label else _NEG_VERBS
        tails = _POS_TAILS if label else _NEG_TAILS
        c1, c2 = sorted(rng.sample(_NAMES, 2))
        rows.append({
            "text": (
                f"[CHAR1] {rng.choice(verbs)} [CHAR2] near the "
                f"{rng.choice(_PLACES)} {rng.choice(tails)} ."
            ),
            "c1": c1, "c2": c2, "label": label,
            "source": source, "sent_id": i,
        })
    return rows


@pytest.fixture(scope="session")
def make_dataset():
    """Factory writing separable dataset JSONL files."""

    def write(path, n=200, seed=0, source="synth", fixed_label=None):
        rows = _rows(n, seed, source, fixed_label)
        with open(path, "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row) + "\n")
        return rows

    return write


@pytest.fixture(scope="session")
def tiny_base(tmp_path_factory):
    """A local 2-layer checkpoint so no hub access is ever needed."""
    root = tmp_path_factory.mktemp("tinybase")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + _WORDS
    (root / "vocab.txt").write_text("\n".join(vocab) + "\n")
    wp = BertWordPieceTokenizer(vocab=str(root / "vocab.txt"), lowercase=True)
    wp.save(str(root / "tok.json"))
    tok = BertTokenizerFast(
        tokenizer_file=str(root / "tok.json"),
        unk_token="[UNK]", pad_token="[PAD]", cls_token="[CLS]",
        sep_token="[SEP]", mask_token="[MASK]", do_lower_case=True,
    )
    cfg = BertConfig(
        vocab_size=len(tok), hidden_size=64, num_hidden_layers=2,
        num_attention_heads=2, intermediate_size=128,
        max_position_embeddings=64, pad_token_id=0,
    )
    torch.manual_seed(0)
    base = root / "base"
    BertModel(cfg).save_pretrained(base)
    tok.save_pretrained(base)
    return base


@pytest.fixture(scope="session")
def fast_cfg():
    # The default 2e-5 is sized for a 12-layer model; the tiny fixture
    # needs a larger rate to learn in ten epochs.
    return FinetuneConfig(
        learning_rate=5e-4, epochs=10, max_sequence_length=32,
        batch_size=16, seed=1,
    )


@pytest.fixture(scope="session")
def trained(tmp_path_factory, tiny_base, fast_cfg):
    """(model_dir, train_path, test_path, test_rows) trained once."""
    root = tmp_path_factory.mktemp("trained")
    rows = _rows(200, 0, "synth", None)
    train_path, test_path = root / "train.jsonl", root / "test.jsonl"
    for path, part in ((train_path, rows[:150]), (test_path, rows[150:])):
        with open(path, "w", encoding="utf-8") as f:
            for row in part:
                f.write(json.dumps(row) + "\n")
    model_dir = finetune(train_path, tiny_base, root / "model", fast_cfg)
    return model_dir, train_path, test_path, rows[150:]
