import json

from click.testing import CliRunner

from narrbert.cli import main

runner = CliRunner()


def _invoke(args):
    return runner.invoke(main, args, catch_exceptions=False)


def _text(result):
    out = result.output
    try:
        out += result.stderr
    except ValueError:
        pass
    return out


class TestFinetuneCommand:
    def test_happy_path(self, tiny_base, make_dataset, tmp_path):
        data = tmp_path / "d.jsonl"
        make_dataset(data, n=16, seed=1)
        out = tmp_path / "model"
        result = _invoke([
            "finetune", "--data", str(data), "--out", str(out),
            "--base", str(tiny_base), "--lr", "5e-4", "--epochs", "2",
            "--max-len", "32",
        ])
        assert result.exit_code == 0, _text(result)
        assert "saved model to" in result.output
        assert result.output.count("mean loss") == 2
        assert (out / "finetune.json").is_file()
        assert (out / "model.safetensors").is_file()

    def test_negative_epochs_rejected(self, tiny_base, make_dataset, tmp_path):
        data = tmp_path / "d.jsonl"
        make_dataset(data, n=8)
        result = _invoke([
            "finetune", "--data", str(data), "--out", str(tmp_path / "m"),
            "--base", str(tiny_base), "--epochs", "-1",
        ])
        assert result.exit_code == 2
        assert "epochs" in _text(result)

    def test_missing_data_file(self, tiny_base, tmp_path):
        result = _invoke([
            "finetune", "--data", str(tmp_path / "absent.jsonl"),
            "--out", str(tmp_path / "m"), "--base", str(tiny_base),
        ])
        assert result.exit_code == 2

    def test_single_class_data(self, tiny_base, make_dataset, tmp_path):
        data = tmp_path / "d.jsonl"
        make_dataset(data, n=8, fixed_label=0)
        result = _invoke([
            "finetune", "--data", str(data), "--out", str(tmp_path / "m"),
            "--base", str(tiny_base), "--epochs", "0",
        ])
        assert result.exit_code == 1
        assert "single class" in _text(result)

    def test_malformed_dataset(self, tiny_base, tmp_path):
        data = tmp_path / "d.jsonl"
        data.write_text('{"text": "x"}\n')
        result = _invoke([
            "finetune", "--data", str(data), "--out", str(tmp_path / "m"),
            "--base", str(tiny_base), "--epochs", "0",
        ])
        assert result.exit_code == 1
        assert "line 1" in _text(result)


class TestPredictCommand:
    def test_happy_path(self, trained, make_dataset, tmp_path):
        data = tmp_path / "d.jsonl"
        make_dataset(data, n=20, seed=9)
        out = tmp_path / "preds.jsonl"
        result = _invoke([
            "predict", "--model", str(trained[0]),
            "--data", str(data), "--out", str(out),
        ])
        assert result.exit_code == 0, _text(result)
        assert "20 predictions" in result.output
        lines = out.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 20
        assert all(json.loads(l)["pred"] in (0, 1) for l in lines)

    def test_max_len_override(self, trained, make_dataset, tmp_path):
        data = tmp_path / "d.jsonl"
        make_dataset(data, n=6, seed=2)
        result = _invoke([
            "predict", "--model", str(trained[0]), "--data", str(data),
            "--out", str(tmp_path / "p.jsonl"), "--max-len", "16",
        ])
        assert result.exit_code == 0, _text(result)

    def test_missing_model_dir(self, make_dataset, tmp_path):
        data = tmp_path / "d.jsonl"
        make_dataset(data, n=4)
        result = _invoke([
            "predict", "--model", str(tmp_path / "nope"),
            "--data", str(data), "--out", str(tmp_path / "p.jsonl"),
        ])
        assert result.exit_code == 2

    def test_model_dir_without_weights(self, make_dataset, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        data = tmp_path / "d.jsonl"
        make_dataset(data, n=4)
        result = _invoke([
            "predict", "--model", str(empty),
            "--data", str(data), "--out", str(tmp_path / "p.jsonl"),
        ])
        assert result.exit_code == 1
