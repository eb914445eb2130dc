"""End-to-end tests of the command-line interface on a tiny dataset."""

import csv
import json
import logging

import pytest
import yaml

import slotswap.__main__ as cli
from slotswap.__main__ import main, parse_arguments, resolve_log_level
from slotswap.data import load_manifest, read_png
from slotswap.training import load_checkpoint, training_split

from .conftest import MICRO_SPRITES

MICRO_SETTINGS = {
    "sprites": MICRO_SPRITES,
    "network": {
        "base_channels": 2,
        "discriminator_base_channels": 2,
        "uniqueness_channels": 4,
        "per_attribute_channels": 2,
    },
    "training": {"batch_size": 2, "checkpoint_every": 1, "iterations": 1},
    "evaluation": {"sample_count": 2, "batch_size": 2, "probe_gate": 0.0},
}


@pytest.fixture
def settings(tmp_path):
    path = tmp_path / "settings.yaml"
    path.write_text(yaml.safe_dump(MICRO_SETTINGS, sort_keys=False))
    return str(path)


@pytest.fixture
def trained_run(tmp_path, settings):
    data, run = tmp_path / "data", tmp_path / "run"
    assert main(["--config", settings, "make-dataset", "--count", "2", "--out", str(data)]) == 0
    assert main(["--config", settings, "train", "--data", str(data), "--out", str(run)]) == 0
    return data, run


class TestParsing:

    def test_usage_errors_exit_1(self):
        assert main([]) == 1
        assert main(["make-dataset", "--count", "0", "--out", "x"]) == 1
        assert main(["multiplex", "--ckpt", "c", "--input", "i.png", "--edit", "colorblue", "--out", "o.png"]) == 1

    def test_version(self, capsys):
        assert main(["--version"]) == 0
        assert "slotswap" in capsys.readouterr().out

    def test_edits(self):
        args = parse_arguments([
            "multiplex", "--ckpt", "c", "--input", "i.png",
            "--edit", "color=blue", "--edit", "shape@ref.png", "--out", "o.png",
        ])
        assert args.edit == [("color", "=", "blue"), ("shape", "@", "ref.png")]
        args = parse_arguments([
            "evaluate", "--ckpt", "c", "--data", "d", "--out", "r.json",
            "--multiplex", "color=red,shape=square",
        ])
        assert args.multiplex == [[("color", "red"), ("shape", "square")]]

    def test_log_level(self, monkeypatch):
        monkeypatch.delenv("SLOTSWAP_LOG", raising=False)
        assert resolve_log_level(True) == logging.DEBUG
        assert resolve_log_level(False, "WARNING") == logging.WARNING
        monkeypatch.setenv("SLOTSWAP_LOG", "warn")
        assert resolve_log_level(False, "DEBUG") == logging.WARNING


class TestMakeDataset:

    def test_default_sprites(self, tmp_path, capsys):
        assert main(["make-dataset", "--count", "1", "--out", str(tmp_path / "d")]) == 0
        assert len(load_manifest(tmp_path / "d")) == 12
        assert "✓ 12 images" in capsys.readouterr().out

    def test_seed_override(self, tmp_path, settings):
        for name in ("a", "b"):
            main(["--config", settings, "--seed", "4", "make-dataset", "--count", "1", "--out", str(tmp_path / name)])
        a, b = load_manifest(tmp_path / "a"), load_manifest(tmp_path / "b")
        assert a.records == b.records
        main(["--config", settings, "make-dataset", "--count", "1", "--out", str(tmp_path / "c")])
        assert load_manifest(tmp_path / "c").records != a.records

    def test_unknown_config_key(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("training:\n  epochs: 3\n")
        assert main(["--config", str(path), "make-dataset", "--count", "1", "--out", str(tmp_path / "d")]) == 1
        assert not (tmp_path / "d").exists()


class TestTrainedModel:

    def test_train_writes_checkpoints(self, trained_run):
        _, run = trained_run
        assert (run / "latest").read_text().strip() == "ckpt_000001.bin"
        assert (run / "metrics.jsonl").exists()

    def test_empty_manifest_exits_1_before_writing(self, tmp_path, settings):
        data, run = tmp_path / "data", tmp_path / "run"
        assert main(["--config", settings, "make-dataset", "--count", "1", "--out", str(data)]) == 0
        manifest = data / "manifest.jsonl"
        manifest.write_text(manifest.read_text().splitlines()[0] + "\n")
        assert main(["--config", settings, "train", "--data", str(data), "--out", str(run)]) == 1
        assert not run.exists()

    def test_translate_transfer_multiplex(self, trained_run, tmp_path):
        data, run = trained_run
        src, ref = str(data / "images" / "000000.png"), str(data / "images" / "000007.png")
        out = tmp_path / "out"
        assert main(["translate", "--ckpt", str(run), "--input", src,
                     "--attr", "color", "--value", "blue", "--out", str(out / "t.png")]) == 0
        assert main(["transfer", "--ckpt", str(run), "--input", src, "--ref", ref,
                     "--attr", "shape", "--out", str(out / "i.png")]) == 0
        assert main(["multiplex", "--ckpt", str(run), "--input", src, "--edit", "color=blue",
                     "--edit", f"shape@{ref}", "--out", str(out / "m.png")]) == 0
        for name in ("t.png", "i.png", "m.png"):
            assert read_png(out / name).shape == (16, 16, 3)

    def test_invalid_translation_exits_1(self, trained_run, tmp_path):
        data, run = trained_run
        src = str(data / "images" / "000000.png")
        assert main(["translate", "--ckpt", str(run), "--input", src,
                     "--attr", "color", "--value", "green", "--out", str(tmp_path / "x.png")]) == 1
        assert main(["multiplex", "--ckpt", str(run), "--input", src, "--edit", "color=red",
                     "--edit", "color=blue", "--out", str(tmp_path / "y.png")]) == 1

    def test_embed(self, trained_run, tmp_path):
        data, run = trained_run
        out = tmp_path / "color.csv"
        assert main(["embed", "--ckpt", str(run), "--data", str(data), "--attr", "color", "--out", str(out)]) == 0
        with open(out, newline="") as f:
            rows = list(csv.DictReader(f))
        assert {r["origin"] for r in rows} == {"real", "translated"}

    def test_missing_checkpoint_exits_2(self, tmp_path):
        assert main(["translate", "--ckpt", str(tmp_path / "none"), "--input", "x.png",
                     "--attr", "color", "--value", "red", "--out", str(tmp_path / "o.png")]) == 2


class TestGrid:

    def test_grid(self, micro_dataset, tmp_path):
        images = micro_dataset.root / "images"
        out = tmp_path / "grid.png"
        assert main(["grid", "--src", str(images / "000000.png"), "--ref", str(images / "000001.png"),
                     "--result", str(images / "000002.png"), "--out", str(out)]) == 0
        assert read_png(out).shape == (28, 76, 3)


class TestEvaluate:

    def test_report(self, trained_run, settings, tmp_path):
        data, run = trained_run
        out = tmp_path / "report.json"
        assert main(["--config", settings, "evaluate", "--ckpt", str(run),
                     "--data", str(data), "--out", str(out), "--multiplex", "color=blue,shape=square"]) == 0
        report = json.loads(out.read_text())
        assert report["probe_kind"] == "oracle"
        assert report["probe_gate"] == 0.0
        assert len(report["rows"]) == 4
        assert len(report["multiplex"]) == 1
        assert report["multiplex"][0]["sequential"] is False
        assert set(report["embeddings"]) == {"shape", "color"}
        assert 0.0 <= report["embeddings"]["color"]["separation_real"] <= 1.0
        assert report["notes"]["sources"] == "2 selected images"

    def test_sequential_multiplex(self, trained_run, settings, tmp_path):
        data, run = trained_run
        out = tmp_path / "report.json"
        assert main(["--config", settings, "evaluate", "--ckpt", str(run), "--data", str(data),
                     "--out", str(out), "--multiplex", "color=blue,shape=square", "--sequential"]) == 0
        row = json.loads(out.read_text())["multiplex"][0]
        assert row["sequential"] is True
        assert row["count"] == 2

    def test_sources_come_from_the_held_out_split(self, trained_run, settings, tmp_path, monkeypatch):
        data, run = trained_run
        captured = []
        original = cli.evaluate_model

        def capturing(*args, **kwargs):
            captured.append(kwargs["source_indices"])
            return original(*args, **kwargs)

        monkeypatch.setattr(cli, "evaluate_model", capturing)
        base = ["--config", settings, "evaluate", "--ckpt", str(run), "--data", str(data)]
        assert main(base + ["--out", str(tmp_path / "a.json")]) == 0
        assert main(base + ["--out", str(tmp_path / "b.json"), "--all-sources"]) == 0

        train_idx, held_idx = training_split(load_manifest(data), load_checkpoint(run).train_config)
        assert sorted(captured[0]) == held_idx
        assert not set(captured[0]) & set(train_idx)
        assert captured[1] is None

    def test_config_after_command(self, tmp_path, settings):
        out = tmp_path / "d"
        assert main(["make-dataset", "--config", settings, "--count", "1", "--out", str(out)]) == 0
        assert len(load_manifest(out)) == 4
