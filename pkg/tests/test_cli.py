import csv
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from intonation_vc.cli import default_synth_name, recorded_argv, strip_global_options
from intonation_vc.pipeline import save_noise

ROOT = Path(__file__).parent.parent


def run_cli(*args, cwd=None):
    env = {**os.environ, "ENVIRONMENT": "test"}
    return subprocess.run(
        [sys.executable, "-m", "intonation_vc.cli", *map(str, args)],
        capture_output=True,
        text=True,
        cwd=cwd or ROOT,
        env=env,
    )


def test_cli_help():
    result = run_cli("--help")
    assert result.returncode == 0
    assert "Intonation VC" in result.stdout
    for command in ("gen-corpus", "train-synth", "interpolate", "replay"):
        assert command in result.stdout


def test_cli_unknown_command():
    result = run_cli("transmogrify")
    assert result.returncode != 0


def test_cli_config_show():
    result = run_cli("config", "show", "--format", "json", "--set", "synth.latent_dim=5")
    assert result.returncode == 0
    assert '"latent_dim": 5' in result.stdout


def test_cli_config_validate(tmp_path):
    good = tmp_path / "good.yaml"
    good.write_text("seed: 3\n", encoding="utf-8")
    bad = tmp_path / "bad.yaml"
    bad.write_text("environment: staging\n", encoding="utf-8")
    assert run_cli("config", "validate", "--file", good).returncode == 0
    result = run_cli("config", "validate", "--file", bad)
    assert result.returncode == 1
    assert "invalid" in result.stdout


def test_cli_gen_corpus_writes_manifest(temp_output_dir):
    result = run_cli("gen-corpus", "--utterances", "3", "--seed", "5", "--out", temp_output_dir)
    assert result.returncode == 0, result.stderr
    assert "Generated 3 utterances" in result.stdout
    assert len(list((temp_output_dir / "corpus" / "wav").glob("*.wav"))) == 3
    manifest = yaml.safe_load((temp_output_dir / "manifest.yaml").read_text(encoding="utf-8"))
    assert manifest["command"] == "gen-corpus"
    assert manifest["seed"] == 5
    assert manifest["config"]["corpus"]["utterances"] == 3
    assert "corpus/inventory.txt" in [a["path"] for a in manifest["artifacts"]]


def test_cli_reports_errors(temp_output_dir):
    result = run_cli("train-classifier", "--out", temp_output_dir)
    assert result.returncode == 1
    assert "Error" in result.stderr


def test_cli_train_classifier_without_held_out(temp_output_dir):
    """Two utterances leave nothing held out; the summary still prints and the manifest is written."""
    result = run_cli("gen-corpus", "--utterances", "2", "--out", temp_output_dir)
    assert result.returncode == 0, result.stderr
    result = run_cli("train-classifier", "--out", temp_output_dir)
    assert result.returncode == 0, result.stderr
    assert "held-out accuracy n/a" in result.stdout
    manifest = yaml.safe_load((temp_output_dir / "manifest.yaml").read_text(encoding="utf-8"))
    assert manifest["command"] == "train-classifier"
    assert "classifier.ckpt" in [a["path"] for a in manifest["artifacts"]]


def test_recorded_argv(tmp_path):
    existing = tmp_path / "a.wav"
    existing.write_bytes(b"")
    argv = ["convert", "--in", str(existing), "--set", "seed=1", "--seed", "2"]
    recorded = recorded_argv(argv, {"--synth": "/abs/synth.ckpt"})
    assert recorded[2] == str(existing.resolve())
    assert recorded[-2:] == ["--synth", "/abs/synth.ckpt"]
    assert strip_global_options(["--config", "c.yaml", "convert", "--out=x", "--set", "a=1", "--seed", "2"]) == [
        "convert", "--seed", "2",
    ]


@pytest.mark.slow
def test_cli_full_pipeline(tmp_path):
    work = tmp_path / "work"
    for args in (
        ("gen-corpus", "--out", work),
        ("train-classifier", "--out", work),
        ("train-synth", "--out", work),
    ):
        result = run_cli(*args)
        assert result.returncode == 0, result.stderr

    source = work / "corpus" / "wav" / "utt0000.wav"
    models = ("--classifier", work / "classifier.ckpt", "--synth", work / "synth.ckpt")
    first, second = tmp_path / "c1", tmp_path / "c2"
    for out in (first, second):
        result = run_cli("convert", "--in", source, "--seed", "7", *models, "--out", out)
        assert result.returncode == 0, result.stderr
    assert (first / "utt0000_s7.wav").read_bytes() == (second / "utt0000_s7.wav").read_bytes()

    save_noise(tmp_path / "e1.txt", np.full(4, 1.0))
    save_noise(tmp_path / "e2.txt", np.full(4, -1.0))
    sweep = tmp_path / "sweep"
    result = run_cli("interpolate", "--in", source, "--eps1", tmp_path / "e1.txt", "--eps2", tmp_path / "e2.txt",
                     "--steps", "21", *models, "--out", sweep)
    assert result.returncode == 0, result.stderr
    assert len(list(sweep.glob("*.wav"))) == 21
    assert len(list(sweep.glob("*.pgm"))) == 21
    assert len(list(sweep.glob("*.csv"))) == 1
    with open(sweep / "utt0000_sweep.csv", newline="", encoding="utf-8") as f:
        assert len(list(csv.reader(f))) == 21

    result = run_cli("plot", first / "utt0000_s7.spec", "--out", tmp_path / "plot")
    assert result.returncode == 0, result.stderr
    assert (tmp_path / "plot" / "utt0000_s7.pgm").read_bytes().startswith(b"P5\n")

    result = run_cli("replay", "--manifest", first, "--out", tmp_path / "replayed")
    assert result.returncode == 0, result.stderr
    assert (tmp_path / "replayed" / "utt0000_s7.wav").read_bytes() == (first / "utt0000_s7.wav").read_bytes()


def test_default_synth_checkpoint(tmp_path):
    """Conversion falls back to baseline.ckpt when it is the only synthesizer in the run directory."""
    assert default_synth_name(tmp_path) == "synth.ckpt"
    (tmp_path / "baseline.ckpt").write_bytes(b"")
    assert default_synth_name(tmp_path) == "baseline.ckpt"
    (tmp_path / "synth.ckpt").write_bytes(b"")
    assert default_synth_name(tmp_path) == "synth.ckpt"
