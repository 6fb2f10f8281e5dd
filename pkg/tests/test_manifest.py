"""
Tests for run manifests.
"""
import pytest

from conftest import tiny_config
from intonation_vc.errors import IntonationVCError
from intonation_vc.harness import (
    MANIFEST_NAME,
    RunManifest,
    build_manifest,
    load_manifest,
    sha256_file,
    verify_manifest,
    write_manifest,
)


@pytest.fixture
def run_dir(tmp_path):
    (tmp_path / "a.wav").write_bytes(b"RIFF-ish")
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "b.csv").write_text("alpha,mel_l2\n", encoding="utf-8")
    return tmp_path


def test_sha256_of_empty_file(tmp_path):
    path = tmp_path / "empty"
    path.write_bytes(b"")
    assert sha256_file(path) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def test_build_records_relative_paths(run_dir):
    config = tiny_config(seed=11)
    manifest = build_manifest("convert", ["convert", "--seed", "11"], config, run_dir,
                              [run_dir / "sub" / "b.csv", run_dir / "a.wav", run_dir / "a.wav"])
    assert [a.path for a in manifest.artifacts] == ["a.wav", "sub/b.csv"]
    assert manifest.seed == 11
    assert manifest.run_config() == config


def test_write_load_round_trip(run_dir):
    manifest = build_manifest("convert", ["convert"], tiny_config(), run_dir, [run_dir / "a.wav"])
    path = write_manifest(manifest, run_dir)
    assert path.name == MANIFEST_NAME
    loaded = load_manifest(run_dir)
    assert loaded.to_dict() == manifest.to_dict()


def test_verify_detects_changes(run_dir):
    manifest = build_manifest("convert", [], tiny_config(), run_dir, [run_dir / "a.wav", run_dir / "sub" / "b.csv"])
    assert verify_manifest(manifest, run_dir) == []
    (run_dir / "a.wav").write_bytes(b"changed")
    (run_dir / "sub" / "b.csv").unlink()
    assert verify_manifest(manifest, run_dir) == ["a.wav", "sub/b.csv"]


def test_missing_manifest(tmp_path):
    with pytest.raises(IntonationVCError, match="not found"):
        load_manifest(tmp_path)


def test_malformed_manifest(tmp_path):
    (tmp_path / MANIFEST_NAME).write_text("- just\n- a list\n", encoding="utf-8")
    with pytest.raises(IntonationVCError, match="Malformed"):
        load_manifest(tmp_path)
    with pytest.raises(IntonationVCError, match="Malformed"):
        RunManifest.from_dict({"command": "convert"})
