"""Corpora, checkpoints, model registry and run manifests."""
from .checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
    write_checkpoint,
)
from .corpus import Corpus, Segment, Utterance, frame_labels, split_held_out
from .ingest import format_labels, load_corpus, load_corpus_dir, parse_labels, save_corpus
from .manifest import (
    MANIFEST_NAME,
    Artifact,
    RunManifest,
    build_manifest,
    load_manifest,
    sha256_file,
    verify_manifest,
    write_manifest,
)
from .registry import ModelRegistry, ModelSerializer, register_model
from .synthetic import CONTOURS, PROFILES, PhonemeProfile, generate_corpus, speaker_scale, synthesize_utterance

__all__ = [
    "Corpus",
    "Segment",
    "Utterance",
    "frame_labels",
    "split_held_out",
    "generate_corpus",
    "synthesize_utterance",
    "speaker_scale",
    "PhonemeProfile",
    "PROFILES",
    "CONTOURS",
    "parse_labels",
    "format_labels",
    "load_corpus",
    "load_corpus_dir",
    "save_corpus",
    "Checkpoint",
    "MAGIC",
    "FORMAT_VERSION",
    "encode_checkpoint",
    "decode_checkpoint",
    "write_checkpoint",
    "read_checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "ModelRegistry",
    "ModelSerializer",
    "register_model",
    "RunManifest",
    "Artifact",
    "MANIFEST_NAME",
    "build_manifest",
    "write_manifest",
    "load_manifest",
    "verify_manifest",
    "sha256_file",
]
