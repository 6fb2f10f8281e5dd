"""
Binary checkpoint format.

Layout (all integers little-endian)::

    8 bytes   magic  b"IVCCKPT\\0"
    uint32    format version
    uint32    header length, then UTF-8 JSON header {kind, spec, config, meta, seed}
    uint32    tensor count
    per tensor (sorted by name):
        uint32 name length, UTF-8 name
        uint32 rank, rank x uint64 extents
        float32 values, row-major

The JSON header is written with sorted keys so that saving a loaded model
reproduces the original file byte for byte.
"""
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from intonation_vc.config.models import RunConfig, SignalConfig
from intonation_vc.errors import (
    BadMagicError,
    CheckpointError,
    TruncatedCheckpointError,
    UnsupportedVersionError,
)
from intonation_vc.flow import FlowSpec
from intonation_vc.neural import NetworkParams, NetworkSpec
from intonation_vc.phoneme import ClassifierModel, PhonemeInventory
from intonation_vc.signal.types import LinSpectrogram
from intonation_vc.synth import BaselineModel, SynthesizerModel

from .registry import ModelRegistry, ModelSerializer, register_model

logger = logging.getLogger(__name__)

MAGIC = b"IVCCKPT\x00"
FORMAT_VERSION = 1
MAX_RANK = 8
NORM_PREFIX = "norm."

PathLike = Union[str, Path]


@dataclass
class Checkpoint:
    """Decoded contents of one checkpoint file."""

    kind: str
    spec: str
    tensors: Dict[str, np.ndarray]
    config: Optional[Dict[str, Any]] = None
    meta: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None

    def header(self) -> Dict[str, Any]:
        return {"kind": self.kind, "spec": self.spec, "config": self.config, "meta": self.meta, "seed": self.seed}


def _u32(value: int) -> bytes:
    return struct.pack("<I", value)


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    header = json.dumps(ckpt.header(), sort_keys=True).encode("utf-8")
    parts = [MAGIC, _u32(FORMAT_VERSION), _u32(len(header)), header, _u32(len(ckpt.tensors))]
    for name in sorted(ckpt.tensors):
        value = np.ascontiguousarray(ckpt.tensors[name], dtype="<f4")
        encoded = name.encode("utf-8")
        parts.append(_u32(len(encoded)))
        parts.append(encoded)
        parts.append(_u32(value.ndim))
        parts.append(struct.pack(f"<{value.ndim}Q", *value.shape))
        parts.append(value.tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes, source: str):
        self.data = data
        self.pos = 0
        self.source = source

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedCheckpointError(
                f"{self.source}: truncated while reading {what} "
                f"(needs {n} bytes at offset {self.pos}, file has {len(self.data)})"
            )
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def decode_checkpoint(data: bytes, source: str = "<bytes>") -> Checkpoint:
    reader = _Reader(data, source)
    if len(data) >= len(MAGIC) and data[:len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{source}: not a checkpoint (bad magic {data[:len(MAGIC)]!r})")
    reader.take(len(MAGIC), "magic")
    version = reader.u32("version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"{source}: checkpoint version {version} is not supported (expected {FORMAT_VERSION})")
    try:
        header = json.loads(reader.take(reader.u32("header length"), "header").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{source}: unreadable header: {e}") from e
    if not isinstance(header, dict) or "kind" not in header or "spec" not in header:
        raise CheckpointError(f"{source}: header lacks kind/spec")

    tensors: Dict[str, np.ndarray] = {}
    for index in range(reader.u32("tensor count")):
        name = reader.take(reader.u32(f"tensor {index} name length"), f"tensor {index} name").decode("utf-8")
        rank = reader.u32(f"rank of {name}")
        if rank > MAX_RANK:
            raise CheckpointError(f"{source}: tensor '{name}' has implausible rank {rank}")
        extents = struct.unpack(f"<{rank}Q", reader.take(8 * rank, f"extents of {name}"))
        count = int(np.prod(extents, dtype=np.uint64)) if rank else 1
        raw = reader.take(4 * count, f"values of {name}")
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(extents).astype(np.float32)
    if reader.pos != len(data):
        raise CheckpointError(f"{source}: {len(data) - reader.pos} trailing bytes after the last tensor")

    return Checkpoint(
        kind=header["kind"],
        spec=header["spec"],
        tensors=tensors,
        config=header.get("config"),
        meta=header.get("meta") or {},
        seed=header.get("seed"),
    )


def write_checkpoint(ckpt: Checkpoint, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(ckpt))
    logger.info(f"Wrote {ckpt.kind} checkpoint with {len(ckpt.tensors)} tensors to {path}")
    return path


def read_checkpoint(path: PathLike) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes(), str(path))


def save_checkpoint(model: Any, path: PathLike, config: Optional[RunConfig] = None, seed: Optional[int] = None) -> Path:
    """Serialize any registered model kind."""
    serializer = ModelRegistry.for_model(model)
    spec, tensors, meta = serializer.dump(model)
    snapshot = config.model_dump(mode="json") if config is not None else None
    return write_checkpoint(Checkpoint(serializer.kind, spec, tensors, snapshot, meta, seed), path)


def load_checkpoint(path: PathLike) -> Any:
    """Read a checkpoint and rebuild the model its kind tag names."""
    ckpt = read_checkpoint(path)
    model = ModelRegistry.get(ckpt.kind).load(ckpt.spec, ckpt.tensors, ckpt.meta)
    logger.debug(f"Loaded {ckpt.kind} model from {path}")
    return model


def _spec_text(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, sort_keys=True)


def _params(tensors: Dict[str, np.ndarray]) -> NetworkParams:
    return NetworkParams({k: v for k, v in tensors.items() if not k.startswith(NORM_PREFIX)})


@register_model("classifier")
class ClassifierSerializer(ModelSerializer):
    def handles(self, model: Any) -> bool:
        return isinstance(model, ClassifierModel)

    def dump(self, model: ClassifierModel):
        spec = _spec_text({
            "network": model.spec.model_dump(mode="json"),
            "inventory": list(model.inventory.symbols),
            "signal": model.signal.model_dump(mode="json"),
        })
        tensors = dict(model.params.items())
        tensors[NORM_PREFIX + "mean"] = model.feature_mean
        tensors[NORM_PREFIX + "std"] = model.feature_std
        return spec, tensors, {"trained": model.trained, "frozen": model.frozen}

    def load(self, spec: str, tensors: Dict[str, np.ndarray], meta: Dict[str, Any]) -> ClassifierModel:
        payload = json.loads(spec)
        model = ClassifierModel(
            NetworkSpec.model_validate(payload["network"]),
            _params(tensors),
            PhonemeInventory(tuple(payload["inventory"])),
            SignalConfig.model_validate(payload["signal"]),
            tensors.get(NORM_PREFIX + "mean"),
            tensors.get(NORM_PREFIX + "std"),
            trained=bool(meta.get("trained", False)),
        )
        return model.freeze() if meta.get("frozen") else model


@register_model("synth")
class SynthSerializer(ModelSerializer):
    with_flow = False

    def handles(self, model: Any) -> bool:
        return isinstance(model, SynthesizerModel) and (model.flow is not None) == self.with_flow

    def dump(self, model: SynthesizerModel):
        spec = _spec_text({
            "encoder": model.encoder.model_dump(mode="json"),
            "head": model.head.model_dump(mode="json"),
            "decoder": model.decoder.model_dump(mode="json"),
            "flow": model.flow.model_dump(mode="json") if model.flow is not None else None,
            "latent_dim": model.latent_dim,
            "num_classes": model.num_classes,
            "n_bins": model.n_bins,
            "signal": model.signal.model_dump(mode="json"),
        })
        return spec, dict(model.params.items()), {"magnitude_scale": model.magnitude_scale, "trained": model.trained}

    def load(self, spec: str, tensors: Dict[str, np.ndarray], meta: Dict[str, Any]) -> SynthesizerModel:
        payload = json.loads(spec)
        flow = FlowSpec.model_validate(payload["flow"]) if payload.get("flow") is not None else None
        return SynthesizerModel(
            NetworkSpec.model_validate(payload["encoder"]),
            NetworkSpec.model_validate(payload["head"]),
            NetworkSpec.model_validate(payload["decoder"]),
            _params(tensors),
            int(payload["latent_dim"]),
            int(payload["num_classes"]),
            int(payload["n_bins"]),
            flow,
            float(meta.get("magnitude_scale", 1.0)),
            SignalConfig.model_validate(payload["signal"]),
            trained=bool(meta.get("trained", False)),
        )


@register_model("synth+flow")
class FlowSynthSerializer(SynthSerializer):
    with_flow = True


@register_model("baseline")
class BaselineSerializer(ModelSerializer):
    def handles(self, model: Any) -> bool:
        return isinstance(model, BaselineModel)

    def dump(self, model: BaselineModel):
        spec = _spec_text({
            "specs": [s.model_dump(mode="json") for s in model.specs],
            "num_classes": model.num_classes,
            "n_bins": model.n_bins,
            "signal": model.signal.model_dump(mode="json"),
        })
        return spec, dict(model.params.items()), {"magnitude_scale": model.magnitude_scale, "trained": model.trained}

    def load(self, spec: str, tensors: Dict[str, np.ndarray], meta: Dict[str, Any]) -> BaselineModel:
        payload = json.loads(spec)
        return BaselineModel(
            [NetworkSpec.model_validate(s) for s in payload["specs"]],
            _params(tensors),
            int(payload["num_classes"]),
            int(payload["n_bins"]),
            float(meta.get("magnitude_scale", 1.0)),
            SignalConfig.model_validate(payload["signal"]),
            trained=bool(meta.get("trained", False)),
        )


@register_model("spectrogram")
class SpectrogramSerializer(ModelSerializer):
    """Magnitude spectrograms (stored as float32) so converted outputs can be plotted later."""

    def handles(self, model: Any) -> bool:
        return isinstance(model, LinSpectrogram)

    def dump(self, model: LinSpectrogram):
        spec = _spec_text({
            "frame_len": model.frame_len,
            "hop": model.hop,
            "n_fft": model.n_fft,
            "sample_rate": model.sample_rate,
        })
        return spec, {"mags": model.mags}, {}

    def load(self, spec: str, tensors: Dict[str, np.ndarray], meta: Dict[str, Any]) -> LinSpectrogram:
        payload = json.loads(spec)
        if "mags" not in tensors:
            raise CheckpointError("Spectrogram checkpoint has no 'mags' tensor")
        return LinSpectrogram(
            tensors["mags"].astype(np.float64),
            int(payload["frame_len"]),
            int(payload["hop"]),
            int(payload["n_fft"]),
            int(payload["sample_rate"]),
        )
