"""Run manifests: the command, its configuration and seed, and digests of every artifact it wrote."""
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import yaml

from intonation_vc.config.models import RunConfig
from intonation_vc.errors import IntonationVCError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.yaml"


def sha256_file(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class Artifact:
    path: str
    sha256: str

    def to_dict(self) -> Dict[str, str]:
        return {"path": self.path, "sha256": self.sha256}


@dataclass
class RunManifest:
    """Everything needed to re-execute a CLI run and check its outputs."""

    command: str
    argv: List[str]
    seed: int
    config: Dict[str, Any]
    artifacts: List[Artifact] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "argv": list(self.argv),
            "seed": self.seed,
            "config": self.config,
            "artifacts": [a.to_dict() for a in self.artifacts],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        try:
            return cls(
                command=str(data["command"]),
                argv=[str(a) for a in data["argv"]],
                seed=int(data["seed"]),
                config=dict(data["config"]),
                artifacts=[Artifact(str(a["path"]), str(a["sha256"])) for a in data.get("artifacts") or []],
            )
        except (KeyError, TypeError, ValueError) as e:
            raise IntonationVCError(f"Malformed manifest: {e}") from e

    def run_config(self) -> RunConfig:
        return RunConfig(**self.config)


def build_manifest(command: str, argv: Iterable[str], config: RunConfig, out_dir: Union[str, Path],
                   paths: Iterable[Union[str, Path]]) -> RunManifest:
    """Digest ``paths`` (recorded relative to ``out_dir`` when inside it)."""
    out_dir = Path(out_dir).resolve()
    artifacts = []
    for p in sorted({Path(p).resolve() for p in paths}):
        try:
            name = p.relative_to(out_dir).as_posix()
        except ValueError:
            name = str(p)
        artifacts.append(Artifact(name, sha256_file(p)))
    return RunManifest(command, list(argv), config.seed, config.model_dump(mode="json"), artifacts)


def write_manifest(manifest: RunManifest, out_dir: Union[str, Path]) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(manifest.to_dict(), f, default_flow_style=False, sort_keys=False)
    logger.info(f"Wrote manifest with {len(manifest.artifacts)} artifacts to {path}")
    return path


def load_manifest(path: Union[str, Path]) -> RunManifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.is_file():
        raise IntonationVCError(f"Manifest not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise IntonationVCError(f"Malformed manifest: {path}")
    return RunManifest.from_dict(data)


def verify_manifest(manifest: RunManifest, out_dir: Optional[Union[str, Path]] = None) -> List[str]:
    """Paths whose current digest differs from the recorded one (missing files included)."""
    base = Path(out_dir) if out_dir is not None else Path(".")
    mismatched = []
    for artifact in manifest.artifacts:
        p = Path(artifact.path)
        p = p if p.is_absolute() else base / p
        if not p.is_file() or sha256_file(p) != artifact.sha256:
            mismatched.append(artifact.path)
    return mismatched
