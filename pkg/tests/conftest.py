import os
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to sys.path
root_dir = Path(__file__).parent.parent
sys.path.append(str(root_dir))

os.environ.setdefault("ENVIRONMENT", "test")

from intonation_vc.config import ConfigManager  # noqa: E402
from intonation_vc.config.models import RunConfig  # noqa: E402
from intonation_vc.signal.types import Waveform  # noqa: E402


def tiny_config(**sections) -> RunConfig:
    """Desk-scale settings small enough for unit tests; ``sections`` override whole sections."""
    data = {
        "classifier": {"dense_widths": [24], "recurrent_width": 24, "epochs": 4},
        "synth": {
            "latent_dim": 4,
            "encoder_width": 16,
            "decoder_width": 16,
            "epochs": 3,
            "bank_channels": 4,
            "bank_kernels": 2,
            "baseline_width": 8,
            "highway_layers": 1,
        },
        "flow": {"steps": 2},
        "vocoder": {"griffin_lim_iters": 8},
        "sampler": {"num_samples": 3},
        "corpus": {"utterances": 8, "speakers": 2, "min_segments": 4, "max_segments": 5},
        "environment": "test",
        "workers": 1,
    }
    for key, value in sections.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key] = {**data[key], **value}
        else:
            data[key] = value
    return RunConfig(**data)


def sine(freq: float, n_samples: int, sample_rate: int = 16000, amplitude: float = 0.5) -> Waveform:
    t = np.arange(n_samples) / sample_rate
    return Waveform(amplitude * np.sin(2.0 * np.pi * freq * t), sample_rate)


@pytest.fixture
def clean_env(monkeypatch):
    """Remove configuration variables and reset the config singletons."""
    for key in list(os.environ):
        if "__" in key or key in ("CONFIG_FILE", "SEED", "WORKERS", "ENV"):
            monkeypatch.delenv(key, raising=False)
    monkeypatch.setenv("ENVIRONMENT", "test")
    ConfigManager._instance = None
    from intonation_vc.config import manager as manager_module
    manager_module._config_manager = None
    yield
    ConfigManager._instance = None
    manager_module._config_manager = None


@pytest.fixture
def temp_output_dir(tmp_path):
    output_dir = tmp_path / "out"
    output_dir.mkdir()
    return output_dir


@pytest.fixture(scope="session")
def small_config():
    return tiny_config()


@pytest.fixture(scope="session")
def tiny_corpus(small_config):
    from intonation_vc.harness import generate_corpus

    return generate_corpus(seed=3, config=small_config.corpus, signal=small_config.signal)


@pytest.fixture(scope="session")
def trained_classifier(tiny_corpus, small_config):
    from intonation_vc.phoneme import train_classifier

    model, _ = train_classifier(tiny_corpus, small_config, seed=1)
    return model


@pytest.fixture(scope="session")
def trained_synth(tiny_corpus, trained_classifier, small_config):
    from intonation_vc.synth import train_synthesizer

    model, _ = train_synthesizer(tiny_corpus, trained_classifier, small_config, seed=2)
    return model


@pytest.fixture(scope="session")
def trained_flow_synth(tiny_corpus, trained_classifier):
    from intonation_vc.synth import train_synthesizer

    config = tiny_config(synth={"use_flow": True, "epochs": 2})
    model, _ = train_synthesizer(tiny_corpus, trained_classifier, config, seed=2)
    return model


@pytest.fixture(scope="session")
def trained_baseline(tiny_corpus, trained_classifier):
    from intonation_vc.synth import train_synthesizer

    config = tiny_config(synth={"baseline": True, "epochs": 2})
    model, _ = train_synthesizer(tiny_corpus, trained_classifier, config, seed=2)
    return model
