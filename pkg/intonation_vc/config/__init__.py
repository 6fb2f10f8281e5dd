"""
Configuration management module.

This module provides layered configuration with YAML, JSON and flat
``key = value`` file support, environment variable overrides, and validation.

Usage:
    from intonation_vc.config import get_config, load_config

    config = get_config()
    n_mels = config.signal.n_mels

    from intonation_vc.config import get_config_manager

    manager = get_config_manager()
    value = manager.get("synth.latent_dim")
"""

from .models import (
    RunConfig,
    SignalConfig,
    PitchConfig,
    VocoderConfig,
    ClassifierConfig,
    SynthConfig,
    FlowConfig,
    SamplerConfig,
    CorpusConfig,
    LoggingConfig,
)

from .manager import (
    ConfigManager,
    get_config_manager,
    get_config,
    reload_config,
    parse_flat_config,
    dump_flat_config,
)

__all__ = [
    # Models
    "RunConfig",
    "SignalConfig",
    "PitchConfig",
    "VocoderConfig",
    "ClassifierConfig",
    "SynthConfig",
    "FlowConfig",
    "SamplerConfig",
    "CorpusConfig",
    "LoggingConfig",
    # Manager functions
    "ConfigManager",
    "get_config_manager",
    "get_config",
    "reload_config",
    "load_config",
    "parse_flat_config",
    "dump_flat_config",
]


# Convenience alias
def load_config(config_path=None, overrides=None):
    """
    Load or reload configuration.

    Args:
        config_path: Optional path to configuration file
        overrides: Optional iterable of ``key=value`` strings

    Returns:
        RunConfig instance
    """
    if config_path or overrides:
        reload_config(config_path, overrides)
    return get_config()
