"""
Configuration manager with support for YAML, JSON, flat key = value files and
environment variables.
"""
import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple, Union

import yaml

from .models import RunConfig

logger = logging.getLogger(__name__)

FLAT_SUFFIXES = (".cfg", ".conf", ".txt")
TOP_LEVEL_KEYS = ("environment", "seed", "workers")


def parse_value(val: str) -> Any:
    """Parse a string value to bool, None, int, float, list or string."""
    text = val.strip()
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if lowered in ("none", "null", ""):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        return [parse_value(part) for part in inner.split(",")] if inner else []
    if len(text) >= 2 and text[0] == text[-1] and text[0] in ("'", '"'):
        return text[1:-1]
    return text


def set_dotted(target: Dict[str, Any], key: str, value: Any) -> None:
    """Set ``a.b.c`` inside a nested dict, creating sections as needed."""
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ValueError(f"Empty configuration key: {key!r}")
    current = target
    for part in parts[:-1]:
        nxt = current.get(part)
        if not isinstance(nxt, dict):
            nxt = {}
            current[part] = nxt
        current = nxt
    current[parts[-1]] = value


def parse_flat_config(text: str, source: str = "<string>") -> Dict[str, Any]:
    """
    Parse the flat ``key = value`` configuration format.

    Blank lines and ``#`` comments are ignored; keys are dotted section paths
    such as ``synth.latent_dim``.
    """
    result: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        set_dotted(result, key, parse_value(value))
    return result


def dump_flat_config(config_dict: Dict[str, Any], prefix: str = "") -> str:
    """Render a nested dict in the flat ``key = value`` format."""
    lines = []
    for key, value in config_dict.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            lines.append(dump_flat_config(value, f"{dotted}."))
        elif isinstance(value, list):
            lines.append(f"{dotted} = [{', '.join(str(v) for v in value)}]")
        elif value is None:
            lines.append(f"{dotted} = null")
        else:
            lines.append(f"{dotted} = {value}")
    return "\n".join(line for line in lines if line)


class ConfigManager:
    """
    Configuration manager implementing singleton pattern.

    Supports hierarchical configuration loading:
    1. Built-in defaults (in Pydantic models)
    2. Default YAML file (config/default.yaml)
    3. Environment-specific YAML (config/{ENV}.yaml)
    4. Explicit file (--config or CONFIG_FILE)
    5. Environment variables
    6. ``--set key=value`` overrides (highest priority)
    """

    _instance: Optional['ConfigManager'] = None
    _config: Optional[RunConfig] = None

    def __new__(cls):
        """Singleton pattern implementation."""
        if cls._instance is None:
            cls._instance = super(ConfigManager, cls).__new__(cls)
        return cls._instance

    def __init__(self):
        """Initialize configuration manager."""
        if self._config is None:
            self._config = self._load_config()

    @property
    def config(self) -> RunConfig:
        """Get the current configuration."""
        if self._config is None:
            self._config = self._load_config()
        return self._config

    @staticmethod
    def _config_dir() -> Path:
        return Path(__file__).parent.parent.parent / "config"

    def _load_config_files(self, config_path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
        """
        Load configuration files with proper cascading.

        default.yaml is the base, the environment-specific file overrides it and
        an explicit file (argument or CONFIG_FILE) overrides both.
        """
        config_dir = self._config_dir()
        config_dict: Dict[str, Any] = {}

        default_config_file = config_dir / "default.yaml"
        if default_config_file.exists():
            logger.debug(f"Loading default configuration: {default_config_file}")
            config_dict = self._load_file(default_config_file)

        environment = os.environ.get("ENVIRONMENT", os.environ.get("ENV", "production")).lower()
        env_config_file = config_dir / f"{environment}.yaml"
        if env_config_file.exists() and env_config_file != default_config_file:
            logger.debug(f"Loading environment-specific config: {env_config_file}")
            config_dict = self._merge_config(config_dict, self._load_file(env_config_file))

        explicit_config = config_path or os.environ.get("CONFIG_FILE")
        if explicit_config:
            path = Path(explicit_config)
            if path.exists():
                logger.info(f"Loading explicit configuration file: {path}")
                config_dict = self._merge_config(config_dict, self._load_file(path))
            else:
                logger.warning(f"Explicit config file not found: {path}")

        return config_dict

    def _load_file(self, file_path: Path) -> Dict[str, Any]:
        """Load one configuration file, dispatching on its suffix."""
        if file_path.suffix in (".yaml", ".yml"):
            data = self._load_yaml(file_path)
        elif file_path.suffix == ".json":
            data = self._load_json(file_path)
        elif file_path.suffix in FLAT_SUFFIXES:
            data = parse_flat_config(file_path.read_text(encoding="utf-8"), str(file_path))
        else:
            raise ValueError(f"Unsupported file format: {file_path.suffix}")
        # A run manifest carries its configuration under "config".
        if isinstance(data.get("config"), dict) and "artifacts" in data:
            return data["config"]
        return data

    def _load_yaml(self, file_path: Path) -> Dict[str, Any]:
        """Load configuration from YAML file."""
        try:
            with open(file_path, 'r', encoding="utf-8") as f:
                data = yaml.safe_load(f)
                return data if data else {}
        except Exception as e:
            logger.error(f"Error loading YAML file {file_path}: {e}")
            raise

    def _load_json(self, file_path: Path) -> Dict[str, Any]:
        """Load configuration from JSON file."""
        try:
            with open(file_path, 'r', encoding="utf-8") as f:
                return json.load(f)
        except Exception as e:
            logger.error(f"Error loading JSON file {file_path}: {e}")
            raise

    def _merge_config(self, base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
        """Recursively merge two configuration dictionaries."""
        result = copy.deepcopy(base)
        for key, value in override.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._merge_config(result[key], value)
            else:
                result[key] = value
        return result

    def _apply_env_overrides(self, config_dict: Dict[str, Any]) -> Dict[str, Any]:
        """
        Apply environment variable overrides.

        Double underscores separate sections: SYNTH__LATENT_DIM -> synth.latent_dim.
        Top-level keys (ENVIRONMENT, SEED, WORKERS) are read directly.
        """
        section_names = set(RunConfig.model_fields)
        env_overrides: Dict[str, Any] = {}
        for env_key, env_value in os.environ.items():
            if "__" in env_key:
                parts = env_key.lower().split("__")
                if parts[0] not in section_names:
                    continue
                set_dotted(env_overrides, ".".join(parts), parse_value(env_value))
            else:
                key_lower = env_key.lower()
                if key_lower in TOP_LEVEL_KEYS:
                    env_overrides[key_lower] = parse_value(env_value)
        return self._merge_config(config_dict, env_overrides)

    def _load_config(
        self,
        config_path: Optional[Union[str, Path]] = None,
        overrides: Optional[Iterable[str]] = None,
    ) -> RunConfig:
        """
        Load configuration from files, environment and explicit overrides.

        :param config_path: Optional explicit configuration file
        :param overrides: ``key=value`` strings applied last
        """
        config_dict = self._load_config_files(config_path)
        config_dict = self._apply_env_overrides(config_dict)
        for item in overrides or ():
            if "=" not in item:
                raise ValueError(f"Override must look like key=value, got {item!r}")
            key, value = item.split("=", 1)
            set_dotted(config_dict, key, parse_value(value))

        try:
            config = RunConfig(**config_dict)
            logger.debug(f"Configuration loaded successfully (environment: {config.environment})")
            return config
        except Exception as e:
            logger.error(f"Error validating configuration: {e}")
            raise

    def reload(
        self,
        config_path: Optional[Union[str, Path]] = None,
        overrides: Optional[Iterable[str]] = None,
    ) -> None:
        """Reload configuration from files."""
        logger.debug("Reloading configuration...")
        self._config = self._load_config(config_path, overrides)

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value by dot-notation key.

        Example:
            config.get("synth.latent_dim")
            config.get("vocoder.griffin_lim_iters")
        """
        value: Any = self.config.model_dump()
        for part in key.split("."):
            if isinstance(value, dict) and part in value:
                value = value[part]
            else:
                return default
        return value

    def validate_config_file(self, config_path: Union[str, Path]) -> Tuple[bool, Optional[str]]:
        """
        Validate a configuration file without loading it.

        Returns:
            (is_valid, error_message)
        """
        try:
            path = Path(config_path)
            if not path.exists():
                return False, f"File not found: {config_path}"
            RunConfig(**self._load_file(path))
            return True, None
        except Exception as e:
            return False, str(e)

    def to_dict(self) -> Dict[str, Any]:
        """Export configuration as dictionary."""
        return self.config.model_dump()

    def to_yaml(self) -> str:
        """Export configuration as YAML string."""
        return yaml.dump(self.to_dict(), default_flow_style=False, sort_keys=False)

    def to_json(self) -> str:
        """Export configuration as JSON string."""
        return json.dumps(self.to_dict(), indent=2)

    def to_flat(self) -> str:
        """Export configuration in the flat key = value format."""
        return dump_flat_config(self.to_dict())


# Global instance
_config_manager: Optional[ConfigManager] = None


def get_config_manager() -> ConfigManager:
    """Get the global ConfigManager instance."""
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigManager()
    return _config_manager


def get_config() -> RunConfig:
    """Get the global configuration."""
    return get_config_manager().config


def reload_config(
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Iterable[str]] = None,
) -> None:
    """Reload the global configuration."""
    get_config_manager().reload(config_path, overrides)
