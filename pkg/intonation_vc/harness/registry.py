"""Registry of model kinds that can be stored in checkpoints."""
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Tuple, Type

import numpy as np

from intonation_vc.errors import UnknownModelKindError


class ModelSerializer(ABC):
    """Converts one model kind to and from checkpoint contents."""

    kind: str = ""

    @abstractmethod
    def handles(self, model: Any) -> bool:
        """Whether ``model`` is of this kind."""

    @abstractmethod
    def dump(self, model: Any) -> Tuple[str, Dict[str, np.ndarray], Dict[str, Any]]:
        """Return (specification text, named tensors, metadata)."""

    @abstractmethod
    def load(self, spec: str, tensors: Dict[str, np.ndarray], meta: Dict[str, Any]) -> Any:
        """Rebuild the model from checkpoint contents."""


class ModelRegistry:
    """Registry for managing model serializers."""

    _serializers: Dict[str, Type[ModelSerializer]] = {}

    @classmethod
    def register(cls, kind: str, serializer_class: Type[ModelSerializer]) -> None:
        """Register a serializer for a kind tag."""
        serializer_class.kind = kind
        cls._serializers[kind] = serializer_class

    @classmethod
    def get(cls, kind: str) -> ModelSerializer:
        """Get a serializer instance by kind tag."""
        serializer_class = cls._serializers.get(kind)
        if not serializer_class:
            raise UnknownModelKindError(
                f"Model kind '{kind}' not found in registry. Available kinds: {', '.join(cls.get_all_kinds())}"
            )
        return serializer_class()

    @classmethod
    def for_model(cls, model: Any) -> ModelSerializer:
        """Serializer whose kind matches ``model``."""
        for kind in cls.get_all_kinds():
            serializer = cls.get(kind)
            if serializer.handles(model):
                return serializer
        raise UnknownModelKindError(f"No registered model kind handles {type(model).__name__}")

    @classmethod
    def get_all_kinds(cls) -> List[str]:
        return sorted(cls._serializers)

    @classmethod
    def is_registered(cls, kind: str) -> bool:
        return kind in cls._serializers


def register_model(kind: str):
    """Decorator to register a serializer class under a kind tag."""
    def decorator(cls: Type[ModelSerializer]) -> Type[ModelSerializer]:
        ModelRegistry.register(kind, cls)
        return cls
    return decorator
