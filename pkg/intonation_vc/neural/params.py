"""Named parameter store."""
from collections.abc import MutableMapping
from typing import Any, Dict, Iterator, Mapping, Optional

import numpy as np


class NetworkParams(MutableMapping):
    """
    Mapping of dot-separated parameter paths to arrays.

    Iteration is always in sorted name order so that optimizer updates,
    checkpoints and gradient checks visit tensors deterministically.
    """

    def __init__(self, tensors: Optional[Mapping[str, Any]] = None):
        self._tensors: Dict[str, np.ndarray] = {}
        for name, value in (tensors or {}).items():
            self[name] = value

    def __getitem__(self, name: str) -> np.ndarray:
        return self._tensors[name]

    def __setitem__(self, name: str, value: Any) -> None:
        array = np.asarray(value)
        if not np.all(np.isfinite(array)):
            raise ValueError(f"Parameter '{name}' contains non-finite values")
        self._tensors[name] = array

    def __delitem__(self, name: str) -> None:
        del self._tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._tensors))

    def __len__(self) -> int:
        return len(self._tensors)

    def __repr__(self) -> str:
        shapes = ", ".join(f"{k}: {tuple(v.shape)}" for k, v in self.items())
        return f"NetworkParams({shapes})"

    def copy(self) -> "NetworkParams":
        return NetworkParams({k: v.copy() for k, v in self.items()})

    def astype(self, dtype: Any) -> "NetworkParams":
        return NetworkParams({k: v.astype(dtype) for k, v in self.items()})

    def zeros_like(self) -> "NetworkParams":
        return NetworkParams({k: np.zeros_like(v) for k, v in self.items()})

    def subset(self, prefix: str) -> "NetworkParams":
        """Parameters whose path starts with ``prefix``."""
        return NetworkParams({k: v for k, v in self.items() if k.startswith(prefix)})

    def flat_count(self) -> int:
        """Total number of scalar parameters."""
        return int(sum(v.size for v in self._tensors.values()))

    @property
    def dtype(self) -> np.dtype:
        for value in self._tensors.values():
            return value.dtype
        return np.dtype(np.float64)
