from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict

import numpy as np


def jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays (possibly nested in dicts/lists) to plain JSON types."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


class BaseAgent(ABC):
    def __init__(self, name: str):
        self.name = name
        self.log = logging.getLogger(f"agents.{name}")

    def describe(self) -> Dict[str, Any]:
        return {"agent": self.name}

    @abstractmethod
    def run(self, *args, **kwargs):
        ...
