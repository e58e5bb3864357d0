# trainer/replay.py

from __future__ import annotations

from collections import deque

import numpy as np

from agents.q_agent import Transition
from utils.errors import ValidationError

__all__ = ["ReplayMemory", "Transition"]


class ReplayMemory:
    """FIFO transition store with uniform sampling without replacement."""

    def __init__(self, capacity: int, rng: np.random.Generator):
        self.capacity = capacity
        self.rng = rng
        self._items: deque[Transition] = deque(maxlen=capacity)

    def push(self, t: Transition) -> None:
        self._items.append(t)

    def sample(self, batch_size: int) -> list[Transition]:
        if batch_size > len(self._items):
            raise ValidationError(f"cannot sample {batch_size} from {len(self._items)} transitions")
        picks = self.rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[int(i)] for i in picks]

    def __len__(self) -> int:
        return len(self._items)
