from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Experience:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool


class ReplayBuffer:
    """Bounded FIFO of transitions with seeded uniform sampling."""

    def __init__(self, capacity: int, rng: np.random.Generator | None = None):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.rng = rng if rng is not None else np.random.default_rng()
        self._items: deque[Experience] = deque(maxlen=capacity)

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def add(self, state, action, reward, next_state, terminal):
        self._items.append(Experience(np.asarray(state, dtype=float), int(action), float(reward),
                                      np.asarray(next_state, dtype=float), bool(terminal)))

    def sample(self, batch_size: int):
        """Uniform minibatch without replacement, stacked into arrays."""
        if batch_size > len(self._items):
            raise ValueError(f"cannot sample {batch_size} from {len(self._items)} transitions")
        idx = self.rng.choice(len(self._items), size=batch_size, replace=False)
        batch = [self._items[i] for i in idx]
        return (
            np.stack([e.state for e in batch]),
            np.array([e.action for e in batch], dtype=np.int64),
            np.array([e.reward for e in batch]),
            np.stack([e.next_state for e in batch]),
            np.array([e.terminal for e in batch], dtype=bool),
        )
