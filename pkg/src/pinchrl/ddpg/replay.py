from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Transition(NamedTuple):
    s: np.ndarray
    a: np.ndarray
    r: float
    s2: np.ndarray


class Batch(NamedTuple):
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s2: np.ndarray


class ReplayBuffer:
    """Fixed-capacity FIFO experience store backed by preallocated arrays."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros((capacity, action_dim))
        self.r = np.zeros(capacity)
        self.s2 = np.zeros((capacity, state_dim))
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, s, a, r, s2) -> None:
        i = self.cursor
        self.s[i] = s
        self.a[i] = a
        self.r[i] = r
        self.s2[i] = s2
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def __getitem__(self, i: int) -> Transition:
        """``i``-th oldest transition still stored."""
        if not 0 <= i < self.size:
            raise IndexError(i)
        j = (self.cursor - self.size + i) % self.capacity
        return Transition(self.s[j].copy(), self.a[j].copy(), float(self.r[j]), self.s2[j].copy())

    def sample(self, rng: np.random.Generator, batch_size: int) -> Batch:
        """Uniform draw with replacement; copies, so stored rows are never exposed."""
        if self.size < batch_size:
            raise ValueError(f"buffer holds {self.size} transitions, need {batch_size}")
        idx = rng.integers(0, self.size, batch_size)
        return Batch(self.s[idx], self.a[idx], self.r[idx], self.s2[idx])
