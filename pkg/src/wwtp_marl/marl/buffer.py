"""FIFO experience replay with uniform sampling (with replacement)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Transition:
    obs: np.ndarray       # (n_agents, obs_dim)
    action: np.ndarray    # (n_agents,) raw set-points
    reward: float
    next_obs: np.ndarray  # (n_agents, obs_dim)


@dataclass
class Batch:
    obs: np.ndarray       # (N, n_agents, obs_dim)
    action: np.ndarray    # (N, n_agents)
    reward: np.ndarray    # (N,)
    next_obs: np.ndarray

    def __len__(self) -> int:
        return len(self.reward)


class ReplayBuffer:
    def __init__(self, capacity: int, n_agents: int, obs_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._obs = np.zeros((capacity, n_agents, obs_dim))
        self._act = np.zeros((capacity, n_agents))
        self._rew = np.zeros(capacity)
        self._next = np.zeros((capacity, n_agents, obs_dim))
        self._cursor = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, tr: Transition) -> None:
        i = self._cursor
        self._obs[i] = tr.obs
        self._act[i] = tr.action
        self._rew[i] = tr.reward
        self._next[i] = tr.next_obs
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def _order(self) -> np.ndarray:
        """Storage slots from oldest to newest."""
        if self._size < self.capacity:
            return np.arange(self._size)
        return (np.arange(self.capacity) + self._cursor) % self.capacity

    def contents(self) -> list[Transition]:
        return [Transition(self._obs[i].copy(), self._act[i].copy(), float(self._rew[i]),
                           self._next[i].copy()) for i in self._order()]

    def sample(self, n: int, rng: np.random.Generator) -> Batch | None:
        """``n`` transitions drawn uniformly with replacement; ``None`` if fewer than ``n`` stored."""
        if n < 1:
            raise ValueError("n must be >= 1")
        if self._size < n:
            return None
        idx = rng.integers(0, self._size, size=n)
        return Batch(self._obs[idx], self._act[idx], self._rew[idx], self._next[idx])
