"""Experience storage and observation encoding shared by the learners."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kinematics import N_ACTIONS
from ..nn import downsample_frame


class InsufficientDataError(RuntimeError):
    pass


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    terminated: bool
    truncated: bool

    def __post_init__(self):
        if not 0 <= int(self.a) < N_ACTIONS:
            raise ValueError(f"action {self.a} outside [0, {N_ACTIONS - 1}]")
        if not np.isfinite(self.r):
            raise ValueError("reward must be finite")


def encode_observation(obs: np.ndarray) -> np.ndarray:
    """Compact storage form: frames become 5x box-averaged uint8, features stay float."""
    obs = np.asarray(obs)
    if obs.ndim == 3:
        return np.rint(downsample_frame(obs) * 255.0).astype(np.uint8)
    return obs.astype(np.float64)


def network_input(encoded: np.ndarray) -> np.ndarray:
    """Float batch or sample for the network from encoded observations."""
    if encoded.dtype == np.uint8:
        return encoded.astype(np.float64) / 255.0
    return np.asarray(encoded, dtype=np.float64)


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling.

    Observations are stored encoded (see :func:`encode_observation`).
    """

    def __init__(self, capacity: int, obs_shape: tuple[int, ...], obs_dtype=np.float64):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.s = np.zeros((capacity, *obs_shape), dtype=obs_dtype)
        self.s_next = np.zeros((capacity, *obs_shape), dtype=obs_dtype)
        self.a = np.zeros(capacity, dtype=np.int64)
        self.r = np.zeros(capacity)
        self.terminated = np.zeros(capacity, dtype=bool)
        self.truncated = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._next = 0
        # insertion counter of each slot, lets tests check FIFO eviction
        self.stamp = np.full(capacity, -1, dtype=np.int64)
        self.n_added = 0

    def __len__(self):
        return self.size

    def add(self, t: Transition) -> None:
        i = self._next
        self.s[i] = t.s
        self.s_next[i] = t.s_next
        self.a[i] = t.a
        self.r[i] = t.r
        self.terminated[i] = t.terminated
        self.truncated[i] = t.truncated
        self.stamp[i] = self.n_added
        self.n_added += 1
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self.size < batch_size:
            raise InsufficientDataError(f"buffer holds {self.size} transitions, batch needs {batch_size}")
        return rng.integers(0, self.size, batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
        idx = self.sample_indices(batch_size, rng)
        return {
            "s": self.s[idx],
            "a": self.a[idx],
            "r": self.r[idx],
            "s_next": self.s_next[idx],
            "terminated": self.terminated[idx],
            "truncated": self.truncated[idx],
        }
