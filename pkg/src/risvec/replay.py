"""Uniform experience replay over joint transitions.

One transition carries the concatenated multi-agent state and action plus
both reward views (per-agent and global). Storage is a fixed-capacity ring:
once full, the oldest entry is overwritten. Sampling is uniform without
replacement and requires strictly more stored entries than the batch size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward_local: np.ndarray     # one entry per agent
    reward_global: float
    next_state: np.ndarray


class ReplayBuffer:
    def __init__(self, capacity: int, rng: np.random.Generator):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.rng = rng
        self._items: list[Transition] = []
        self._write = 0
        self._dims = None

    def __len__(self) -> int:
        return len(self._items)

    def push(self, tr: Transition) -> None:
        state = np.asarray(tr.state, dtype=float)
        action = np.asarray(tr.action, dtype=float)
        r_loc = np.atleast_1d(np.asarray(tr.reward_local, dtype=float))
        next_state = np.asarray(tr.next_state, dtype=float)
        if state.ndim != 1 or action.ndim != 1 or next_state.ndim != 1:
            raise ValueError("states and actions must be flat vectors")
        dims = (state.shape[0], action.shape[0], r_loc.shape[0],
                next_state.shape[0])
        if self._dims is None:
            if state.shape != next_state.shape:
                raise ValueError("state and next_state widths differ")
            self._dims = dims
        elif dims != self._dims:
            raise ValueError("transition shape %r does not match buffer %r"
                             % (dims, self._dims))
        item = Transition(state, action, r_loc, float(tr.reward_global),
                          next_state)
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._write] = item
        self._write = (self._write + 1) % self.capacity

    def sample(self, batch_size: int):
        """Batch of arrays (states, actions, r_local, r_global, next_states).

        Uniform without replacement; the buffer must hold more than
        batch_size entries (learning only starts past that point).
        """
        n = len(self._items)
        if n <= batch_size:
            raise ValueError("buffer holds %d <= batch size %d" % (n, batch_size))
        idx = self.rng.choice(n, size=batch_size, replace=False)
        states = np.stack([self._items[i].state for i in idx])
        actions = np.stack([self._items[i].action for i in idx])
        r_local = np.stack([self._items[i].reward_local for i in idx])
        r_global = np.array([self._items[i].reward_global for i in idx])
        next_states = np.stack([self._items[i].next_state for i in idx])
        return states, actions, r_local, r_global, next_states
