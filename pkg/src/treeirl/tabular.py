"""Sparse (state, action) tables and the softmax policy built on them."""
from __future__ import annotations

import io
from typing import Iterator, Optional

import numpy as np


class SparseTable:
    """Default-zero map from ``(state, action)`` to float.

    Storage is one dense row per touched state, so a state's action values
    can be read and written as a vector.
    """

    def __init__(self, n_actions: int):
        if n_actions < 1:
            raise ValueError("n_actions must be >= 1")
        self.n_actions = n_actions
        self._rows: dict[int, np.ndarray] = {}

    def __len__(self):
        return len(self._rows)

    def __contains__(self, state: int) -> bool:
        return state in self._rows

    def get(self, state: int, action: int) -> float:
        row = self._rows.get(state)
        return 0.0 if row is None else float(row[action])

    def set(self, state: int, action: int, value: float):
        self.row_ref(state)[action] = value

    def add(self, state: int, action: int, delta: float):
        self.row_ref(state)[action] += delta

    def row(self, state: int) -> np.ndarray:
        """Copy of the action values at ``state``."""
        row = self._rows.get(state)
        if row is None:
            return np.zeros(self.n_actions)
        return row.copy()

    def row_ref(self, state: int) -> np.ndarray:
        """Mutable row, created as zeros on first access."""
        row = self._rows.get(state)
        if row is None:
            row = np.zeros(self.n_actions)
            self._rows[state] = row
        return row

    def peek(self, state: int) -> Optional[np.ndarray]:
        return self._rows.get(state)

    def states(self) -> Iterator[int]:
        return iter(sorted(self._rows))

    def items(self) -> Iterator[tuple[int, int, float]]:
        for s in sorted(self._rows):
            for a, v in enumerate(self._rows[s]):
                yield s, a, float(v)

    def copy(self) -> "SparseTable":
        out = SparseTable(self.n_actions)
        out._rows = {s: r.copy() for s, r in self._rows.items()}
        return out

    def to_text(self) -> str:
        """Flat ``state action value`` lines, nonzero entries only."""
        buf = io.StringIO()
        for s, a, v in self.items():
            if v != 0.0:
                buf.write(f"{s} {a} {v!r}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str, n_actions: int) -> "SparseTable":
        table = cls(n_actions)
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'state action value', got {line!r}")
            table.set(int(parts[0]), int(parts[1]), float(parts[2]))
        return table


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - logits.max())
    return z / z.sum()


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    return shifted - np.log(np.exp(shifted).sum())


def entropy(probs: np.ndarray) -> float:
    nz = probs[probs > 0]
    return float(-(nz * np.log(nz)).sum())


class SoftmaxPolicy:
    """Per-state softmax over a logit table.

    With ``init_scale > 0`` every state's logits start as Gaussian noise of
    that scale, drawn from a stream keyed on ``(init_seed, state)``. The
    noise is materialized the first time a state is touched, so the
    resulting values do not depend on visit order.
    """

    def __init__(self, n_actions: int, init_scale: float = 0.0, init_seed: int = 0):
        self.n_actions = n_actions
        self.logits = SparseTable(n_actions)
        self.init_scale = init_scale
        self.init_seed = init_seed

    def logit_row(self, state: int) -> np.ndarray:
        """Mutable logits of ``state``."""
        row = self.logits.peek(state)
        if row is None:
            row = self.logits.row_ref(state)
            if self.init_scale > 0:
                noise = np.random.default_rng([self.init_seed, state]).normal(size=self.n_actions)
                row += self.init_scale * noise
        return row

    def distribution(self, state: int) -> np.ndarray:
        return softmax(self.logit_row(state))

    def log_probs(self, state: int) -> np.ndarray:
        return log_softmax(self.logit_row(state))

    def log_prob(self, state: int, action: int) -> float:
        return float(self.log_probs(state)[action])

    def sample(self, state: int, rng: np.random.Generator) -> int:
        p = self.distribution(state)
        # inverse-cdf draw; one uniform per call keeps streams aligned
        a = int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right"))
        return min(a, self.n_actions - 1)

    def greedy(self, state: int) -> int:
        # np.argmax returns the first maximum, i.e. the lowest action id
        return int(np.argmax(self.logit_row(state)))


def action_distribution(policy: SoftmaxPolicy, state: int, action_count: int) -> np.ndarray:
    if action_count < 1:
        raise ValueError("action_count must be >= 1")
    if action_count != policy.n_actions:
        raise ValueError(f"policy has {policy.n_actions} actions, asked for {action_count}")
    return policy.distribution(state)
