"""Policy evaluation and learning-curve summaries."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from treeirl.mdp import TreeMdp, rollout

NOT_REACHED = None


@dataclass
class LearningCurve:
    config_id: str
    seed: int
    det_return: list = field(default_factory=list)
    sto_return: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def iterations(self) -> list:
        return list(range(len(self.det_return)))

    def record(self, det: float, sto: float):
        self.det_return.append(float(det))
        self.sto_return.append(float(sto))

    def __len__(self):
        return len(self.det_return)


def evaluate(policy, mdp: TreeMdp, mode: str, rng: np.random.Generator, episodes: int = 10) -> float:
    """Greedy return of one episode, or mean sampled return over ``episodes``."""
    if mode == "deterministic":
        return rollout(mdp, policy, rng, mode="greedy").total_return
    if mode != "stochastic":
        raise ValueError(f"unknown evaluation mode {mode!r}")
    if episodes < 1:
        raise ValueError("stochastic evaluation needs at least one episode")
    total = 0.0
    for _ in range(episodes):
        total += rollout(mdp, policy, rng, mode="sampled").total_return
    return total / episodes


def iterations_to_fraction(curve, expert_return: float, fraction: float) -> Optional[int]:
    """First iteration whose deterministic return reaches ``fraction`` of the expert.

    ``curve`` is a :class:`LearningCurve` or a plain sequence of returns.
    Returns :data:`NOT_REACHED` (``None``) when the curve never gets there.
    """
    if not 0 <= fraction <= 1:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    values = curve.det_return if isinstance(curve, LearningCurve) else list(curve)
    if not values:
        raise ValueError("empty learning curve")
    target = fraction * expert_return
    for i, v in enumerate(values):
        if v >= target:
            return i
    return NOT_REACHED


def censored_mean(hits, budget: int) -> float:
    """Mean iterations-to-threshold, counting misses as the full budget."""
    return float(np.mean([budget if h is None else h for h in hits]))


def final_return(curve: LearningCurve, window: int = 10, which: str = "det") -> float:
    values = curve.det_return if which == "det" else curve.sto_return
    if not values:
        raise ValueError("empty learning curve")
    return float(np.mean(values[-window:]))
