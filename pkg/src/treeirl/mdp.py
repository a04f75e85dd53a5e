"""Exponential tree MDPs with a sparse leftmost-path reward.

Nodes are numbered level-order with the root at 0, so descend-action ``k``
at node ``n`` leads to ``n * b + k + 1`` and the parent of ``n`` is
``(n - 1) // b``. Nothing about the tree is stored beyond a handful of
integers, which keeps b=15, 7-level trees (~12M nodes) free to construct.

The "shaky hands" variant adds one extra action per state (the last id)
that moves up to the parent, and with probability ``p_random`` replaces
the chosen action with one drawn uniformly from the full action set.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class TreeSpec:
    branching: int = 10
    levels: int = 7
    reward_magnitude: float = 1.0
    shaky: bool = False
    p_random: float = 0.2

    def __post_init__(self):
        if self.branching < 2:
            raise ValueError(f"branching must be >= 2, got {self.branching}")
        if self.levels < 2:
            raise ValueError(f"levels must be >= 2, got {self.levels}")
        if not 0.0 <= self.p_random <= 1.0:
            raise ValueError(f"p_random must lie in [0, 1], got {self.p_random}")
        if self.reward_magnitude <= 0:
            raise ValueError("reward_magnitude must be positive")


@dataclass(slots=True)
class Transition:
    state: int
    action: int
    reward: float
    next_state: int
    done: int
    is_expert: bool = False
    expert_next_action: Optional[int] = None


@dataclass
class Trajectory:
    transitions: list = field(default_factory=list)
    total_return: float = 0.0
    truncated: bool = False

    def __len__(self):
        return len(self.transitions)


class TreeMdp:
    """Immutable tree environment built from a :class:`TreeSpec`."""

    def __init__(self, spec: TreeSpec):
        self.spec = spec
        b, levels = spec.branching, spec.levels
        self.branching = b
        self.levels = levels
        self.n_states = (b**levels - 1) // (b - 1)
        # first id of the deepest layer; every id >= this is a leaf
        self.first_leaf = (b ** (levels - 1) - 1) // (b - 1)
        self.n_actions = b + 1 if spec.shaky else b
        self.parent_action = b if spec.shaky else None
        path = [0]
        for _ in range(levels - 1):
            path.append(path[-1] * b + 1)
        self.leftmost_path = tuple(path)
        self._on_path = frozenset(path)

    @property
    def root(self) -> int:
        return 0

    @property
    def n_leaves(self) -> int:
        return self.n_states - self.first_leaf

    @property
    def expert_return(self) -> float:
        return self.spec.reward_magnitude * (self.levels - 1)

    def is_leaf(self, state: int) -> bool:
        return state >= self.first_leaf

    def on_leftmost_path(self, state: int) -> bool:
        return state in self._on_path

    def depth(self, state: int) -> int:
        """Edges between ``state`` and the root."""
        d = 0
        while state > 0:
            state = (state - 1) // self.branching
            d += 1
        return d

    def _check(self, state: int, action: int):
        if not 0 <= state < self.n_states:
            raise ValueError(f"invalid state id {state}")
        if not 0 <= action < self.n_actions:
            raise ValueError(f"invalid action id {action} (n_actions={self.n_actions})")

    def child(self, state: int, action: int) -> int:
        return state * self.branching + action + 1

    def parent(self, state: int) -> int:
        # root self-loops
        return (state - 1) // self.branching if state > 0 else 0

    def successor(self, state: int, executed: int) -> int:
        if executed == self.parent_action:
            return self.parent(state)
        return self.child(state, executed)

    def gt_reward(self, state: int, action: int) -> float:
        self._check(state, action)
        if action == 0 and state in self._on_path and not self.is_leaf(state):
            return self.spec.reward_magnitude
        return 0.0

    def next_state_distribution(self, state: int, action: int) -> dict:
        """Exact ``{next_state: probability}`` for a chosen action."""
        self._check(state, action)
        if self.is_leaf(state):
            raise ValueError(f"state {state} is terminal")
        if not self.spec.shaky:
            return {self.child(state, action): 1.0}
        p = self.spec.p_random
        dist: dict = {}
        for executed in range(self.n_actions):
            prob = p / self.n_actions + (1.0 - p if executed == action else 0.0)
            nxt = self.successor(state, executed)
            dist[nxt] = dist.get(nxt, 0.0) + prob
        return dist

    def step(self, state: int, action: int, rng: Optional[np.random.Generator] = None) -> Transition:
        self._check(state, action)
        if self.is_leaf(state):
            raise ValueError(f"cannot step from leaf {state}")
        executed = action
        if self.spec.shaky:
            if rng is None:
                raise ValueError("shaky trees need an rng to step")
            if rng.random() < self.spec.p_random:
                executed = int(rng.integers(self.n_actions))
        nxt = self.successor(state, executed)
        return Transition(
            state=state,
            action=action,
            reward=self.gt_reward(state, executed),
            next_state=nxt,
            done=int(self.is_leaf(nxt)),
        )

    @property
    def max_episode_steps(self) -> int:
        if self.spec.shaky:
            return 4 * (self.levels - 1)
        return self.levels - 1

    def __repr__(self):
        s = self.spec
        kind = f"shaky p={s.p_random}" if s.shaky else "clean"
        return f"TreeMdp(b={s.branching}, levels={s.levels}, {kind})"


def build_tree(spec: TreeSpec) -> TreeMdp:
    return TreeMdp(spec)


def leftmost_demo(mdp: TreeMdp) -> Trajectory:
    """The expert's walk down the leftmost path, never perturbed."""
    path = mdp.leftmost_path
    traj = Trajectory()
    for i, s in enumerate(path[:-1]):
        nxt = path[i + 1]
        done = int(mdp.is_leaf(nxt))
        t = Transition(
            state=s,
            action=0,
            reward=mdp.gt_reward(s, 0),
            next_state=nxt,
            done=done,
            is_expert=True,
            expert_next_action=None if done else 0,
        )
        traj.transitions.append(t)
        traj.total_return += t.reward
    return traj


def rollout(mdp: TreeMdp, policy, rng: np.random.Generator, mode: str = "sampled",
            max_steps: Optional[int] = None) -> Trajectory:
    """Run ``policy`` from the root until a leaf (or the step cap on shaky trees)."""
    if mode not in ("sampled", "greedy"):
        raise ValueError(f"unknown rollout mode {mode!r}")
    cap = mdp.max_episode_steps if max_steps is None else max_steps
    traj = Trajectory()
    s = mdp.root
    for _ in range(cap):
        if mode == "greedy":
            a = policy.greedy(s)
        else:
            a = policy.sample(s, rng)
        t = mdp.step(s, a, rng)
        traj.transitions.append(t)
        traj.total_return += t.reward
        if t.done:
            break
        s = t.next_state
    else:
        traj.truncated = not traj.transitions[-1].done
    return traj
