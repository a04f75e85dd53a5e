"""MaxEntIRL outer loop with expert replay and expert Q bootstrapping.

Methods:

``baseline``  plain MaxEntIRL; the inner soft actor-critic only sees its own
              rollouts.
``erb``       expert transitions are mixed into every inner-loop batch at
              ``expert_ratio``.
``erb_eqb``   as ``erb``, and expert transitions get the two-way soft
              maximum critic target.
``bc``        behavior cloning on the demonstrations (see :func:`run_bc`).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from typing import Callable, Optional

import numpy as np

from treeirl.learner import (
    LearnerConfig,
    bc_update,
    eqb_target,
    policy_gradient_update,
    q_update,
    sac_target,
)
from treeirl.mdp import Transition, TreeMdp, TreeSpec, build_tree, leftmost_demo, rollout
from treeirl.metrics import LearningCurve, evaluate
from treeirl.tabular import SoftmaxPolicy, SparseTable

METHODS = ("baseline", "erb", "erb_eqb", "bc")


class ReplayBuffer:
    """Bounded FIFO of transitions with O(1) random access."""

    def __init__(self, capacity: int = 100_000):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._data: list = []
        self._next = 0

    def __len__(self):
        return len(self._data)

    def add(self, t: Transition):
        if len(self._data) < self.capacity:
            self._data.append(t)
        else:
            self._data[self._next] = t
        self._next = (self._next + 1) % self.capacity

    def extend(self, transitions):
        for t in transitions:
            self.add(t)

    def ordered(self) -> list:
        """Contents from oldest to newest."""
        if len(self._data) < self.capacity:
            return list(self._data)
        return self._data[self._next:] + self._data[:self._next]

    def sample(self, n: int, rng: np.random.Generator) -> list:
        if not self._data:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(len(self._data), size=n)
        return [self._data[i] for i in idx]


class ExpertSet:
    """Expert transitions, each annotated with the expert's next action."""

    def __init__(self, transitions):
        transitions = list(transitions)
        for t in transitions:
            if not t.is_expert:
                raise ValueError("expert set holds a non-expert transition")
            if not t.done and t.expert_next_action is None:
                raise ValueError(f"expert transition from {t.state} lacks expert_next_action")
        self.transitions = transitions

    @classmethod
    def from_demos(cls, mdp: TreeMdp, n_demos: int = 1) -> "ExpertSet":
        out = []
        for _ in range(n_demos):
            out.extend(leftmost_demo(mdp).transitions)
        return cls(out)

    def __len__(self):
        return len(self.transitions)

    def sample(self, n: int, rng: np.random.Generator) -> list:
        if not self.transitions:
            raise ValueError("cannot sample from an empty expert set")
        idx = rng.integers(len(self.transitions), size=n)
        return [self.transitions[i] for i in idx]


@dataclass
class MixedBatch:
    transitions: list
    expert_count: int

    def __len__(self):
        return len(self.transitions)

    def __iter__(self):
        return iter(self.transitions)


def sample_mixed_batch(expert: Optional[ExpertSet], policy_buffer: ReplayBuffer, batch_size: int,
                       ratio: float, rng: np.random.Generator) -> MixedBatch:
    """Exactly ``round(ratio * batch_size)`` expert samples, the rest from the buffer."""
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"expert ratio must lie in [0, 1], got {ratio}")
    n_expert = int(round(ratio * batch_size))
    n_learner = batch_size - n_expert
    if (expert is None or len(expert) == 0) and len(policy_buffer) == 0:
        raise ValueError("both the expert set and the policy buffer are empty")
    batch = expert.sample(n_expert, rng) if n_expert else []
    if n_learner:
        batch.extend(policy_buffer.sample(n_learner, rng))
    return MixedBatch(batch, n_expert)


def relabel(batch, reward: SparseTable) -> list:
    """Copies of ``batch`` with rewards from the current learned reward table."""
    return [dataclasses.replace(t, reward=reward.get(t.state, t.action)) for t in batch]


def reward_update(reward: SparseTable, expert_batch, learner_batch, eta_r: float):
    """Batch-mean step: raise expert (s, a) rewards, lower learner ones."""
    if not expert_batch or not learner_batch:
        raise ValueError("reward update needs non-empty expert and learner batches")
    up = eta_r / len(expert_batch)
    down = eta_r / len(learner_batch)
    for t in expert_batch:
        reward.add(t.state, t.action, up)
    for t in learner_batch:
        reward.add(t.state, t.action, -down)


@dataclass(frozen=True)
class IrlConfig:
    method: str = "erb_eqb"
    tree: TreeSpec = field(default_factory=TreeSpec)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    epochs: int = 500
    inner_steps: int = 10
    sac_updates: int = 1
    batch_size: int = 64
    expert_ratio: float = 0.5
    eta_r: float = 0.01
    buffer_capacity: int = 100_000
    reward_rollouts: int = 1
    policy_rollouts: int = 1
    n_demos: int = 1
    eval_episodes: int = 10
    logit_init_scale: float = 0.01
    fixed_reward: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 0.0 <= self.expert_ratio <= 1.0:
            raise ValueError("expert_ratio must lie in [0, 1]")
        for name in ("epochs", "inner_steps", "sac_updates", "batch_size", "buffer_capacity",
                     "reward_rollouts", "policy_rollouts", "eval_episodes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.eta_r <= 0:
            raise ValueError("eta_r must be positive")
        if self.logit_init_scale < 0:
            raise ValueError("logit_init_scale must be >= 0")

    @property
    def effective_ratio(self) -> float:
        """Expert share of inner-loop batches; only the ERB methods mix."""
        return 0.0 if self.method in ("baseline", "bc") else self.expert_ratio

    @property
    def config_id(self) -> str:
        t = self.tree
        parts = [self.method, f"b{t.branching}", f"L{t.levels}"]
        if t.shaky:
            parts.append(f"shaky{t.p_random:g}")
        parts += [f"etapi{self.learner.eta_pi:g}", f"ratio{self.effective_ratio:g}"]
        # everything else shows up only when it differs from the default
        base_learner = LearnerConfig()
        for name in ("gamma", "alpha", "alpha_eqb", "eta_q"):
            if name == "alpha_eqb" and self.method != "erb_eqb":
                continue
            value = getattr(self.learner, name)
            if value != getattr(base_learner, name):
                parts.append(f"{name.replace('_', '')}{value:g}")
        if t.reward_magnitude != 1.0:
            parts.append(f"rmag{t.reward_magnitude:g}")
        for f in fields(self):
            if f.name in _ID_SKIP:
                continue
            value = getattr(self, f.name)
            if value != f.default:
                parts.append(f"{f.name.replace('_', '')}{value:g}")
        return "-".join(parts)


_ID_SKIP = {"method", "tree", "learner", "expert_ratio", "seed"}


def ground_truth_reward(mdp: TreeMdp) -> SparseTable:
    table = SparseTable(mdp.n_actions)
    for s in mdp.leftmost_path[:-1]:
        table.set(s, 0, mdp.gt_reward(s, 0))
    return table


@dataclass
class RunState:
    """Everything a run owns; exposed so tests can inspect a finished run."""

    mdp: TreeMdp
    policy: SoftmaxPolicy
    q: SparseTable
    reward: SparseTable
    expert: ExpertSet
    d_learner: ReplayBuffer
    d_policy: ReplayBuffer
    curve: LearningCurve


def _critic_actor_step(state: RunState, batch, cfg: IrlConfig, use_eqb: bool,
                       rng: np.random.Generator):
    lc = cfg.learner
    q, policy = state.q, state.policy
    targets = []
    for t in batch:
        if use_eqb and t.is_expert:
            targets.append(eqb_target(q, policy, t, lc, rng))
        else:
            targets.append(sac_target(q, policy, t, lc, rng))
    for t, y in zip(batch, targets):
        q_update(q, t.state, t.action, y, lc.eta_q)
    policy_gradient_update(policy, q, [t.state for t in batch], lc.eta_pi, lc.alpha)


def _curve_meta(cfg: IrlConfig) -> dict:
    return {
        "method": cfg.method,
        "branching": cfg.tree.branching,
        "levels": cfg.tree.levels,
        "shaky": cfg.tree.shaky,
        "eta_pi": cfg.learner.eta_pi,
        "expert_ratio": cfg.effective_ratio,
    }


def _init_state(cfg: IrlConfig) -> RunState:
    mdp = build_tree(cfg.tree)
    reward = ground_truth_reward(mdp) if cfg.fixed_reward else SparseTable(mdp.n_actions)
    return RunState(
        mdp=mdp,
        policy=SoftmaxPolicy(mdp.n_actions, cfg.logit_init_scale, init_seed=cfg.seed),
        q=SparseTable(mdp.n_actions),
        reward=reward,
        expert=ExpertSet.from_demos(mdp, cfg.n_demos),
        d_learner=ReplayBuffer(cfg.buffer_capacity),
        d_policy=ReplayBuffer(cfg.buffer_capacity),
        curve=LearningCurve(cfg.config_id, cfg.seed, meta=_curve_meta(cfg)),
    )


def _record(state: RunState, cfg: IrlConfig, eval_rng: np.random.Generator):
    det = evaluate(state.policy, state.mdp, "deterministic", eval_rng)
    sto = evaluate(state.policy, state.mdp, "stochastic", eval_rng, cfg.eval_episodes)
    state.curve.record(det, sto)


def run_maxentirl(cfg: IrlConfig, on_epoch: Optional[Callable] = None,
                  return_state: bool = False):
    """Train one (config, seed) pair and return its learning curve.

    Per epoch: one reward step from a fresh learner rollout, then
    ``inner_steps`` rounds of rollout collection and actor-critic updates,
    then one evaluation. Training and evaluation draw from separate
    streams derived from ``cfg.seed``.
    """
    if cfg.method == "bc":
        return run_bc(cfg, on_epoch=on_epoch, return_state=return_state)
    rng = np.random.default_rng([cfg.seed, 0])
    eval_rng = np.random.default_rng([cfg.seed, 1])
    st = _init_state(cfg)
    ratio = cfg.effective_ratio
    use_eqb = cfg.method == "erb_eqb"
    inner_expert = st.expert if ratio > 0 else None
    for epoch in range(cfg.epochs):
        if not cfg.fixed_reward:
            for _ in range(cfg.reward_rollouts):
                st.d_learner.extend(rollout(st.mdp, st.policy, rng).transitions)
            b_e = st.expert.sample(cfg.batch_size, rng)
            b_l = st.d_learner.sample(cfg.batch_size, rng)
            reward_update(st.reward, b_e, b_l, cfg.eta_r)
        for _ in range(cfg.inner_steps):
            for _ in range(cfg.policy_rollouts):
                st.d_policy.extend(rollout(st.mdp, st.policy, rng).transitions)
            for _ in range(cfg.sac_updates):
                batch = sample_mixed_batch(inner_expert, st.d_policy, cfg.batch_size, ratio, rng)
                _critic_actor_step(st, relabel(batch, st.reward), cfg, use_eqb, rng)
        _record(st, cfg, eval_rng)
        if on_epoch is not None:
            on_epoch(epoch, st)
    return st if return_state else st.curve


def run_bc(cfg: IrlConfig, on_epoch: Optional[Callable] = None, return_state: bool = False):
    """Behavior cloning with the same update count and evaluation as the IRL runs."""
    if cfg.method != "bc":
        raise ValueError("run_bc expects method='bc'")
    rng = np.random.default_rng([cfg.seed, 0])
    eval_rng = np.random.default_rng([cfg.seed, 1])
    st = _init_state(cfg)
    if len(st.expert) == 0:
        raise ValueError("behavior cloning needs demonstrations")
    for epoch in range(cfg.epochs):
        for _ in range(cfg.inner_steps * cfg.sac_updates):
            bc_update(st.policy, st.expert.sample(cfg.batch_size, rng), cfg.learner.eta_pi)
        _record(st, cfg, eval_rng)
        if on_epoch is not None:
            on_epoch(epoch, st)
    return st if return_state else st.curve
