"""Tabular soft actor-critic pieces: critic targets, policy ascent, BC.

The critic target on expert transitions can be replaced by the expert
Q-bootstrapping value, a two-way soft maximum over the policy's sampled
next action and the expert's recorded next action. It is the optimal
soft value of a meta policy that picks the policy's action with
probability ``w`` and the expert's with ``1 - w``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from treeirl.mdp import Transition
from treeirl.tabular import SoftmaxPolicy, SparseTable, log_softmax


@dataclass(frozen=True)
class LearnerConfig:
    gamma: float = 1.0
    alpha: float = 1.0
    alpha_eqb: float = 1.0
    eta_q: float = 0.01
    eta_pi: float = 0.01

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        for name in ("alpha", "alpha_eqb", "eta_q", "eta_pi"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def _check_alpha(alpha: float):
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")


def _lse2(x: float, y: float) -> float:
    m = max(x, y)
    return m + float(np.log1p(np.exp(-abs(x - y))))


def v_eqb(q_policy_action: float, q_expert_action: float, alpha: float) -> float:
    """``alpha * log(exp(q_E / alpha) + exp(q_pi / alpha))``."""
    _check_alpha(alpha)
    return alpha * _lse2(q_policy_action / alpha, q_expert_action / alpha)


def v_eqb_density(q1: float, q2: float, logp1: float, logp2: float, alpha: float) -> float:
    """Soft two-way maximum with each action's log-density folded into its Q."""
    _check_alpha(alpha)
    return alpha * _lse2((q1 - alpha * logp1) / alpha, (q2 - alpha * logp2) / alpha)


def optimal_mixture_weight(q1: float, q2: float, logp1: float, logp2: float, alpha: float) -> float:
    """Maximizing probability on action 1 (the policy's action).

    Stationary point of the concave meta-policy objective; a logistic of the
    density-adjusted Q gap, so always strictly inside (0, 1) for finite
    inputs (up to float rounding at extreme gaps).
    """
    _check_alpha(alpha)
    z = ((q2 - alpha * logp2) - (q1 - alpha * logp1)) / alpha
    if z >= 0:
        e = np.exp(-z)
        return float(e / (1.0 + e))
    return float(1.0 / (1.0 + np.exp(z)))


def sac_target(q: SparseTable, policy: SoftmaxPolicy, t: Transition, cfg: LearnerConfig,
               rng: np.random.Generator) -> float:
    if t.done:
        return t.reward
    logp = policy.log_probs(t.next_state)
    a_next = policy.sample(t.next_state, rng)
    soft_q = q.get(t.next_state, a_next) - cfg.alpha * logp[a_next]
    return t.reward + cfg.gamma * soft_q


def eqb_target(q: SparseTable, policy: SoftmaxPolicy, t: Transition, cfg: LearnerConfig,
               rng: np.random.Generator) -> float:
    if t.done:
        return t.reward
    if t.expert_next_action is None:
        raise ValueError(f"expert transition from {t.state} has no expert_next_action")
    a_next = policy.sample(t.next_state, rng)
    value = v_eqb(q.get(t.next_state, a_next), q.get(t.next_state, t.expert_next_action),
                  cfg.alpha_eqb)
    return t.reward + cfg.gamma * value


def q_update(q: SparseTable, state: int, action: int, y: float, eta_q: float):
    row = q.row_ref(state)
    row[action] += eta_q * (y - row[action])


def objective_from_logits(logits: np.ndarray, q_row: np.ndarray, alpha: float) -> float:
    logp = log_softmax(logits)
    p = np.exp(logp)
    return float(np.dot(p, q_row - alpha * logp))


def gradient_from_logits(logits: np.ndarray, q_row: np.ndarray, alpha: float) -> np.ndarray:
    # d/dv_k sum_a pi_a (Q_a - alpha log pi_a) = pi_k (Q_k - alpha log pi_k - J)
    logp = log_softmax(logits)
    p = np.exp(logp)
    adv = q_row - alpha * logp
    return p * (adv - np.dot(p, adv))


def policy_objective(policy: SoftmaxPolicy, q: SparseTable, state: int, alpha: float) -> float:
    """Exact ``E_{a~pi}[Q(s, a) - alpha log pi(a|s)]`` at one state."""
    return objective_from_logits(policy.logit_row(state), q.row(state), alpha)


def policy_gradient(policy: SoftmaxPolicy, q: SparseTable, state: int, alpha: float) -> np.ndarray:
    return gradient_from_logits(policy.logit_row(state), q.row(state), alpha)


def policy_gradient_update(policy: SoftmaxPolicy, q: SparseTable, states, eta_pi: float,
                           alpha: float):
    """One ascent step on the summed objective over ``states``.

    Repeated states contribute once per occurrence. All gradients are taken
    at the pre-update logits.
    """
    counts: dict[int, int] = {}
    for s in states:
        counts[s] = counts.get(s, 0) + 1
    grads = [(s, n * policy_gradient(policy, q, s, alpha)) for s, n in counts.items()]
    for s, g in grads:
        policy.logit_row(s)[:] += eta_pi * g


def bc_update(policy: SoftmaxPolicy, expert_batch, eta: float):
    """Ascent step on the summed log-likelihood of the batch's expert actions."""
    if not expert_batch:
        raise ValueError("behavior cloning needs a non-empty expert batch")
    # grad of log pi(a|s) wrt v(s, .) is onehot(a) - pi(.|s); grouped by state
    steps: dict[int, np.ndarray] = {}
    for t in expert_batch:
        g = steps.get(t.state)
        if g is None:
            g = steps[t.state] = np.zeros(policy.n_actions)
        g[t.action] += 1.0
    for s, g in steps.items():
        n = g.sum()
        g -= n * policy.distribution(s)
    for s, g in steps.items():
        policy.logit_row(s)[:] += eta * g
