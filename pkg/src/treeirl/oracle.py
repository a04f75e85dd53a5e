"""Independent reference computations used to check the learner.

Nothing here shares code paths with :mod:`treeirl.learner` beyond the
table and policy containers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, xlogy

from treeirl.mdp import TreeMdp
from treeirl.tabular import SoftmaxPolicy, SparseTable

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class SoftSolution:
    q_star: SparseTable
    v_star: dict
    pi_star: SoftmaxPolicy
    alpha: float


def soft_backward_induction(mdp: TreeMdp, reward_fn, alpha: float = 1.0,
                            gamma: float = 1.0) -> SoftSolution:
    """Exact soft-optimal Q, V and policy on a clean tree, one backward pass.

    ``reward_fn(state, action)`` gives the reward; leaves have V* = 0.
    Internal nodes are swept in decreasing id order, which is deepest-first
    under level-order numbering.
    """
    if mdp.spec.shaky:
        raise ValueError("backward induction needs deterministic dynamics")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    b = mdp.n_actions
    q_star = SparseTable(b)
    v_star: dict[int, float] = {s: 0.0 for s in range(mdp.first_leaf, mdp.n_states)}
    for s in range(mdp.first_leaf - 1, -1, -1):
        row = q_star.row_ref(s)
        for a in range(b):
            row[a] = reward_fn(s, a) + gamma * v_star[mdp.child(s, a)]
        v_star[s] = float(alpha * logsumexp(row / alpha))
    pi_star = SoftmaxPolicy(b)
    for s in q_star.states():
        pi_star.logits.row_ref(s)[:] = q_star.row(s) / alpha
    return SoftSolution(q_star=q_star, v_star=v_star, pi_star=pi_star, alpha=alpha)


def meta_objective(w: float, q1: float, q2: float, logp1: float = 0.0, logp2: float = 0.0,
                   alpha: float = 1.0) -> float:
    """Entropy-regularized value of picking action 1 w.p. ``w``, action 2 otherwise."""
    return (w * (q1 - alpha * logp1) + (1.0 - w) * (q2 - alpha * logp2)
            - alpha * (xlogy(w, w) + xlogy(1.0 - w, 1.0 - w)))


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200):
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    candidates = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    fx, x = max(candidates)
    return x, fx


def numeric_veqb(q1: float, q2: float, logp1: float = 0.0, logp2: float = 0.0,
                 alpha: float = 1.0, use_density: bool = False, grid_points: int = 10_000):
    """Brute-force the two-action meta-policy value; returns ``(value, w)``.

    Grid search over ``w`` followed by golden-section refinement in the
    bracketing cell. Action 1 is the policy's action.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not use_density:
        logp1 = logp2 = 0.0

    def f(w):
        return meta_objective(w, q1, q2, logp1, logp2, alpha)

    grid = np.linspace(0.0, 1.0, grid_points + 1)
    values = f(grid)
    i = int(np.argmax(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid_points)]
    w, value = golden_section_max(f, lo, hi)
    return float(value), float(w)


def finite_diff_policy_gradient(policy: SoftmaxPolicy, q: SparseTable, state: int,
                                alpha: float, epsilon: float = 1e-5) -> np.ndarray:
    """Central differences of the state's expected soft Q w.r.t. each logit."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    base = policy.logit_row(state).copy()
    q_row = q.row(state)

    def objective(v):
        # written out independently of the learner's helper
        z = v - v.max()
        p = np.exp(z) / np.exp(z).sum()
        return sum(pa * (qa - alpha * math.log(pa)) for pa, qa in zip(p, q_row))

    grad = np.zeros_like(base)
    for k in range(base.size):
        e = np.zeros_like(base)
        e[k] = epsilon
        grad[k] = (objective(base + e) - objective(base - e)) / (2.0 * epsilon)
    return grad
