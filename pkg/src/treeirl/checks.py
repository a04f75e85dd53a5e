"""Fast closed-form-vs-oracle checks behind ``treeirl check``."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from treeirl.learner import optimal_mixture_weight, policy_gradient, v_eqb, v_eqb_density
from treeirl.mdp import TreeSpec, build_tree
from treeirl.oracle import finite_diff_policy_gradient, numeric_veqb, soft_backward_induction
from treeirl.tabular import SoftmaxPolicy, SparseTable


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _eqb_instances(n: int, seed: int):
    rng = np.random.default_rng(seed)
    q = rng.uniform(-5.0, 5.0, size=(n, 2))
    logp = rng.uniform(-5.0, 0.0, size=(n, 2))
    alpha = rng.uniform(0.1, 2.0, size=n)
    return q, logp, alpha


def check_veqb(n: int = 1000, seed: int = 0, tol: float = 1e-6, max_seconds: float = 5.0):
    t0 = time.perf_counter()
    q, logp, alpha = _eqb_instances(n, seed)
    worst_plain = worst_density = 0.0
    for (q1, q2), (lp1, lp2), a in zip(q, logp, alpha):
        value, _ = numeric_veqb(q1, q2, alpha=a)
        worst_plain = max(worst_plain, abs(v_eqb(q1, q2, a) - value))
        value, _ = numeric_veqb(q1, q2, lp1, lp2, a, use_density=True)
        worst_density = max(worst_density, abs(v_eqb_density(q1, q2, lp1, lp2, a) - value))
    dt = time.perf_counter() - t0
    ok = worst_plain < tol and worst_density < tol and dt < max_seconds
    return CheckResult("EQB closed form vs numeric max",
                       ok, f"max err plain {worst_plain:.2e}, density {worst_density:.2e}, "
                           f"n={n}", dt)


def check_mixture_weight(n: int = 1000, seed: int = 0, tol: float = 1e-4):
    t0 = time.perf_counter()
    q, logp, alpha = _eqb_instances(n, seed)
    worst = 0.0
    for (q1, q2), (lp1, lp2), a in zip(q, logp, alpha):
        for dens in (False, True):
            l1, l2 = (lp1, lp2) if dens else (0.0, 0.0)
            _, w_num = numeric_veqb(q1, q2, l1, l2, a, use_density=dens)
            worst = max(worst, abs(optimal_mixture_weight(q1, q2, l1, l2, a) - w_num))
    dt = time.perf_counter() - t0
    return CheckResult("optimal mixture weight vs numeric argmax", worst < tol,
                       f"max err {worst:.2e}, n={n}", dt)


def check_policy_gradient(n: int = 100, seed: int = 0, tol: float = 1e-4,
                          max_seconds: float = 5.0):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        k = int(rng.integers(2, 16))
        alpha = float(rng.uniform(0.1, 2.0))
        q = SparseTable(k)
        q.row_ref(0)[:] = rng.normal(0.0, 2.0, k)
        pi = SoftmaxPolicy(k)
        pi.logits.row_ref(0)[:] = rng.normal(0.0, 1.5, k)
        g = policy_gradient(pi, q, 0, alpha)
        fd = finite_diff_policy_gradient(pi, q, 0, alpha, 1e-5)
        rel = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12)
        worst = max(worst, rel)
    dt = time.perf_counter() - t0
    return CheckResult("policy gradient vs central differences",
                       worst < tol and dt < max_seconds, f"max rel err {worst:.2e}, n={n}", dt)


def check_backward_induction(tol: float = 1e-9):
    t0 = time.perf_counter()
    mdp = build_tree(TreeSpec(branching=2, levels=2))
    sol = soft_backward_induction(mdp, lambda s, a: 1.0 if a == 0 else 0.0, alpha=1.0, gamma=1.0)
    v_err = abs(sol.v_star[0] - math.log(math.e + 1.0))
    p_err = abs(sol.pi_star.distribution(0)[0] - math.e / (math.e + 1.0))
    dt = time.perf_counter() - t0
    return CheckResult("soft backward induction, two-leaf tree", v_err < tol and p_err < tol,
                       f"V* err {v_err:.1e}, pi* err {p_err:.1e}", dt)


def run_all() -> list:
    return [check_veqb(), check_mixture_weight(), check_policy_gradient(),
            check_backward_induction()]
