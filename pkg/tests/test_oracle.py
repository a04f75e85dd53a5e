import math

import numpy as np
import pytest
from scipy.special import logsumexp

from treeirl.mdp import TreeSpec, build_tree
from treeirl.oracle import (
    finite_diff_policy_gradient,
    golden_section_max,
    meta_objective,
    numeric_veqb,
    soft_backward_induction,
)
from treeirl.tabular import SoftmaxPolicy, SparseTable


def gt(mdp):
    return mdp.gt_reward


def test_two_leaf_hand_backup():
    mdp = build_tree(TreeSpec(branching=2, levels=2))
    sol = soft_backward_induction(mdp, lambda s, a: 1.0 if a == 0 else 0.0)
    assert sol.q_star.row(0).tolist() == [1.0, 0.0]
    assert abs(sol.v_star[0] - math.log(math.e + 1)) < 1e-12
    assert abs(sol.pi_star.distribution(0)[0] - math.e / (math.e + 1)) < 1e-12


def test_small_alpha_approaches_max_path():
    mdp = build_tree(TreeSpec(branching=3, levels=4))
    sol = soft_backward_induction(mdp, gt(mdp), alpha=1e-3)
    assert sol.v_star[0] == pytest.approx(3.0, abs=1e-2)


@pytest.mark.parametrize("b,levels,alpha", [(2, 4, 1.0), (3, 3, 0.5), (4, 3, 2.0)])
def test_zero_reward_telescopes_to_entropy(b, levels, alpha):
    mdp = build_tree(TreeSpec(branching=b, levels=levels))
    sol = soft_backward_induction(mdp, lambda s, a: 0.0, alpha=alpha)
    for s in range(mdp.n_states):
        remaining = levels - 1 - mdp.depth(s)
        assert sol.v_star[s] == pytest.approx(alpha * remaining * math.log(b), abs=1e-12)


def test_backward_induction_consistency():
    mdp = build_tree(TreeSpec(branching=3, levels=4))
    rng = np.random.default_rng(0)
    r = rng.normal(size=(mdp.n_states, 3))
    sol = soft_backward_induction(mdp, lambda s, a: r[s, a], alpha=0.7, gamma=0.9)
    again = soft_backward_induction(mdp, lambda s, a: r[s, a], alpha=0.7, gamma=0.9)
    assert list(sol.q_star.items()) == list(again.q_star.items())
    for s in range(mdp.first_leaf):
        row = sol.q_star.row(s)
        assert abs(sol.v_star[s] - 0.7 * logsumexp(row / 0.7)) < 1e-12
        assert np.allclose(sol.pi_star.distribution(s), np.exp((row - sol.v_star[s]) / 0.7),
                           atol=1e-12)


def test_ground_truth_prefers_leftmost_on_path():
    mdp = build_tree(TreeSpec(branching=4, levels=4))
    sol = soft_backward_induction(mdp, gt(mdp))
    for s in mdp.leftmost_path[:-1]:
        p = sol.pi_star.distribution(s)
        assert int(np.argmax(p)) == 0 and p[0] > p[1:].max()


def test_rejects_shaky():
    with pytest.raises(ValueError):
        soft_backward_induction(build_tree(TreeSpec(2, 3, shaky=True)), lambda s, a: 0.0)


class TestNumericVeqb:
    def test_symmetric(self):
        value, w = numeric_veqb(0.4, 0.4, alpha=0.5)
        assert w == pytest.approx(0.5, abs=1e-6)
        assert value == pytest.approx(0.4 + 0.5 * math.log(2), abs=1e-12)

    def test_dominance_limit(self):
        value, w = numeric_veqb(100.0, 0.0, alpha=1.0)
        assert w == pytest.approx(1.0, abs=1e-8)
        assert value == pytest.approx(100.0, abs=1e-6)

    def test_argmax_reproduces_value(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            q1, q2 = rng.uniform(-5, 5, 2)
            lp1, lp2 = rng.uniform(-4, 0, 2)
            a = rng.uniform(0.1, 2)
            value, w = numeric_veqb(q1, q2, lp1, lp2, a, use_density=True)
            assert abs(meta_objective(w, q1, q2, lp1, lp2, a) - value) < 1e-10

    def test_density_flag(self):
        plain, _ = numeric_veqb(0.0, 0.0, -3.0, -1.0, 1.0, use_density=False)
        dens, _ = numeric_veqb(0.0, 0.0, -3.0, -1.0, 1.0, use_density=True)
        assert plain == pytest.approx(math.log(2))
        assert dens == pytest.approx(math.log(math.exp(3) + math.exp(1)), abs=1e-9)

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            numeric_veqb(0, 0, alpha=0)


def test_golden_section_on_quadratic():
    x, fx = golden_section_max(lambda x: -(x - 0.3) ** 2, 0.0, 1.0)
    assert x == pytest.approx(0.3, abs=1e-6) and fx == pytest.approx(0.0, abs=1e-12)


class TestFiniteDiff:
    def test_stationary_point(self):
        q = SparseTable(5)
        q.row_ref(2)[:] = 1.5
        g = finite_diff_policy_gradient(SoftmaxPolicy(5), q, 2, 1.0)
        assert np.allclose(g, 0.0, atol=1e-6)

    def test_error_shrinks_quadratically(self):
        from treeirl.learner import policy_gradient

        rng = np.random.default_rng(3)
        q = SparseTable(4)
        q.row_ref(0)[:] = rng.normal(0, 2, 4)
        pi = SoftmaxPolicy(4)
        pi.logits.row_ref(0)[:] = rng.normal(0, 1, 4)
        exact = policy_gradient(pi, q, 0, 0.8)
        e1 = np.abs(finite_diff_policy_gradient(pi, q, 0, 0.8, 1e-2) - exact).max()
        e2 = np.abs(finite_diff_policy_gradient(pi, q, 0, 0.8, 5e-3) - exact).max()
        assert 3.0 < e1 / e2 < 5.0

    def test_rejects_bad_epsilon(self):
        with pytest.raises(ValueError):
            finite_diff_policy_gradient(SoftmaxPolicy(2), SparseTable(2), 0, 1.0, 0.0)
