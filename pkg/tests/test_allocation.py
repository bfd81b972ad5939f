import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from support import grid_optimum, grid_resolution
from lightcone_shading.allocation import (allocate, cost_for_bias_target, gamma_full_mitigation, priorities,
                                          priority_order, probability_from_rate, residual_bias, tradeoff_curve)


def inst(rng, k):
    ids = [f"L{i}:X{i}" for i in range(k)]
    c = dict(zip(ids, rng.uniform(0, 2, k)))
    lam = dict(zip(ids, rng.uniform(0.001, 0.05, k)))
    return c, lam


def test_probability_examples():
    assert probability_from_rate(0.0) == 0.0
    assert probability_from_rate(0.01) == pytest.approx((1 - math.exp(-0.02)) / 2, rel=1e-15)
    assert probability_from_rate(1e-12) == pytest.approx(1e-12, rel=1e-9)
    with pytest.raises(ValueError):
        probability_from_rate(-0.1)


def test_priority_examples():
    c = {"a": 2.0, "b": 1.0, "z": 0.0}
    lam = {"a": 0.01, "b": 0.01, "z": 0.05}
    assert priorities(c, lam)["a"] == pytest.approx(2 * math.exp(-0.02))
    assert priority_order(c, lam) == ["a", "b", "z"]
    tie = priority_order({"L3:X0": 1.0, "L1:X0": 1.0}, {"L3:X0": 0.01, "L1:X0": 0.01})
    assert tie == ["L1:X0", "L3:X0"]


def test_zero_budget_and_full_budget():
    c = {"a": 1.0, "b": 0.5}
    lam = {"a": 0.02, "b": 0.03}
    none = allocate(c, lam, 0.0)
    assert none.budget_used == 0.0 and none.sampling_cost_gamma_sq == 1.0
    full = allocate(c, lam, 1.0)
    assert full.residual_bias_bound == 0.0 and full.lambda_star == lam
    assert full.sampling_cost_gamma_sq == pytest.approx(math.exp(4 * 0.05))
    assert full.gamma == pytest.approx(gamma_full_mitigation(lam))


def test_zero_priority_channels_are_skipped():
    res = allocate({"a": 0.0, "b": 1.0}, {"a": 0.02, "b": 0.02}, 1.0)
    assert res.lambda_star["a"] == 0.0 and res.lambda_star["b"] == 0.02


def test_negative_inputs_rejected():
    with pytest.raises(ValueError):
        allocate({"a": 1.0}, {"a": 0.1}, -1.0)
    with pytest.raises(ValueError):
        cost_for_bias_target({"a": 1.0}, {"a": 0.1}, -1.0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 12), frac=st.floats(0, 1.2))
def test_vertex_invariant_and_budget(seed, k, frac):
    rng = np.random.default_rng(seed)
    c, lam = inst(rng, k)
    budget = frac * sum(lam.values())
    res = allocate(c, lam, budget)
    assert len(res.partial_channels) <= 1
    assert res.budget_used <= budget + 1e-15
    assert all(0.0 <= res.lambda_star[k] <= lam[k] for k in lam)
    assert res.residual_bias_bound == pytest.approx(residual_bias(c, lam, res.lambda_star))


def test_matches_grid_search(rng):
    for _ in range(12):
        k = int(rng.integers(1, 7))
        c, lam = inst(rng, k)
        budget = float(rng.uniform(0, sum(lam.values())))
        res = allocate(c, lam, budget)
        cv, lv = list(c.values()), list(lam.values())
        assert abs(res.residual_bias_bound - grid_optimum(cv, lv, budget)) <= grid_resolution(cv, lv)


def test_exchange_never_helps(rng):
    # swapping a fully cancelled channel for an untouched one of lower priority never helps
    for _ in range(50):
        c, lam = inst(rng, 8)
        res = allocate(c, lam, float(rng.uniform(0, sum(lam.values()))))
        alpha = priorities(c, lam)
        full = [k for k, v in res.lambda_star.items() if v == lam[k]]
        idle = [k for k, v in res.lambda_star.items() if v == 0.0]
        for i in full:
            for j in idle:
                if alpha[j] > alpha[i]:
                    continue
                d = min(lam[i], lam[j])
                moved = dict(res.lambda_star)
                moved[i] -= d
                moved[j] += d
                assert residual_bias(c, lam, moved) >= res.residual_bias_bound - 1e-15


def test_cost_for_target_hits_epsilon(rng):
    for _ in range(40):
        c, lam = inst(rng, 8)
        total = residual_bias(c, lam, {})
        eps = float(rng.uniform(0, total))
        res = cost_for_bias_target(c, lam, eps)
        assert res.residual_bias_bound <= eps * (1 + 1e-9) + 1e-15
        assert res.residual_bias_bound == pytest.approx(eps, rel=1e-9, abs=1e-15)
        assert len(res.partial_channels) <= 1
        # same budget through allocate gives the same point
        again = allocate(c, lam, res.budget_used)
        assert again.residual_bias_bound == pytest.approx(res.residual_bias_bound, rel=1e-9, abs=1e-15)


def test_cost_for_target_above_unmitigated_is_free():
    c, lam = {"a": 1.0}, {"a": 0.01}
    res = cost_for_bias_target(c, lam, 1.0)
    assert res.budget_used == 0.0 and res.sampling_cost_gamma_sq == 1.0


def test_tradeoff_curve_is_monotone(rng):
    c, lam = inst(rng, 5)
    curve = tradeoff_curve(c, lam, points_per_segment=3)
    budgets = [r.budget for r in curve]
    resid = [r.residual_bias_bound for r in curve]
    assert budgets == sorted(budgets) and len(curve) == 1 + 5 * 3
    assert all(a >= b - 1e-15 for a, b in zip(resid, resid[1:]))
    assert resid[-1] == pytest.approx(0.0, abs=1e-15)


def test_json_is_sorted():
    res = allocate({"b": 1.0, "a": 2.0}, {"b": 0.01, "a": 0.01}, 0.015)
    assert list(res.to_json()["lambda_star"]) == ["a", "b"]


def test_probability_matches_monte_carlo():
    from lightcone_shading.oracle import sample_lindblad_flip_frequency
    draws = 10 ** 6
    p = probability_from_rate(0.25)
    f = sample_lindblad_flip_frequency(0.25, draws, seed=11)
    assert abs(f - p) < 3 * math.sqrt(p * (1 - p) / draws)
    assert probability_from_rate(50.0) == pytest.approx(0.5)


def test_priority_order_follows_marginal_gain(rng):
    # d/dx of -c p(lam - x) at x = 0 is alpha; check with finite differences
    for _ in range(20):
        c, lam = inst(rng, 6)
        h = 1e-7
        fd = {k: c[k] * (probability_from_rate(lam[k]) - probability_from_rate(lam[k] - h)) / h for k in c}
        alpha = priorities(c, lam)
        for k in c:
            assert fd[k] == pytest.approx(alpha[k], rel=1e-5)
        assert sorted(c, key=lambda k: -fd[k]) == priority_order(c, lam)


def test_larger_rate_lowers_priority():
    a = priorities({"a": 1.0, "b": 1.0}, {"a": 0.01, "b": 0.2})
    assert a["a"] > a["b"]


def test_zero_epsilon_mitigates_every_relevant_channel():
    c = {"a": 1.0, "b": 0.0, "c": 0.3}
    lam = {"a": 0.01, "b": 0.02, "c": 0.03}
    res = cost_for_bias_target(c, lam, 0.0)
    assert res.lambda_star == {"a": 0.01, "b": 0.0, "c": 0.03}
    assert res.residual_bias_bound == 0.0


def test_target_budget_beats_grid(rng):
    from support import grid_min_budget
    for _ in range(10):
        k = int(rng.integers(1, 7))
        c, lam = inst(rng, k)
        cv, lv = list(c.values()), list(lam.values())
        eps = float(rng.uniform(0.05, 0.95)) * residual_bias(c, lam, {})
        res = cost_for_bias_target(c, lam, eps)
        assert res.budget_used <= grid_min_budget(cv, lv, eps) + 1e-12


def test_monotone_in_budget(rng):
    c, lam = inst(rng, 7)
    prev = None
    for b in np.linspace(0, sum(lam.values()) * 1.1, 40):
        r = allocate(c, lam, float(b))
        if prev is not None:
            assert r.residual_bias_bound <= prev.residual_bias_bound + 1e-15
            assert r.sampling_cost_gamma_sq >= prev.sampling_cost_gamma_sq
        prev = r
