import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from faircmab.exceptions import ValidationError
from faircmab.merit import Custom, Identity, PowerPlus, fair_vector, optimal_policy
from faircmab.optimize import (
    ConfidenceRegion, SolverOptions, _coordinate_ascent, fair_reward_objective, grid_oracle,
    maximize_over_region,
)
from oracles import brute_force_region_max, fair_reward_by_definition

F4 = PowerPlus(1, 2, 4)


def _random_region(rng, k):
    a, b = rng.random(k), rng.random(k)
    return ConfidenceRegion(np.minimum(a, b), np.maximum(a, b))


def test_objective_of_constant_vector():
    for m in (0.0, 0.3, 1.0):
        assert fair_reward_objective(F4, np.full(5, m), 3) == pytest.approx(3 * m, abs=1e-15)


def test_objective_identity_fixture():
    value = fair_reward_objective(Identity(), [0.3, 0.2, 0.2], 2)
    assert value == pytest.approx(2 * (0.09 + 0.04 + 0.04) / 0.7, abs=1e-15)
    p = optimal_policy(Identity(), [0.3, 0.2, 0.2], 2)
    assert value == pytest.approx(float(p @ [0.3, 0.2, 0.2]), abs=1e-15)


@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=8), st.integers(1, 3))
def test_objective_equals_fair_policy_reward(mu, l):
    l = min(l, len(mu))
    mu = np.array(mu)
    # the identity is algebraic, so the (possibly infeasible) unvalidated vector is used
    p = fair_vector(F4, mu, l)
    f = F4
    assert fair_reward_objective(f, mu, l) == pytest.approx(float(p @ mu), abs=1e-12)
    assert fair_reward_objective(f, mu, l) == pytest.approx(fair_reward_by_definition(f(mu), mu, l), abs=1e-12)


def test_degenerate_region_returns_the_point():
    x = np.array([0.2, 0.7, 0.4])
    region = ConfidenceRegion(x, x.copy())
    assert np.array_equal(maximize_over_region(F4, region, 2), x)
    assert np.array_equal(grid_oracle(F4, region, 2, 0.01), x)


def test_flat_merit_pushes_to_upper_corner():
    flat = Custom([0.0, 1.0], [2.0, 2.0])
    region = ConfidenceRegion(np.array([0.1, 0.3, 0.0, 0.5]), np.array([0.6, 0.9, 0.2, 0.5]))
    assert np.allclose(maximize_over_region(flat, region, 2), region.upper, atol=1e-7)


def test_grid_oracle_two_arm_identity():
    region = ConfidenceRegion(np.zeros(2), np.ones(2))
    assert grid_oracle(Identity(), region, 1, 0.5).tolist() == [1.0, 1.0]


def test_grid_oracle_limits():
    with pytest.raises(ValidationError):
        grid_oracle(F4, ConfidenceRegion(np.zeros(5), np.ones(5)), 2, 0.1)
    with pytest.raises(ValidationError):
        grid_oracle(F4, ConfidenceRegion(np.zeros(2), np.ones(2)), 1, 1e-4)


def test_grid_oracle_matches_pure_python_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(10):
        region = _random_region(rng, 3)
        g = grid_oracle(F4, region, 2, 0.05)
        assert region.contains(g)
        best = brute_force_region_max(F4, region.lower, region.upper, 2, 0.05)
        assert fair_reward_objective(F4, g, 2) == pytest.approx(best, abs=1e-12)


def test_solver_beats_grid_on_random_small_regions():
    rng = np.random.default_rng(1)
    for _ in range(50):
        region = _random_region(rng, 3)
        x = maximize_over_region(F4, region, 2)
        g = grid_oracle(F4, region, 2, 0.01)
        assert fair_reward_objective(F4, x, 2) >= fair_reward_objective(F4, g, 2) - 1e-4


def test_solver_on_steep_merit_and_four_arms():
    f = PowerPlus(1, 8, 2)
    rng = np.random.default_rng(2)
    for _ in range(10):
        region = _random_region(rng, 4)
        x = maximize_over_region(f, region, 1)
        g = grid_oracle(f, region, 1, 0.02)
        assert fair_reward_objective(f, x, 1) >= fair_reward_objective(f, g, 1) - 1e-4


@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_solution_inside_region_and_deterministic(seed, k):
    region = _random_region(np.random.default_rng(seed), k)
    x = maximize_over_region(F4, region, 1)
    assert np.all(x >= region.lower) and np.all(x <= region.upper)
    assert np.array_equal(x, maximize_over_region(F4, region, 1))


@given(st.integers(0, 2**32 - 1))
def test_sweeps_are_monotone(seed):
    rng = np.random.default_rng(seed)
    region = _random_region(rng, 4)
    x = region.lower + rng.random(4) * (region.upper - region.lower)
    values = [fair_reward_objective(F4, x, 2)]
    kind, beta, w, c, xs, ys = F4.solver_params()
    for _ in range(5):
        _coordinate_ascent(x, region.lower, region.upper, 2.0, 1e-8, -1.0, 1, kind, beta, w, c, xs, ys)
        values.append(fair_reward_objective(F4, x, 2))
    assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))


def test_seed_changes_only_random_starts():
    region = ConfidenceRegion(np.array([0.1, 0.2, 0.0]), np.array([0.8, 0.9, 0.6]))
    a = maximize_over_region(F4, region, 2, SolverOptions(seed=0))
    b = maximize_over_region(F4, region, 2, SolverOptions(seed=7))
    assert fair_reward_objective(F4, a, 2) == pytest.approx(fair_reward_objective(F4, b, 2), abs=1e-7)


def test_identity_region_with_zero_merit_corner():
    region = ConfidenceRegion(np.zeros(3), np.ones(3))
    x = maximize_over_region(Identity(), region, 2)
    g = grid_oracle(Identity(), region, 2, 0.05)
    assert fair_reward_objective(Identity(), x, 2) == pytest.approx(fair_reward_objective(Identity(), g, 2), abs=1e-6)


def test_region_validation():
    with pytest.raises(ValidationError):
        ConfidenceRegion(np.array([0.5]), np.array([0.4]))
    with pytest.raises(ValidationError):
        ConfidenceRegion(np.array([-0.1]), np.array([0.4]))
    with pytest.raises(ValidationError):
        ConfidenceRegion(np.zeros(2), np.ones(3))
