from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from faircmab.exceptions import MeritAssumptionError, ValidationError
from faircmab.merit import (
    Custom, Identity, PowerPlus, check_ratio_assumption, merit, merit_from_spec,
    optimal_policy, validate_assumptions,
)
from oracles import fair_policy_exact, fair_policy_linear_system

SYNTH_MU = [0.3, 0.5, 0.7, 0.9, 0.8, 0.6, 0.4]
# exact rational p* for f = 1 + 2 mu^4, L = 3 (computed with Fractions)
SYNTH_P_STAR = [
    Fraction(5081, 16772), Fraction(5625, 16772), Fraction(7401, 16772), Fraction(11561, 16772),
    Fraction(2274, 4193), Fraction(1574, 4193), Fraction(1314, 4193),
]


def test_power_plus_values():
    f = PowerPlus(1, 2, 4)
    assert merit(f, 0.9) == pytest.approx(2.3122, abs=1e-12)
    assert merit(f, 0.0) == 1.0
    assert merit(Identity(), 0.3) == 0.3


@pytest.mark.parametrize("mu", [-0.01, 1.01])
def test_merit_domain(mu):
    with pytest.raises(ValidationError):
        merit(PowerPlus(), mu)


def test_declared_constants():
    f = PowerPlus(1, 2, 4)
    assert f.lam == 1.0 and f.lipschitz == 8.0
    with pytest.raises(ValidationError):
        PowerPlus(1, 2, 4, lipschitz=7.0)
    with pytest.raises(ValidationError):
        PowerPlus(1, 2, 4, lam=1.5)


@pytest.mark.parametrize("kw", [dict(beta=0.0), dict(w=-1.0), dict(c=0.5)])
def test_power_plus_parameter_domain(kw):
    with pytest.raises(ValidationError):
        PowerPlus(**kw)


def test_ratio_assumption_holds_at_the_boundary():
    # max/min = 3 = (K-1)/(L-1)
    assert check_ratio_assumption(PowerPlus(1, 2, 4), 7, 3)
    assert not check_ratio_assumption(PowerPlus(1, 2.5, 4), 7, 3)


def test_identity_fails_positivity():
    with pytest.raises(MeritAssumptionError):
        check_ratio_assumption(Identity(), 3, 2)
    with pytest.raises(MeritAssumptionError):
        validate_assumptions(Identity(), 3, 2)


def test_single_play_is_vacuous():
    assert check_ratio_assumption(Identity(), 3, 1)
    assert check_ratio_assumption(PowerPlus(1, 100, 1), 5, 1)


def test_identity_three_arm_instance():
    p = optimal_policy(Identity(), [0.3, 0.2, 0.2], 2)
    assert np.max(np.abs(p - [6 / 7, 4 / 7, 4 / 7])) <= 1e-12


def test_equal_means_give_uniform_policy():
    for f in (Identity(), PowerPlus()):
        p = optimal_policy(f, [0.4, 0.4, 0.4], 2)
        assert np.max(np.abs(p - 2 / 3)) <= 1e-12


def test_synthetic_instance_against_linear_system_and_exact_value():
    f = PowerPlus(1, 2, 4)
    p = optimal_policy(f, SYNTH_MU, 3)
    assert np.max(np.abs(p - fair_policy_linear_system(f(np.array(SYNTH_MU)), 3))) <= 1e-10
    assert np.max(np.abs(p - np.array([float(x) for x in SYNTH_P_STAR]))) <= 1e-14
    exact = fair_policy_exact([1 + 2 * Fraction(m).limit_denominator(10) ** 4 for m in SYNTH_MU], 3)
    assert exact == SYNTH_P_STAR


def test_optimal_policy_guards():
    with pytest.raises(ValidationError):
        optimal_policy(PowerPlus(), [0.2, 1.2], 1)
    with pytest.raises(ValidationError):
        optimal_policy(PowerPlus(), [0.2, 0.3], 3)
    with pytest.raises(MeritAssumptionError):
        optimal_policy(Identity(), [0.0, 0.5, 0.5], 2)
    with pytest.raises(MeritAssumptionError):
        # one arm would need probability above one
        optimal_policy(PowerPlus(1, 20, 1), [1.0, 0.0, 0.0], 2)


def test_custom_merit():
    f = Custom([0.0, 0.5, 1.0], [1.0, 2.0, 2.5])
    assert f.merit(0.25) == pytest.approx(1.5)
    assert f.lam == 1.0 and f.lipschitz == pytest.approx(2.0)
    assert merit_from_spec(f.to_spec()).merit(0.75) == pytest.approx(2.25)


def test_merit_specs():
    assert isinstance(merit_from_spec({"type": "power_plus", "beta": 1.0, "w": 2.0, "c": 4}), PowerPlus)
    assert isinstance(merit_from_spec({"type": "identity"}), Identity)
    for bad in ({"type": "linear"}, {"beta": 1}, {"type": "custom", "mu": [0, 1]}):
        with pytest.raises(ValidationError):
            merit_from_spec(bad)


@st.composite
def instances(draw):
    k = draw(st.integers(2, 8))
    l = draw(st.integers(1, k))
    mu = np.array(draw(st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k)))
    return k, l, mu


def _admissible(k, l):
    # choose w so that (1 + w) / 1 <= (K-1)/(L-1)
    bound = (k - 1) / (l - 1) if l > 1 else 10.0
    return PowerPlus(1.0, min(2.0, bound - 1.0), 4)


@given(instances())
def test_closed_form_matches_linear_system(inst):
    k, l, mu = inst
    f = _admissible(k, l)
    p = optimal_policy(f, mu, l)
    assert np.max(np.abs(p - fair_policy_linear_system(f(mu), l))) <= 1e-10


@given(instances(), st.floats(0.01, 100.0))
def test_fair_policy_invariants_and_scale_invariance(inst, gamma):
    k, l, mu = inst
    f = _admissible(k, l)
    p = optimal_policy(f, mu, l)
    assert abs(p.sum() - l) <= 1e-12
    assert np.all((p >= 0) & (p <= 1 + 1e-12))
    ratio = p / f(mu)
    assert np.max(np.abs(ratio / ratio[0] - 1)) <= 1e-12
    scaled = PowerPlus(gamma * f.beta, gamma * f.w, f.c)
    assert np.max(np.abs(optimal_policy(scaled, mu, l) - p)) <= 1e-12
