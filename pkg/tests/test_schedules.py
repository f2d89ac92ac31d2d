import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsvrg.errors import ParameterError, StepSizeTooLargeError, WrongCaseError
from fsvrg.schedules import (
    ThetaSchedule,
    epoch_sizes,
    minibatch_variance_factor,
    theta_nsc_init,
    theta_nsc_next,
    theta_sc_optimal,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def test_sc_optimal_direct_substitution():
    assert theta_sc_optimal(0.01, 0.1, 1000) == pytest.approx(0.5, abs=1e-15)


def test_sc_optimal_clamps_to_one():
    assert theta_sc_optimal(1.0, 1.0, 10) == 1.0


def test_sc_optimal_needs_strong_convexity():
    with pytest.raises(WrongCaseError):
        theta_sc_optimal(0.0, 0.1, 100)
    with pytest.raises(ParameterError):
        theta_sc_optimal(0.1, -1.0, 100)


def test_nsc_init_values():
    assert theta_nsc_init(1.0, 1.0 / 3.0) == pytest.approx(0.5, abs=1e-12)
    assert theta_nsc_init(1.0, 0.4, rho_b=0.0) == 1.0
    # rho_b = 1 recovers the single-sample formula
    assert theta_nsc_init(2.0, 0.1, rho_b=1.0) == pytest.approx(1.0 - 0.2 / 0.8)


def test_nsc_init_step_size_bound():
    with pytest.raises(StepSizeTooLargeError, match="0.5"):
        theta_nsc_init(1.0, 0.6)
    with pytest.raises(StepSizeTooLargeError):
        theta_nsc_init(1.0, 1.5)
    with pytest.raises(ParameterError):
        theta_nsc_init(1.0, 0.1, rho_b=1.5)


def test_nsc_next_golden_ratio():
    assert theta_nsc_next(1.0) == pytest.approx(GOLDEN, abs=1e-12)


def test_nsc_next_range_check():
    with pytest.raises(ParameterError):
        theta_nsc_next(0.0)
    with pytest.raises(ParameterError):
        theta_nsc_next(1.2)


@pytest.mark.parametrize("theta1,offset", [(1.0, 1), (0.5, 2)])
def test_nsc_sequence_properties(theta1, offset):
    # Decreasing, positive, ratio inequality (an equality by construction,
    # checked to 1e-12 relative since both sides grow like s^2), and the
    # 2/(s+offset) envelope: offset 2 requires theta1 <= 2/3, while the
    # sequence from theta1 = 1 obeys the shifted bound 2/(s+1) with equality
    # at s = 1.
    th = theta1
    assert th <= 2.0 / (1 + offset) + 1e-12
    for s in range(1, 10_000):
        nxt = theta_nsc_next(th)
        assert 0.0 < nxt < th
        assert (1.0 - nxt) / nxt**2 <= (1.0 / th**2) * (1.0 + 1e-12)
        th = nxt
        assert th <= 2.0 / (s + 1 + offset) + 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1.0), st.floats(1e-6, 1.0))
def test_nsc_next_monotone(a, b):
    if a == b:
        return
    lo, hi = min(a, b), max(a, b)
    assert theta_nsc_next(lo) < theta_nsc_next(hi)


def test_variance_factor_endpoints():
    assert minibatch_variance_factor(50, 1) == 1.0
    assert minibatch_variance_factor(50, 50) == 0.0
    assert minibatch_variance_factor(10, 2) == pytest.approx(8.0 / 18.0)
    assert minibatch_variance_factor(1, 1) == 0.0


def test_variance_factor_bounds():
    with pytest.raises(ParameterError):
        minibatch_variance_factor(10, 0)
    with pytest.raises(ParameterError):
        minibatch_variance_factor(10, 11)
    for b in range(1, 21):
        assert 0.0 <= minibatch_variance_factor(20, b) <= 1.0


def test_epoch_sizes_powers_of_two():
    assert epoch_sizes(10, 2.0, 4) == [10, 20, 40, 80]


def test_epoch_sizes_fractional_growth():
    # ceil(1.6 * 10) = 16 and ceil(25.6) = 26 in exact arithmetic
    assert epoch_sizes(10, 1.6, 3) == [10, 16, 26]


def test_epoch_sizes_flat():
    assert epoch_sizes(7, 1.0, 5) == [7, 7, 7, 7, 7]


def test_epoch_sizes_validation():
    with pytest.raises(ParameterError):
        epoch_sizes(0, 2.0, 3)
    with pytest.raises(ParameterError):
        epoch_sizes(5, 0.9, 3)
    with pytest.raises(ParameterError):
        epoch_sizes(5, 2.0, 0)


@pytest.mark.parametrize("growth", [2.0, 1.5, 1.25, 1.0625])
def test_epoch_sizes_match_exact_arithmetic(growth):
    # growth values with exact binary representations: compare to Fraction math
    m1, S = 13, 25
    frac = Fraction(growth)
    expected = [math.ceil(frac ** (s - 1) * m1) for s in range(1, S + 1)]
    assert epoch_sizes(m1, growth, S) == expected


def test_epoch_sizes_strictly_increasing_when_growing():
    sizes = epoch_sizes(3, 1.3, 20)
    assert all(b > a for a, b in zip(sizes, sizes[1:]))


def test_schedule_constant():
    sched = ThetaSchedule.constant(0.9)
    assert sched.value(1, 10) == 0.9
    assert sched.value(7, 10_000) == 0.9
    with pytest.raises(ParameterError):
        ThetaSchedule.constant(0.0)


def test_schedule_sc_optimal_recomputes_per_epoch():
    sched = ThetaSchedule.sc_optimal(mu=0.01, eta=0.1)
    assert sched.value(1, 1000) == pytest.approx(0.5)
    assert sched.value(2, 2000) == pytest.approx(1.0)  # clamped


def test_schedule_nsc_matches_manual_recursion():
    sched = ThetaSchedule.nsc(1.0)
    th = 1.0
    for s in range(1, 30):
        assert sched.value(s, 100) == pytest.approx(th, abs=1e-15)
        th = theta_nsc_next(th)


def test_schedule_nsc_from_constants():
    sched = ThetaSchedule.nsc_from(L=1.0, eta=1.0 / 3.0)
    assert sched.value(1, 10) == pytest.approx(0.5)


def test_schedule_cap():
    sched = ThetaSchedule.constant(0.9, cap=0.4)
    assert sched.value(3, 10) == 0.4


def test_schedule_epoch_is_one_based():
    with pytest.raises(ParameterError):
        ThetaSchedule.constant(0.5).value(0, 10)
