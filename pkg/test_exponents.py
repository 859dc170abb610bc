"""
Tests for the exponent calculators
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st

from app.core import exponents as ex
from app.core.errors import DomainError, RateRangeError
from app.models.schemas import ChannelParam


P01 = ChannelParam(p=0.01)

probabilities = st.floats(min_value=0.001, max_value=0.499)


# ==================== Information measures ====================

def test_binary_entropy_endpoints():
    assert ex.binary_entropy(0.0) == 0.0
    assert ex.binary_entropy(1.0) == 0.0
    assert ex.binary_entropy(0.5) == pytest.approx(1.0)


def test_binary_entropy_vectorized():
    values = ex.binary_entropy(np.array([0.0, 0.11, 0.5]))
    assert values.shape == (3,)
    assert values[1] == pytest.approx(0.4999, abs=1e-3)


def test_binary_entropy_rejects_out_of_range():
    with pytest.raises(DomainError):
        ex.binary_entropy(-0.1)
    with pytest.raises(DomainError):
        ex.binary_entropy(1.5)


def test_binary_kl():
    assert ex.binary_kl(0.3, 0.3) == pytest.approx(0.0, abs=1e-15)
    assert ex.binary_kl(0.0, 0.5) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        ex.binary_kl(0.2, 0.0)


def test_gv_distance_endpoints():
    assert ex.gv_distance(0.0) == 0.5
    assert ex.gv_distance(1.0) == 0.0
    with pytest.raises(DomainError):
        ex.gv_distance(1.2)


@given(st.floats(min_value=0.0, max_value=1.0))
@hyp_settings(max_examples=300, deadline=None)
def test_gv_distance_inverts_entropy(rate):
    delta = ex.gv_distance(rate)
    assert 0.0 <= delta <= 0.5
    assert abs(ex.binary_entropy(delta) - (1.0 - rate)) <= 1e-10


def test_gv_distance_decreasing():
    rates = np.linspace(0.0, 1.0, 41)
    deltas = [ex.gv_distance(float(r)) for r in rates]
    assert all(a > b for a, b in zip(deltas, deltas[1:]))


# ==================== Channel constants ====================

def test_alpha_p_reference_value():
    assert ex.alpha_p(P01) == pytest.approx(2.33, abs=0.005)


def test_constants_closed_forms():
    x = 4 * 0.01 * 0.99
    assert ex.r0(P01) == pytest.approx(1 - math.log2(1 + math.sqrt(x)))
    assert ex.r1(P01) == pytest.approx(1 - math.log2(1 + x))
    assert ex.lambda_p(P01) == pytest.approx(min(2 * ex.r0(P01) / 3, ex.r1(P01) / 2))


def test_profile_matches_individual_calculators():
    profile = ex.bound_profile(P01)
    assert profile.p == 0.01
    assert profile.alpha_p == pytest.approx(ex.alpha_p(P01))
    assert profile.r_trc == pytest.approx(ex.r_trc(P01))
    assert profile.r_trc < profile.r_hat


@given(probabilities)
@hyp_settings(max_examples=200, deadline=None)
def test_channel_inequalities(p):
    ch = ChannelParam(p=p)
    r_cr, r_trc, r_hat = ex.critical_rates(ch)
    delta_hat, delta_tilde = ex.delta_minimizers(ch)
    assert ex.r0(ch) <= 2 * r_cr + 1e-9
    assert 2 * ex.r0(ch) >= ex.r1(ch) + 2 * r_trc - 1e-9
    assert ex.r1(ch) > ex.r0(ch)
    assert delta_hat < delta_tilde < 0.5
    assert r_trc < r_hat


@given(probabilities)
@hyp_settings(max_examples=100, deadline=None)
def test_minimizers_attain_cutoff_rate(p):
    ch = ChannelParam(p=p)
    delta_hat, delta_tilde = ex.delta_minimizers(ch)
    assert ex.e1(delta_tilde, ch) == pytest.approx(ex.r0(ch), abs=1e-9)
    for offset in (-1e-3, 1e-3):
        assert ex.e1(delta_tilde + offset, ch) > ex.e1(delta_tilde, ch)
        assert ex.e2(delta_hat + offset, ch) > ex.e2(delta_hat, ch)


def test_channel_param_rejects_boundaries():
    with pytest.raises(ValueError):
        ChannelParam(p=0.0)
    with pytest.raises(ValueError):
        ChannelParam(p=0.5)


# ==================== Channel-coding exponents ====================

def test_random_coding_exponent_shape():
    assert ex.random_coding_exponent(0.0, P01) == pytest.approx(ex.r0(P01))
    capacity = 1 - ex.binary_entropy(0.01)
    assert ex.random_coding_exponent(capacity, P01) == 0.0
    r_cr = ex.critical_rates(P01)[0]
    # both branches meet at the critical rate
    assert ex.random_coding_exponent(r_cr + 1e-9, P01) == pytest.approx(ex.r0(P01) - r_cr, abs=1e-6)


def test_trc_exponent_range():
    assert ex.trc_exponent(0.0, P01) == pytest.approx(ex.alpha_p(P01) / 2)
    with pytest.raises(RateRangeError):
        ex.trc_exponent(ex.r_trc(P01), P01)


def test_eta_is_unclamped():
    assert ex.eta(0.6, P01) < 0
    assert ex.eta(0.0, P01) == pytest.approx(min(ex.r1(P01), 2 * ex.r0(P01)))


@pytest.mark.parametrize("d", [1, 2, 5, 8, 13])
@pytest.mark.parametrize("p", [0.01, 0.1, 0.3])
def test_pairwise_probabilities_below_bhattacharyya(d, p):
    ch = ChannelParam(p=p)
    alpha = ex.alpha_p(ch)
    assert ex.pairwise_error_probability(d, ch) <= 2 ** (-d * alpha) + 1e-15
    assert ex.transposition_error_probability(d, ch) <= 2 ** (-2 * d * alpha) + 1e-15


def test_pairwise_probability_small_case():
    # d = 2: one flip in either differing position already ties
    ch = ChannelParam(p=0.1)
    assert ex.pairwise_error_probability(2, ch) == pytest.approx(1 - 0.9 ** 2)


# ==================== Bee-identification bounds ====================

def test_zero_rate_limits():
    alpha = ex.alpha_p(P01)
    assert ex.bound_upper(1e-6, P01) == pytest.approx(alpha, abs=1e-3)
    assert ex.bound_trc_jd(1e-6, P01) == pytest.approx(alpha, abs=5e-3)
    assert ex.bound_trc_jd(1e-8, P01) == pytest.approx(alpha, abs=1e-3)
    assert ex.bound_upper(1e-8, P01) == pytest.approx(alpha, abs=1e-3)


def test_trc_bounds_absent_above_threshold():
    limit = ex.r_trc(P01)
    assert ex.bound_trc_id(limit, P01) is None
    assert ex.bound_trc_jd(limit + 0.01, P01) is None
    assert ex.bound_trc_id(0.6, P01) is None


@given(probabilities, st.floats(min_value=0.0, max_value=0.5, exclude_max=True))
@hyp_settings(max_examples=300, deadline=None)
def test_joint_trc_bound_doubles_independent(p, rate):
    ch = ChannelParam(p=p)
    independent = ex.bound_trc_id(rate, ch)
    if independent is None:
        assert rate >= ex.r_trc(ch)
    else:
        assert ex.bound_trc_jd(rate, ch) == pytest.approx(2 * independent)


@given(probabilities, st.floats(min_value=0.0, max_value=0.499))
@hyp_settings(max_examples=300, deadline=None)
def test_joint_rce_beats_independent_where_positive(p, rate):
    ch = ChannelParam(p=p)
    if ex.r0(ch) > 2 * rate:
        assert ex.bound_rce_jd(rate, ch) > ex.bound_rce_id(rate, ch)


def test_rce_joint_vanishes_beyond_half_rate():
    for rate in (0.5, 0.55, 0.9):
        assert ex.bound_rce_jd(rate, P01) == 0.0


def test_upper_bound_rate_separates_sign():
    r_ub = ex.upper_bound_rate(P01)
    assert 0 < r_ub < 1
    assert ex.bound_upper(r_ub - 1e-3, P01) > 0
    assert ex.bound_upper(min(1.0, r_ub + 1e-3), P01) == 0.0
    assert ex.bound_upper(1.0, P01) == 0.0


def test_finite_epsilon_converges():
    rate = 0.05
    exact = ex.bound_trc_jd(rate, P01)
    assert ex.trc_jd_finite_epsilon(rate, P01, 0.0) == pytest.approx(exact)
    assert ex.trc_jd_finite_epsilon(rate, P01, 0.02) < exact
    assert ex.trc_jd_finite_epsilon(0.3, P01, 0.02) is None


def test_negative_rate_rejected():
    with pytest.raises(DomainError):
        ex.bound_rce_id(-0.1, P01)


# ==================== Curves ====================

def test_bound_curve_reference_grid():
    curve = ex.bound_curve(P01, 0.0, 0.6, 200)
    assert len(curve.points) == 200
    first = curve.points[0]
    assert first.rate == 0.0
    assert first.ub == pytest.approx(2.33, abs=0.005)
    limit = ex.r_trc(P01)
    for point in curve.points:
        assert (point.lb_trc_id is None) == (point.rate >= limit)
        if point.lb_trc_id is not None:
            assert point.lb_trc_jd == pytest.approx(2 * point.lb_trc_id)
        for lower in (point.lb_rce_id, point.lb_rce_jd, point.lb_trc_id, point.lb_trc_jd):
            assert lower is None or lower <= point.ub + 1e-9


def test_bound_curve_rejects_bad_grid():
    with pytest.raises(DomainError):
        ex.bound_curve(P01, 0.0, 0.6, 1)
    with pytest.raises(DomainError):
        ex.bound_curve(P01, 0.4, 0.2, 10)
