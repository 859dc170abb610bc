"""Closed-form rate, distance and exponent calculators for the bee-identification problem

All logarithms are base 2: rates and exponents are in bits.
"""
import math
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import special, stats
from scipy.optimize import brentq

from app.core.errors import DomainError, RateRangeError
from app.models.schemas import BoundCurve, BoundPoint, BoundProfile, ChannelParam


_LN2 = math.log(2.0)

GV_TOLERANCE = 1e-12
GV_MAX_ITERATIONS = 60


# ==================== Information measures ====================

def binary_entropy(delta):
    """
    Binary entropy H(delta) in bits, with 0*log(0) = 0

    Args:
        delta: Scalar or array of fractions in [0, 1]

    Returns:
        Entropy (float for scalar input, ndarray otherwise)
    """
    x = np.asarray(delta, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)) or np.any(np.isnan(x)):
        raise DomainError(f"binary_entropy requires 0 <= delta <= 1, got {delta!r}")
    h = (special.entr(x) + special.entr(1.0 - x)) / _LN2
    return float(h) if h.ndim == 0 else h


def binary_kl(x: float, y: float) -> float:
    """
    Binary KL divergence D(x || y) in bits

    Args:
        x: Fraction in [0, 1]
        y: Fraction in the open interval (0, 1)

    Returns:
        Divergence in bits
    """
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary_kl requires 0 <= x <= 1, got {x!r}")
    if not 0.0 < y < 1.0:
        raise DomainError(f"binary_kl requires 0 < y < 1, got {y!r}")
    return float((special.rel_entr(x, y) + special.rel_entr(1.0 - x, 1.0 - y)) / _LN2)


@lru_cache(maxsize=65536)
def gv_distance(rate: float) -> float:
    """
    Gilbert-Varshamov relative distance: the delta in [0, 0.5] with H(delta) = 1 - R

    Bisection on the increasing branch of H.

    Args:
        rate: Rate in bits, 0 <= R <= 1

    Returns:
        Relative distance in [0, 0.5]
    """
    if not 0.0 <= rate <= 1.0:
        raise DomainError(f"gv_distance requires 0 <= R <= 1, got {rate!r}")
    target = 1.0 - rate
    if target <= 0.0:
        return 0.0
    if target >= 1.0:
        return 0.5

    lo, hi = 0.0, 0.5
    mid = 0.25
    for _ in range(GV_MAX_ITERATIONS):
        mid = 0.5 * (lo + hi)
        residual = binary_entropy(mid) - target
        if abs(residual) <= GV_TOLERANCE:
            break
        if residual < 0.0:
            lo = mid
        else:
            hi = mid
    return mid


# ==================== Channel constants ====================

def _bhattacharyya(ch: ChannelParam) -> float:
    # sqrt(4p(1-p)), the BSC Bhattacharyya parameter
    return math.sqrt(4.0 * ch.p * (1.0 - ch.p))


def alpha_p(ch: ChannelParam) -> float:
    """Pairwise-error exponent -log2 sqrt(4p(1-p))"""
    return -math.log2(_bhattacharyya(ch))


def r0(ch: ChannelParam) -> float:
    """Cutoff rate R0(p) = 1 - log2(1 + sqrt(4p(1-p)))"""
    return 1.0 - math.log2(1.0 + _bhattacharyya(ch))


def r1(ch: ChannelParam) -> float:
    """R1(p) = 1 - log2(1 + 4p(1-p))"""
    return 1.0 - math.log2(1.0 + 4.0 * ch.p * (1.0 - ch.p))


def lambda_p(ch: ChannelParam) -> float:
    """Rate below which the joint-decoding RCE exponent is positive"""
    return min(2.0 * r0(ch) / 3.0, r1(ch) / 2.0)


def delta_minimizers(ch: ChannelParam) -> Tuple[float, float]:
    """
    Minimizers of E2(delta) = 1 - H(delta) + 2*delta*alpha_p and
    E1(delta) = 1 - H(delta) + delta*alpha_p

    Returns:
        (delta_hat, delta_tilde)
    """
    x = 4.0 * ch.p * (1.0 - ch.p)
    s = math.sqrt(x)
    return x / (1.0 + x), s / (1.0 + s)


def e1(delta: float, ch: ChannelParam) -> float:
    """E1(delta) = 1 - H(delta) + delta*alpha_p"""
    return 1.0 - binary_entropy(delta) + delta * alpha_p(ch)


def e2(delta: float, ch: ChannelParam) -> float:
    """E2(delta) = 1 - H(delta) + 2*delta*alpha_p"""
    return 1.0 - binary_entropy(delta) + 2.0 * delta * alpha_p(ch)


@lru_cache(maxsize=4096)
def critical_rates(ch: ChannelParam) -> Tuple[float, float, float]:
    """
    Threshold rates of the BSC(p) analysis

    Returns:
        (r_cr, r_trc, r_hat): random-coding critical rate, the rate below which
        the typical-random-code exponent applies, and 0.5*(1 - H(delta_hat))
    """
    sp, sq = math.sqrt(ch.p), math.sqrt(1.0 - ch.p)
    delta_hat, delta_tilde = delta_minimizers(ch)
    r_cr = 1.0 - binary_entropy(sp / (sp + sq))
    r_trc = 0.5 * (1.0 - binary_entropy(delta_tilde))
    r_hat = 0.5 * (1.0 - binary_entropy(delta_hat))
    return r_cr, r_trc, r_hat


def r_trc(ch: ChannelParam) -> float:
    return critical_rates(ch)[1]


def bound_profile(ch: ChannelParam) -> BoundProfile:
    """Collect every channel constant into one record"""
    delta_hat, delta_tilde = delta_minimizers(ch)
    r_cr, rate_trc, r_hat = critical_rates(ch)
    return BoundProfile(
        p=ch.p,
        alpha_p=alpha_p(ch),
        r0=r0(ch),
        r1=r1(ch),
        delta_hat=delta_hat,
        delta_tilde=delta_tilde,
        r_cr=r_cr,
        r_trc=rate_trc,
        r_hat=r_hat,
        lambda_p=lambda_p(ch),
    )


# ==================== Channel-coding exponents ====================

def random_coding_exponent(rate: float, ch: ChannelParam) -> float:
    """
    Random-coding exponent Er(R, p) of the BSC

    Piecewise: R0 - R up to the critical rate, the sphere-packing-like
    divergence form up to capacity, and 0 beyond capacity.
    """
    if rate < 0.0:
        raise DomainError(f"rate must be non-negative, got {rate!r}")
    capacity = 1.0 - binary_entropy(ch.p)
    if rate >= capacity:
        return 0.0
    r_cr = critical_rates(ch)[0]
    if rate <= r_cr:
        return r0(ch) - rate
    return binary_kl(gv_distance(rate), ch.p)


def trc_exponent(rate: float, ch: ChannelParam) -> float:
    """
    Typical-random-code exponent alpha_p * delta_GV(2R) + R

    Raises:
        RateRangeError: when R is outside [0, R_TRC(p))
    """
    limit = r_trc(ch)
    if not 0.0 <= rate < limit:
        raise RateRangeError(
            f"trc_exponent is defined for 0 <= R < R_TRC = {limit:.6g}, got {rate!r}"
        )
    return alpha_p(ch) * gv_distance(2.0 * rate) + rate


def delta_lp(rate: float) -> float:
    """Linear-programming upper bound on the achievable relative minimum distance"""
    if not 0.0 <= rate <= 1.0:
        raise DomainError(f"delta_lp requires 0 <= R <= 1, got {rate!r}")
    g = gv_distance(1.0 - rate)
    return 0.5 - math.sqrt(g * (1.0 - g))


def eta(rate: float, ch: ChannelParam) -> float:
    """Unclamped joint-decoding RCE exponent min{R1 - 2R, 2R0 - 3R}"""
    return min(r1(ch) - 2.0 * rate, 2.0 * r0(ch) - 3.0 * rate)


def pairwise_error_probability(d: int, ch: ChannelParam) -> float:
    """
    Exact probability that a codeword at distance d is at least as close to
    the received word as the transmitted one: Pr{Binomial(d, p) >= d/2}
    """
    if d < 0:
        raise DomainError(f"distance must be non-negative, got {d}")
    if d == 0:
        return 1.0
    return float(stats.binom.sf(math.ceil(d / 2) - 1, d, ch.p))


def transposition_error_probability(d: int, ch: ChannelParam) -> float:
    """
    Exact Pr{identity -> (i j)} under joint ML for two rows at distance d

    Swapping the two rows changes the total cost by 2(d - F) where F counts
    flips in the 2d positions where the rows differ.
    """
    if d < 0:
        raise DomainError(f"distance must be non-negative, got {d}")
    if d == 0:
        return 1.0
    return float(stats.binom.sf(d - 1, 2 * d, ch.p))


# ==================== Bee-identification exponent bounds ====================

def _check_rate(rate: float) -> None:
    if rate < 0.0 or math.isnan(rate):
        raise DomainError(f"rate must be non-negative, got {rate!r}")


def bound_rce_id(rate: float, ch: ChannelParam) -> float:
    """Random codes, independent decoding: |R0 - 2R|+"""
    _check_rate(rate)
    return max(0.0, r0(ch) - 2.0 * rate)


def bound_rce_jd(rate: float, ch: ChannelParam) -> float:
    """Random codes, joint decoding: |min{R1 - 2R, 2R0 - 3R}|+"""
    _check_rate(rate)
    return max(0.0, eta(rate, ch))


def bound_trc_id(rate: float, ch: ChannelParam) -> Optional[float]:
    """Typical random codes, independent decoding: alpha_p * delta_GV(2R), for R < R_TRC"""
    _check_rate(rate)
    if rate >= 0.5 or rate >= r_trc(ch):
        return None
    return alpha_p(ch) * gv_distance(2.0 * rate)


def bound_trc_jd(rate: float, ch: ChannelParam) -> Optional[float]:
    """Typical random codes, joint decoding: twice the independent-decoding bound"""
    value = bound_trc_id(rate, ch)
    return None if value is None else 2.0 * value


def trc_jd_finite_epsilon(rate: float, ch: ChannelParam, epsilon: float) -> Optional[float]:
    """
    Joint-decoding TRC exponent at a finite band slack epsilon

    1 - H(d) - 2R + 2*d*alpha_p with d = delta_GV(2R) - epsilon; tends to
    bound_trc_jd as epsilon -> 0.
    """
    _check_rate(rate)
    if epsilon < 0.0:
        raise DomainError(f"epsilon must be non-negative, got {epsilon!r}")
    if rate >= 0.5 or rate >= r_trc(ch):
        return None
    low = gv_distance(2.0 * rate) - epsilon
    if low <= 0.0:
        return None
    return 1.0 - binary_entropy(low) - 2.0 * rate + 2.0 * low * alpha_p(ch)


def bound_upper(rate: float, ch: ChannelParam) -> float:
    """Upper bound valid for every codebook: |2*delta_LP(R)*alpha_p - R|+"""
    _check_rate(rate)
    if rate >= 1.0:
        return 0.0
    return max(0.0, 2.0 * delta_lp(rate) * alpha_p(ch) - rate)


def upper_bound_rate(ch: ChannelParam) -> float:
    """Largest rate at which the upper bound is still positive"""
    a = alpha_p(ch)
    return float(brentq(lambda r: 2.0 * delta_lp(r) * a - r, 0.0, 1.0, xtol=1e-12))


def bound_curve(ch: ChannelParam, r_min: float, r_max: float, steps: int) -> BoundCurve:
    """
    Evaluate all five bounds on a uniform rate grid

    Args:
        ch: Channel parameter
        r_min: First rate of the grid (bits)
        r_max: Last rate of the grid (bits)
        steps: Number of grid points (>= 2)

    Returns:
        BoundCurve with TRC entries absent at and above R_TRC(p)
    """
    if steps < 2:
        raise DomainError(f"steps must be at least 2, got {steps}")
    if not 0.0 <= r_min < r_max:
        raise DomainError(f"need 0 <= r_min < r_max, got r_min={r_min!r}, r_max={r_max!r}")

    points = []
    for rate in np.linspace(r_min, r_max, steps):
        rate = float(rate)
        trc_id = bound_trc_id(rate, ch)
        points.append(
            BoundPoint(
                rate=rate,
                lb_rce_id=bound_rce_id(rate, ch),
                lb_rce_jd=bound_rce_jd(rate, ch),
                lb_trc_id=trc_id,
                lb_trc_jd=None if trc_id is None else 2.0 * trc_id,
                ub=bound_upper(rate, ch),
            )
        )
    return BoundCurve(p=ch.p, points=points)
