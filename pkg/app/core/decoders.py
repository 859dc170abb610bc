"""Permutation decoders: independent, joint ML (assignment and brute force) and two-step GMD"""
import logging
import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Callable, Dict, FrozenSet, Optional, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from app.core.channel import ChannelOutput
from app.core.codebook import Codebook, distance_matrix, popcount
from app.core.config import get_settings
from app.core.errors import ResourceLimitError, ShapeMismatchError
from app.core.exponents import gv_distance
from app.models.schemas import ChannelParam, DecoderName


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DecoderVerdict:
    """
    Decoded map nu with diagnostics

    nu[k] is the source index assigned to received row k; exact recovery
    means nu equals the inverse of the channel permutation.
    """
    nu: np.ndarray
    is_permutation: bool
    exact_recovery: bool
    misidentified: int
    total_cost: Optional[int] = None
    ties_broken: int = 0
    erased: FrozenSet[int] = field(default_factory=frozenset)
    unique_minimum: Optional[bool] = None


def cost_matrix(codebook: Codebook, output: ChannelOutput) -> np.ndarray:
    """entries[j, k] = d_H(received row j, codebook row k)"""
    if output.n != codebook.n or output.m != codebook.m:
        raise ShapeMismatchError(
            f"channel output is {output.m}x{output.n}, codebook is {codebook.m}x{codebook.n}"
        )
    return distance_matrix(output.received, codebook.words).astype(np.int64)


def _verdict(nu: np.ndarray, output: ChannelOutput, **extra) -> DecoderVerdict:
    truth_inverse = output.truth.inverse().forward
    wrong = int(np.count_nonzero(nu != truth_inverse))
    return DecoderVerdict(
        nu=nu,
        is_permutation=bool(np.array_equal(np.sort(nu), np.arange(nu.size))),
        exact_recovery=wrong == 0,
        misidentified=wrong,
        **extra,
    )


def _nearest(costs: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, int]:
    """Row-wise argmin with uniformly random tie-breaking"""
    minima = costs.min(axis=1)
    is_min = costs == minima[:, None]
    nu = np.argmax(is_min, axis=1)
    tied = np.flatnonzero(is_min.sum(axis=1) > 1)
    for row in tied:
        nu[row] = rng.choice(np.flatnonzero(is_min[row]))
    return nu.astype(np.int64), int(tied.size)


def decode_independent(codebook: Codebook, output: ChannelOutput, tie_seed: int = 0) -> DecoderVerdict:
    """
    Decode each received row to its nearest codeword

    The result need not be a permutation.
    """
    costs = cost_matrix(codebook, output)
    nu, ties = _nearest(costs, np.random.default_rng(tie_seed))
    return _verdict(nu, output, ties_broken=ties)


def decode_joint_assignment(codebook: Codebook, output: ChannelOutput) -> DecoderVerdict:
    """
    Joint ML decoding as a minimum-cost perfect matching

    d_H(received, C_sigma) separates over rows, so the ML permutation is the
    assignment minimizing sum_j entries[j, nu(j)].
    """
    costs = cost_matrix(codebook, output)
    rows, cols = linear_sum_assignment(costs)
    nu = np.empty(codebook.m, dtype=np.int64)
    nu[rows] = cols
    return _verdict(nu, output, total_cost=int(costs[rows, cols].sum()))


def decode_joint_bruteforce(codebook: Codebook, output: ChannelOutput) -> DecoderVerdict:
    """
    Joint ML by enumerating all m! maps; lexicographically smallest minimizer wins
    """
    cap = get_settings().bruteforce_max_m
    if codebook.m > cap:
        raise ResourceLimitError(f"brute-force decoding is limited to m <= {cap}, got m={codebook.m}")
    costs = cost_matrix(codebook, output)
    m = codebook.m
    candidates = np.array(list(permutations(range(m))), dtype=np.int64)
    totals = costs[np.arange(m), candidates].sum(axis=1)
    best = int(np.argmin(totals))
    unique = int(np.count_nonzero(totals == totals[best])) == 1
    return _verdict(
        candidates[best].copy(), output,
        total_cost=int(totals[best]), unique_minimum=unique,
    )


def default_gmd_threshold(n: int, p: float, rate: float) -> int:
    """floor(n * (p + delta_GV(2R)/2) / 2)"""
    return int(math.floor(n * (p + gv_distance(min(1.0, 2.0 * rate)) / 2.0) / 2.0))


def decode_gmd(
    codebook: Codebook,
    output: ChannelOutput,
    threshold: int,
    tie_seed: int = 0
) -> DecoderVerdict:
    """
    Two-step decoding: independent decoding with erasures, then a joint
    assignment of the erased rows to the unclaimed codewords

    Step 1 erases rows whose nearest distance exceeds the threshold and
    demotes every row whose codeword is claimed more than once. Step 2
    solves the assignment restricted to erased rows and free codewords.
    """
    if not 0 <= threshold <= codebook.n:
        raise ShapeMismatchError(f"threshold must lie in [0, {codebook.n}], got {threshold}")
    costs = cost_matrix(codebook, output)
    nu, ties = _nearest(costs, np.random.default_rng(tie_seed))
    nearest = costs[np.arange(codebook.m), nu]

    erased = nearest > threshold
    claims = np.bincount(nu[~erased], minlength=codebook.m)
    erased |= claims[nu] > 1

    erased_rows = np.flatnonzero(erased)
    if erased_rows.size:
        claimed = np.zeros(codebook.m, dtype=bool)
        claimed[nu[~erased]] = True
        free = np.flatnonzero(~claimed)
        sub_rows, sub_cols = linear_sum_assignment(costs[np.ix_(erased_rows, free)])
        nu[erased_rows[sub_rows]] = free[sub_cols]
        logger.debug("GMD erased %d of %d rows", erased_rows.size, codebook.m)

    return _verdict(
        nu, output,
        total_cost=int(costs[np.arange(codebook.m), nu].sum()),
        ties_broken=ties,
        erased=frozenset(int(r) for r in erased_rows),
    )


DECODERS: Dict[DecoderName, Callable[..., DecoderVerdict]] = {
    DecoderName.INDEPENDENT: decode_independent,
    DecoderName.JOINT: decode_joint_assignment,
    DecoderName.BRUTEFORCE: decode_joint_bruteforce,
    DecoderName.GMD: decode_gmd,
}


def decode(
    name: DecoderName,
    codebook: Codebook,
    output: ChannelOutput,
    tie_seed: int = 0,
    threshold: Optional[int] = None
) -> DecoderVerdict:
    """Dispatch to a decoder by name with a uniform argument list"""
    name = DecoderName(name)
    if name == DecoderName.INDEPENDENT:
        return decode_independent(codebook, output, tie_seed)
    if name == DecoderName.GMD:
        if threshold is None:
            raise ValueError("GMD decoding needs a threshold")
        return decode_gmd(codebook, output, threshold, tie_seed)
    return DECODERS[name](codebook, output)


# ==================== Exhaustive oracles ====================

def exact_row_error_probabilities(codebook: Codebook, ch: ChannelParam) -> np.ndarray:
    """
    Probability that independent decoding misidentifies each transmitted row

    Sums p^w (1-p)^(n-w) over all 2^n error patterns, crediting ties with the
    uniform tie-break probability of landing on the right row.
    """
    n, m = codebook.n, codebook.m
    cap = get_settings().exhaustive_max_n
    if n > cap:
        raise ResourceLimitError(f"exhaustive enumeration is limited to n <= {cap}, got n={n}")
    codewords = codebook.words[:, 0]
    patterns = np.arange(2 ** n, dtype=np.uint64)
    weights = popcount(patterns[:, None])
    prob = np.power(ch.p, weights) * np.power(1.0 - ch.p, n - weights)

    errors = np.zeros(m)
    for i in range(m):
        received = np.bitwise_xor(patterns, np.uint64(codewords[i]))
        dist = popcount(np.bitwise_xor(received[:, None], codewords[None, :])[..., None])
        minima = dist.min(axis=1)
        is_min = dist == minima[:, None]
        credit = is_min[:, i] / is_min.sum(axis=1)
        errors[i] = float(np.dot(prob, 1.0 - credit))
    return errors


def exact_independent_error_probability(codebook: Codebook, ch: ChannelParam) -> float:
    """D(C, p) for independent decoding: 1 - prod_i (1 - P_i), rows fail independently"""
    per_row = exact_row_error_probabilities(codebook, ch)
    return float(1.0 - np.prod(1.0 - per_row))
