"""Verification suite: bound inequalities on a channel grid plus decoder oracle checks"""
import logging
import math
from typing import Callable, List, Optional, Sequence

import numpy as np

from app.core import exponents as ex
from app.core.channel import sample_permutation, transmit
from app.core.codebook import generate_rce, pack_bits, popcount
from app.core.config import get_settings
from app.core.decoders import decode_joint_assignment, decode_joint_bruteforce
from app.models.schemas import ChannelParam, VerificationCheck, VerificationReport


logger = logging.getLogger(__name__)

SLACK = 1e-9
# (rate, tolerance on the TRC joint bound, tolerance on the upper bound)
ZERO_RATE_PROBES = ((1e-6, 5e-3, 1e-3), (1e-8, 1e-3, 1e-3))


def default_p_grid(points: int) -> np.ndarray:
    return np.linspace(0.001, 0.499, points)


class VerificationService:
    """
    Runs every analytical and oracle check and collects a pass/fail report

    r1_offset perturbs R1(p) everywhere the suite uses it; a nonzero offset
    exists only to confirm that the suite notices a wrong constant.
    """

    def __init__(self, r1_offset: float = 0.0, seed: int = 2024):
        """Initialize the verification service"""
        self.settings = get_settings()
        self.r1_offset = r1_offset
        self.seed = seed

    def _r1(self, ch: ChannelParam) -> float:
        return ex.r1(ch) + self.r1_offset

    def _eta(self, rate: float, ch: ChannelParam) -> float:
        return min(self._r1(ch) - 2.0 * rate, 2.0 * ex.r0(ch) - 3.0 * rate)

    # ==================== Channel constants ====================

    def check_constants(self) -> List[VerificationCheck]:
        ch = ChannelParam(p=0.01)
        alpha = ex.alpha_p(ch)
        checks = [
            VerificationCheck(
                name="alpha_p(0.01) = 2.33",
                passed=abs(alpha - 2.33) <= 0.005,
                detail=f"alpha_p = {alpha:.6f}",
            ),
        ]
        for rate, trc_tol, ub_tol in ZERO_RATE_PROBES:
            trc_jd = ex.bound_trc_jd(rate, ch)
            ub = ex.bound_upper(rate, ch)
            ok = abs(trc_jd - alpha) <= trc_tol and abs(ub - alpha) <= ub_tol
            checks.append(VerificationCheck(
                name=f"bounds approach alpha_p at R={rate:g}",
                passed=ok,
                detail=f"trc_jd={trc_jd:.6f} ub={ub:.6f} alpha_p={alpha:.6f}",
                violation=None if ok else {"p": 0.01, "R": rate},
            ))
        return checks

    def check_inequality_grid(self, p_grid: Sequence[float], rates_per_p: int) -> List[VerificationCheck]:
        """
        Channel-level inequalities at every p, and bound orderings on a
        shared rate grid over [0, 0.5)
        """
        rate_grid = [0.5 * k / rates_per_p for k in range(rates_per_p)]
        claims = {
            "R0 <= 2 R_cr": None,
            "2 R0 >= R1 + 2 R_TRC": None,
            "R1 > R0": None,
            "delta_hat < delta_tilde < 0.5": None,
            "R_TRC < R_hat": None,
            "joint RCE bound beats independent where R0 > 2R": None,
            "TRC joint bound beats RCE joint bound below R_TRC": None,
            "TRC joint bound is twice TRC independent bound": None,
            "TRC independent bound dominates RCE independent bound": None,
            "joint RCE bound positive exactly below lambda_p": None,
        }

        def fail(name: str, p: float, rate: Optional[float] = None) -> None:
            if claims[name] is None:
                claims[name] = {"p": float(p)} if rate is None else {"p": float(p), "R": float(rate)}

        for p in p_grid:
            ch = ChannelParam(p=float(p))
            rate_0, rate_1 = ex.r0(ch), self._r1(ch)
            r_cr, r_trc, r_hat = ex.critical_rates(ch)
            delta_hat, delta_tilde = ex.delta_minimizers(ch)
            lam = min(2.0 * rate_0 / 3.0, rate_1 / 2.0)

            if rate_0 > 2.0 * r_cr + SLACK:
                fail("R0 <= 2 R_cr", p)
            if 2.0 * rate_0 < rate_1 + 2.0 * r_trc - SLACK:
                fail("2 R0 >= R1 + 2 R_TRC", p)
            if not rate_1 > rate_0:
                fail("R1 > R0", p)
            if not delta_hat < delta_tilde < 0.5:
                fail("delta_hat < delta_tilde < 0.5", p)
            if not r_trc < r_hat:
                fail("R_TRC < R_hat", p)

            for rate in rate_grid:
                rce_id = ex.bound_rce_id(rate, ch)
                eta = self._eta(rate, ch)
                rce_jd = max(0.0, eta)
                if rate_0 > 2.0 * rate and not eta > rate_0 - 2.0 * rate:
                    fail("joint RCE bound beats independent where R0 > 2R", p, rate)
                if abs(rate - lam) > SLACK and (rce_jd > 0.0) != (rate < lam):
                    fail("joint RCE bound positive exactly below lambda_p", p, rate)
                trc_id = ex.bound_trc_id(rate, ch)
                if trc_id is None:
                    continue
                trc_jd = ex.bound_trc_jd(rate, ch)
                if not trc_jd > rce_jd:
                    fail("TRC joint bound beats RCE joint bound below R_TRC", p, rate)
                if abs(trc_jd - 2.0 * trc_id) > SLACK:
                    fail("TRC joint bound is twice TRC independent bound", p, rate)
                if trc_id < rce_id - SLACK:
                    fail("TRC independent bound dominates RCE independent bound", p, rate)

        return [
            VerificationCheck(
                name=name,
                passed=violation is None,
                detail=f"{len(p_grid)} channels x {rates_per_p} rates",
                violation=violation,
            )
            for name, violation in claims.items()
        ]

    def check_curve_ordering(self, p: float = 0.01) -> VerificationCheck:
        """lb_rce_id <= lb_rce_jd <= lb_trc_jd <= ub wherever all are positive"""
        curve = ex.bound_curve(ChannelParam(p=p), 0.0, 0.6, 200)
        for point in curve.points:
            lowers = [point.lb_rce_id, point.lb_rce_jd, point.lb_trc_id, point.lb_trc_jd]
            if any(v is not None and v > point.ub + SLACK for v in lowers):
                return VerificationCheck(name="bound curve ordering", passed=False,
                                         violation={"p": p, "R": point.rate})
            chain = [point.lb_rce_id, point.lb_rce_jd, point.lb_trc_jd, point.ub]
            if all(v is not None and v > 0.0 for v in chain):
                if any(a > b + SLACK for a, b in zip(chain, chain[1:])):
                    return VerificationCheck(name="bound curve ordering", passed=False,
                                             violation={"p": p, "R": point.rate})
        return VerificationCheck(name="bound curve ordering", passed=True,
                                 detail=f"p={p}, {len(curve.points)} rates")

    # ==================== Solvers ====================

    def check_gv_solver(self, samples: int = 1000) -> VerificationCheck:
        rng = np.random.default_rng(self.seed)
        worst = 0.0
        worst_rate = 0.0
        for rate in rng.uniform(0.0, 1.0, samples):
            residual = abs(ex.binary_entropy(ex.gv_distance(float(rate))) - (1.0 - rate))
            if residual > worst:
                worst, worst_rate = residual, float(rate)
        return VerificationCheck(
            name="GV solver residual <= 1e-10",
            passed=worst <= 1e-10,
            detail=f"max residual {worst:.3g} at R={worst_rate:.6f}",
        )

    def check_minimizers(self, samples: int = 50) -> VerificationCheck:
        rng = np.random.default_rng(self.seed + 1)
        grid = np.linspace(0.0, 0.5, 50_001)
        entropy = ex.binary_entropy(grid)
        for p in rng.uniform(0.001, 0.499, samples):
            ch = ChannelParam(p=float(p))
            alpha = ex.alpha_p(ch)
            delta_hat, delta_tilde = ex.delta_minimizers(ch)
            grid_hat = grid[np.argmin(1.0 - entropy + 2.0 * grid * alpha)]
            grid_tilde = grid[np.argmin(1.0 - entropy + grid * alpha)]
            if (abs(grid_hat - delta_hat) > 1e-4 or abs(grid_tilde - delta_tilde) > 1e-4
                    or abs(ex.e1(delta_tilde, ch) - ex.r0(ch)) > SLACK):
                return VerificationCheck(name="minimizer cross-check", passed=False,
                                         violation={"p": float(p)})
        return VerificationCheck(name="minimizer cross-check", passed=True,
                                 detail=f"{samples} channels, grid step 1e-5")

    # ==================== Decoders ====================

    def check_joint_oracle(self, instances: int) -> VerificationCheck:
        """Assignment decoder matches brute-force ML cost (and map when unique)"""
        rng = np.random.default_rng(self.seed + 2)
        for index in range(instances):
            m = int(rng.integers(2, 8))
            n = int(rng.integers(8, 17))
            p = float(rng.choice([0.05, 0.2]))
            codebook = generate_rce(n, m, int(rng.integers(2**63)))
            pi = sample_permutation(m, rng)
            output = transmit(codebook, pi, ChannelParam(p=p), int(rng.integers(2**63)))
            fast = decode_joint_assignment(codebook, output)
            slow = decode_joint_bruteforce(codebook, output)
            if fast.total_cost != slow.total_cost or (
                slow.unique_minimum and not np.array_equal(fast.nu, slow.nu)
            ):
                return VerificationCheck(
                    name="joint ML oracle equivalence", passed=False,
                    detail=f"instance {index}: m={m} n={n} cost {fast.total_cost} vs {slow.total_cost}",
                    violation={"p": p},
                )
        return VerificationCheck(name="joint ML oracle equivalence", passed=True,
                                 detail=f"{instances} random instances")

    def check_pairwise_bound(self, n: int = 20, distances: Sequence[int] = (4, 8, 12),
                             p: float = 0.1) -> VerificationCheck:
        """Exhaustive two-codeword confusion probability against 2^(-d alpha_p)"""
        ch = ChannelParam(p=p)
        patterns = np.arange(2 ** n, dtype=np.uint64)
        weights = popcount(patterns[:, None])
        prob = np.power(p, weights) * np.power(1.0 - p, n - weights)
        for d in distances:
            wrong = pack_bits(np.r_[np.ones(d), np.zeros(n - d)].astype(np.uint8))[0, 0]
            to_wrong = popcount(np.bitwise_xor(patterns, wrong)[:, None])
            confusion = float(prob[to_wrong <= weights].sum())
            bound = 2.0 ** (-d * ex.alpha_p(ch))
            if confusion > bound or not math.isclose(
                confusion, ex.pairwise_error_probability(d, ch), rel_tol=1e-9
            ):
                return VerificationCheck(name="pairwise error bound", passed=False,
                                         detail=f"d={d}: {confusion:.3g} vs {bound:.3g}",
                                         violation={"p": p})
        return VerificationCheck(name="pairwise error bound", passed=True,
                                 detail=f"n={n}, d in {list(distances)}, p={p}")

    # ==================== Suite ====================

    def run(
        self,
        p_grid: Optional[Sequence[float]] = None,
        rates_per_p: Optional[int] = None,
        oracle_instances: Optional[int] = None,
        progress: Optional[Callable[[VerificationCheck], None]] = None
    ) -> VerificationReport:
        """
        Run the full suite

        Args:
            p_grid: Channels for the inequality grid (default: configured grid on (0.001, 0.499))
            rates_per_p: Rates per channel (default from settings)
            oracle_instances: Random instances for the joint-ML oracle
            progress: Optional callback invoked after each check

        Returns:
            VerificationReport
        """
        if p_grid is None:
            p_grid = default_p_grid(self.settings.verify_grid_points)
        rates_per_p = rates_per_p or self.settings.verify_rates_per_p
        if oracle_instances is None:
            oracle_instances = self.settings.verify_oracle_instances

        checks: List[VerificationCheck] = []
        stages = [
            self.check_constants,
            lambda: self.check_inequality_grid(p_grid, rates_per_p),
            self.check_curve_ordering,
            self.check_gv_solver,
            self.check_minimizers,
            lambda: self.check_joint_oracle(oracle_instances),
            self.check_pairwise_bound,
        ]
        for stage in stages:
            result = stage()
            for check in result if isinstance(result, list) else [result]:
                checks.append(check)
                logger.debug("check %s: %s", check.name, "pass" if check.passed else "FAIL")
                if progress:
                    progress(check)
        return VerificationReport(checks=checks)
