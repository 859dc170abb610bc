"""Monte Carlo estimation of the bee-identification error probability and its exponent"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from app.core.channel import PermutationMap, sample_permutation, transmit
from app.core.codebook import Codebook, default_epsilon, derive_m, generate_rce, generate_trc
from app.core.config import get_settings
from app.core.decoders import decode, default_gmd_threshold
from app.core.errors import InsufficientDataError
from app.models.schemas import (
    ChannelParam,
    DecoderName,
    Ensemble,
    ExperimentConfig,
    ExponentFit,
    TrialStats,
)


logger = logging.getLogger(__name__)

Z_95 = float(stats.norm.ppf(0.975))


# ==================== Statistics ====================

def wilson_interval(errors: int, trials: int, z: float = Z_95) -> Tuple[float, float]:
    """
    Wilson score interval for a binomial proportion

    Args:
        errors: Observed error count
        trials: Number of trials (>= 1)
        z: Standard-normal quantile

    Returns:
        (low, high), clamped to [0, 1]
    """
    if trials < 1 or not 0 <= errors <= trials:
        raise ValueError(f"need 0 <= errors <= trials and trials >= 1, got {errors}/{trials}")
    p_hat = errors / trials
    denom = 1.0 + z * z / trials
    center = (p_hat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / trials + z * z / (4 * trials * trials)) / denom
    low = 0.0 if errors == 0 else max(0.0, center - half)
    high = 1.0 if errors == trials else min(1.0, center + half)
    return min(low, p_hat), max(high, p_hat)


def rule_of_three_upper(trials: int) -> float:
    """One-sided 95% upper bound when no errors were seen"""
    return min(1.0, 3.0 / trials)


def estimate_exponent(cells: Sequence[TrialStats]) -> ExponentFit:
    """
    Least-squares fit of -log2(p_hat) against n over cells with errors

    Raises:
        InsufficientDataError: fewer than three cells observed any error
    """
    usable = sorted((c for c in cells if c.errors > 0), key=lambda c: c.n)
    if len(usable) < 3:
        raise InsufficientDataError(
            f"need at least 3 cells with errors to fit an exponent, got {len(usable)}; "
            "raise the trial count for the larger blocklengths"
        )
    n_values = np.array([c.n for c in usable], dtype=float)
    y = -np.log2([c.p_hat for c in usable])
    fit = stats.linregress(n_values, y)
    residuals = y - (fit.intercept + fit.slope * n_values)
    return ExponentFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        residuals=[float(r) for r in residuals],
        n_values=[c.n for c in usable],
    )


# ==================== Trials ====================

@dataclass(frozen=True)
class TrialSeeds:
    codebook: int
    permutation: int
    noise: int
    tie: int


def trial_seeds(base_seed: int, n: int, trial_index: int) -> TrialSeeds:
    """Seeds of one trial, a pure function of (base_seed, n, trial_index)"""
    state = np.random.SeedSequence([base_seed, n, trial_index]).generate_state(4, dtype=np.uint64)
    return TrialSeeds(*(int(s) for s in state))


def entropy_seed() -> int:
    """Fresh 64-bit base seed from OS entropy"""
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])


def cell_codebook_seed(base_seed: int, n: int) -> int:
    return int(np.random.SeedSequence([base_seed, n]).generate_state(1, dtype=np.uint64)[0])


@dataclass
class _Tally:
    errors: int = 0
    misidentified_fraction: float = 0.0
    tolerant_errors: int = 0

    def add(self, other: "_Tally") -> "_Tally":
        return _Tally(
            self.errors + other.errors,
            self.misidentified_fraction + other.misidentified_fraction,
            self.tolerant_errors + other.tolerant_errors,
        )


class MonteCarloService:
    """
    Runs reproducible trial batches

    Every trial derives its codebook, permutation, noise and tie-break seeds
    from (base_seed, n, trial_index), so counts do not depend on the number
    of workers or on scheduling.
    """

    def __init__(self):
        """Initialize the Monte Carlo service"""
        self.settings = get_settings()

    def _channel(self, p: float) -> ChannelParam:
        return ChannelParam(p=p) if p > 0.0 else ChannelParam.noiseless()

    def _codebook(self, cfg: ExperimentConfig, n: int, m: int, seed: int) -> Codebook:
        if cfg.ensemble == Ensemble.TRC:
            epsilon = cfg.epsilon or default_epsilon(math.log2(m) / n)
            return generate_trc(n, m, epsilon, seed, self.settings.trc_max_attempts)
        return generate_rce(n, m, seed)

    def _trial(
        self,
        cfg: ExperimentConfig,
        n: int,
        m: int,
        trial_index: int,
        decoders: Sequence[DecoderName],
        fixed_codebook: Optional[Codebook],
        threshold: Optional[int]
    ) -> List[_Tally]:
        seeds = trial_seeds(cfg.base_seed, n, trial_index)
        codebook = fixed_codebook or self._codebook(cfg, n, m, seeds.codebook)
        if cfg.fix_identity:
            pi = PermutationMap.identity(m)
        else:
            pi = sample_permutation(m, np.random.default_rng(seeds.permutation))
        output = transmit(codebook, pi, self._channel(cfg.p), seeds.noise)

        tallies = []
        for name in decoders:
            verdict = decode(name, codebook, output, tie_seed=seeds.tie, threshold=threshold)
            fraction = verdict.misidentified / m
            tolerant = cfg.tolerance is not None and fraction > cfg.tolerance
            tallies.append(_Tally(int(not verdict.exact_recovery), fraction, int(tolerant)))
        return tallies

    def _tally_cell(
        self,
        cfg: ExperimentConfig,
        n: int,
        decoders: Sequence[DecoderName],
        fixed_codebook: Optional[Codebook] = None
    ) -> Tuple[int, List[_Tally]]:
        m = derive_m(n, cfg.rate)
        if fixed_codebook is None and not cfg.fresh_codebook_per_trial:
            fixed_codebook = self._codebook(cfg, n, m, cell_codebook_seed(cfg.base_seed, n))
        if fixed_codebook is not None:
            m = fixed_codebook.m
        threshold = cfg.gmd_threshold
        if threshold is None and DecoderName.GMD in decoders:
            threshold = default_gmd_threshold(n, cfg.p, math.log2(m) / n)

        def run(index: int) -> List[_Tally]:
            return self._trial(cfg, n, m, index, decoders, fixed_codebook, threshold)

        totals = [_Tally() for _ in decoders]
        workers = max(cfg.workers, 1)
        if workers == 1:
            outcomes: Iterator[List[_Tally]] = map(run, range(cfg.trials))
            for outcome in outcomes:
                totals = [t.add(o) for t, o in zip(totals, outcome)]
        else:
            chunk = max(1, cfg.trials // (workers * 8))
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for outcome in pool.map(run, range(cfg.trials), chunksize=chunk):
                    totals = [t.add(o) for t, o in zip(totals, outcome)]
        return m, totals

    def _stats(self, cfg: ExperimentConfig, n: int, m: int, decoder: DecoderName, tally: _Tally) -> TrialStats:
        p_hat = tally.errors / cfg.trials
        if tally.errors == 0:
            ci_low, ci_high = 0.0, rule_of_three_upper(cfg.trials)
        else:
            ci_low, ci_high = wilson_interval(tally.errors, cfg.trials)
        return TrialStats(
            n=n,
            m=m,
            realized_rate=math.log2(m) / n,
            p=cfg.p,
            ensemble=cfg.ensemble,
            decoder=decoder,
            trials=cfg.trials,
            errors=tally.errors,
            p_hat=p_hat,
            ci_low=ci_low,
            ci_high=ci_high,
            exponent_hat=-math.log2(p_hat) / n if tally.errors > 0 else None,
            mean_misidentified_fraction=tally.misidentified_fraction / cfg.trials,
            tolerant_errors=tally.tolerant_errors if cfg.tolerance is not None else None,
        )

    def run_cell(
        self,
        cfg: ExperimentConfig,
        n: int,
        codebook: Optional[Codebook] = None
    ) -> TrialStats:
        """
        Estimate the bee-identification error probability for one blocklength

        Args:
            cfg: Experiment configuration
            n: Blocklength from cfg.n_list
            codebook: Optional explicit codebook used for every trial

        Returns:
            TrialStats for the cell
        """
        if n not in cfg.n_list:
            raise ValueError(f"n={n} is not in the configured blocklengths {cfg.n_list}")
        m, (tally,) = self._tally_cell(cfg, n, [cfg.decoder], codebook)
        cell = self._stats(cfg, n, m, cfg.decoder, tally)
        logger.info(
            "cell n=%d m=%d decoder=%s errors=%d/%d p_hat=%.4g",
            n, m, cfg.decoder.value, cell.errors, cell.trials, cell.p_hat
        )
        return cell

    def run_paired(
        self,
        cfg: ExperimentConfig,
        n: int,
        decoders: Sequence[DecoderName],
        codebook: Optional[Codebook] = None
    ) -> Dict[DecoderName, TrialStats]:
        """Run several decoders on identical channel realizations"""
        decoders = [DecoderName(d) for d in decoders]
        m, tallies = self._tally_cell(cfg, n, decoders, codebook)
        return {
            name: self._stats(cfg, n, m, name, tally)
            for name, tally in zip(decoders, tallies)
        }

    def run(self, cfg: ExperimentConfig) -> Iterator[TrialStats]:
        """Yield one TrialStats per blocklength, in the configured order"""
        for n in cfg.n_list:
            yield self.run_cell(cfg, n)


# Singleton instance
_montecarlo_service: Optional[MonteCarloService] = None


def get_montecarlo_service() -> MonteCarloService:
    """Get or create the Monte Carlo service singleton"""
    global _montecarlo_service
    if _montecarlo_service is None:
        _montecarlo_service = MonteCarloService()
    return _montecarlo_service
