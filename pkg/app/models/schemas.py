"""Pydantic schemas for domain records, CSV rows and API requests/responses"""
import math
from enum import Enum
from typing import List, Dict, Any, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# ==================== Channel & Bound Schemas ====================

class ChannelParam(BaseModel):
    """BSC(p) crossover probability"""
    model_config = ConfigDict(frozen=True)

    p: float = Field(..., gt=0.0, lt=0.5, description="Crossover probability, 0 < p < 0.5")

    @classmethod
    def noiseless(cls) -> "ChannelParam":
        """Test-only p = 0 channel for noiseless oracles (skips validation)"""
        return cls.model_construct(p=0.0)


class BoundProfile(BaseModel):
    """Channel constants that shape every bound"""
    p: float = Field(..., description="Crossover probability")
    alpha_p: float = Field(..., description="Pairwise-error exponent (bits)")
    r0: float = Field(..., description="Cutoff rate R0(p) (bits)")
    r1: float = Field(..., description="R1(p) (bits)")
    delta_hat: float = Field(..., description="Minimizer of E2")
    delta_tilde: float = Field(..., description="Minimizer of E1")
    r_cr: float = Field(..., description="Random-coding critical rate (bits)")
    r_trc: float = Field(..., description="Upper end of the TRC rate range (bits)")
    r_hat: float = Field(..., description="0.5*(1 - H(delta_hat)) (bits)")
    lambda_p: float = Field(..., description="min{2R0/3, R1/2} (bits)")

    class Config:
        json_schema_extra = {
            "example": {
                "p": 0.01,
                "alpha_p": 2.3284,
                "r0": 0.7382,
                "r1": 0.9440,
                "delta_hat": 0.0381,
                "delta_tilde": 0.1660,
                "r_cr": 0.5590,
                "r_trc": 0.1760,
                "r_hat": 0.3835,
                "lambda_p": 0.4720,
            }
        }


class BoundPoint(BaseModel):
    """All five bounds at one rate; TRC entries are None where not applicable"""
    rate: float = Field(..., ge=0.0, description="Rate R (bits)")
    lb_rce_id: float = Field(..., ge=0.0)
    lb_rce_jd: float = Field(..., ge=0.0)
    lb_trc_id: Optional[float] = Field(None, ge=0.0)
    lb_trc_jd: Optional[float] = Field(None, ge=0.0)
    ub: float = Field(..., ge=0.0)

    @model_validator(mode="after")
    def _trc_pair(self) -> "BoundPoint":
        if (self.lb_trc_id is None) != (self.lb_trc_jd is None):
            raise ValueError("lb_trc_id and lb_trc_jd must be present together")
        if self.lb_trc_id is not None and not math.isclose(
            self.lb_trc_jd, 2.0 * self.lb_trc_id, rel_tol=1e-12, abs_tol=1e-15
        ):
            raise ValueError("lb_trc_jd must equal 2 * lb_trc_id")
        return self


class BoundCurve(BaseModel):
    """Bounds on a rate grid for one channel"""
    p: float
    points: List[BoundPoint]

    @model_validator(mode="after")
    def _increasing(self) -> "BoundCurve":
        rates = [pt.rate for pt in self.points]
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ValueError("rates must be strictly increasing")
        return self


# ==================== Experiment Schemas ====================

class Ensemble(str, Enum):
    RCE = "RCE"
    TRC = "TRC"
    EXPLICIT = "EXPLICIT"


class DecoderName(str, Enum):
    INDEPENDENT = "independent"
    JOINT = "joint"
    GMD = "gmd"
    BRUTEFORCE = "bruteforce"


class ExperimentConfig(BaseModel):
    """One simulation sweep over blocklengths at fixed rate, channel and decoder"""
    n_list: List[int] = Field(..., min_length=1, description="Blocklengths")
    rate: float = Field(..., gt=0.0, description="Design rate (bits); m = max(2, round(2^(nR)))")
    p: float = Field(..., ge=0.0, lt=0.5, description="Crossover probability (0 only in noiseless tests)")
    ensemble: Ensemble = Field(default=Ensemble.RCE)
    epsilon: Optional[float] = Field(None, gt=0.0, description="TRC band slack; default min(0.02, delta_GV(2R)/4)")
    decoder: DecoderName = Field(default=DecoderName.JOINT)
    trials: int = Field(..., ge=1)
    base_seed: int = Field(..., ge=0, lt=2**64)
    fresh_codebook_per_trial: bool = Field(default=True)
    gmd_threshold: Optional[int] = Field(None, ge=0)
    fix_identity: bool = Field(default=False, description="Use the identity permutation (fast path)")
    tolerance: Optional[float] = Field(
        None, ge=0.0, lt=1.0,
        description="Also count trials whose misidentified fraction exceeds this value"
    )
    workers: int = Field(default=1, ge=1)

    @field_validator("n_list")
    @classmethod
    def _positive_lengths(cls, value: List[int]) -> List[int]:
        if any(n < 1 for n in value):
            raise ValueError("blocklengths must be positive")
        return value

    @model_validator(mode="after")
    def _combinations(self) -> "ExperimentConfig":
        from app.core.codebook import derive_m
        from app.core.config import get_settings
        from app.core.exponents import gv_distance

        if self.ensemble == Ensemble.TRC and self.rate >= 0.5:
            raise ValueError("TRC ensemble requires rate < 0.5")
        if self.ensemble == Ensemble.EXPLICIT:
            raise ValueError("simulations draw RCE or TRC codebooks")
        if self.ensemble == Ensemble.TRC:
            # the band is built from the realized rate log2(m)/n, not the design rate
            for n in self.n_list:
                realized = math.log2(derive_m(n, self.rate)) / n
                if realized >= 0.5:
                    raise ValueError(f"TRC ensemble requires realized rate < 0.5; n={n} gives {realized:.6g}")
                design = gv_distance(2.0 * realized)
                if self.epsilon is not None and self.epsilon >= design:
                    raise ValueError(
                        f"TRC epsilon must be below delta_GV(2R) = {design:.6g} at n={n}, got {self.epsilon}"
                    )
        if self.decoder == DecoderName.BRUTEFORCE:
            cap = get_settings().bruteforce_max_m
            too_big = [n for n in self.n_list if derive_m(n, self.rate) > cap]
            if too_big:
                raise ValueError(f"bruteforce decoder needs m <= {cap}; too large at n={too_big}")
        return self


class TrialStats(BaseModel):
    """Outcome of one (n, R, p, decoder) cell"""
    n: int
    m: int
    realized_rate: float
    p: float
    ensemble: Ensemble
    decoder: DecoderName
    trials: int = Field(..., ge=1)
    errors: int = Field(..., ge=0, description="Trials with nu != pi^-1")
    p_hat: float
    ci_low: float
    ci_high: float
    exponent_hat: Optional[float] = Field(None, description="-log2(p_hat)/n, only when errors > 0")
    mean_misidentified_fraction: float = Field(0.0, ge=0.0, le=1.0)
    tolerant_errors: Optional[int] = Field(None, ge=0)

    @model_validator(mode="after")
    def _consistent(self) -> "TrialStats":
        if self.errors > self.trials:
            raise ValueError("errors cannot exceed trials")
        if not self.ci_low <= self.p_hat <= self.ci_high:
            raise ValueError("p_hat must lie inside its confidence interval")
        if (self.exponent_hat is not None) != (self.errors > 0):
            raise ValueError("exponent_hat is present exactly when errors > 0")
        return self


class ExponentFit(BaseModel):
    """Least-squares fit of -log2(p_hat) against n"""
    slope: float = Field(..., description="Empirical exponent estimate (bits)")
    intercept: float
    residuals: List[float]
    n_values: List[int]


# ==================== Codebook Schemas ====================

class PairSetSummary(BaseModel):
    """Greedy disjoint pair set of a codebook"""
    pairs: List[List[int]] = Field(..., description="Index pairs (i, j), i < j, 0-based")
    source_distances: List[int]


class CodebookSummary(BaseModel):
    """Inspection report for one codebook"""
    m: int
    n: int
    rate: float
    ensemble: Ensemble
    min_distance: Optional[int] = None
    max_distance: Optional[int] = None
    min_pair: Optional[List[int]] = None
    trc_band: Optional[List[float]] = Field(None, description="Exclusive band (n*d, n*(1-d)) at default epsilon")
    in_trc_band: Optional[bool] = None
    pair_set: Optional[PairSetSummary] = None


# ==================== Verification Schemas ====================

class VerificationCheck(BaseModel):
    name: str
    passed: bool
    detail: str = ""
    violation: Optional[Dict[str, float]] = Field(None, description="Worst offending (p, R)")


class VerificationReport(BaseModel):
    checks: List[VerificationCheck]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


# ==================== API Schemas ====================

class BoundsRequest(BaseModel):
    """Request model for a bound table"""
    p: float = Field(..., gt=0.0, lt=0.5)
    r_min: float = Field(default=0.0, ge=0.0)
    r_max: float = Field(default=0.6, gt=0.0, le=1.0)
    steps: int = Field(default=200, ge=2, le=10_000)

    class Config:
        json_schema_extra = {
            "example": {"p": 0.01, "r_min": 0.0, "r_max": 0.6, "steps": 200}
        }


class BoundsResponse(BaseModel):
    success: bool
    profile: BoundProfile
    curve: BoundCurve


class SimulateRequest(BaseModel):
    """Request model for a Monte Carlo run"""
    n_list: List[int] = Field(..., min_length=1)
    rate: float = Field(..., gt=0.0)
    p: float = Field(..., gt=0.0, lt=0.5)
    ensemble: Ensemble = Ensemble.RCE
    epsilon: Optional[float] = None
    decoder: DecoderName = DecoderName.JOINT
    trials: int = Field(default=1000, ge=1)
    seed: Optional[int] = Field(None, ge=0, lt=2**64)
    fresh_codebook_per_trial: bool = True
    gmd_threshold: Optional[int] = None
    tolerance: Optional[float] = None

    class Config:
        json_schema_extra = {
            "example": {
                "n_list": [8, 12, 16],
                "rate": 0.1,
                "p": 0.05,
                "decoder": "joint",
                "trials": 2000,
                "seed": 7,
            }
        }


class SimulateResponse(BaseModel):
    success: bool
    seed: int
    cells: List[TrialStats]
    fit: Optional[ExponentFit] = None


class SystemInfo(BaseModel):
    """System information"""
    status: str = Field(..., description="System status")
    versions: Dict[str, str] = Field(..., description="Numerical library versions")
    configuration: Dict[str, Any] = Field(..., description="Active settings")
