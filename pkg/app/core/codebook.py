"""Barcode codebooks: bit-packed storage, RCE/TRC generation and distance machinery"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from app.core.config import get_settings
from app.core.errors import (
    CodebookFormatError,
    DomainError,
    GenerationBudgetError,
    ResourceLimitError,
    ShapeMismatchError,
)
from app.core.exponents import gv_distance
from app.models.schemas import CodebookSummary, Ensemble, PairSetSummary


logger = logging.getLogger(__name__)

WORD_BITS = 64

# popcount of every byte value
_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)

# rows of the distance matrix computed per block, keeps the xor buffer near 32 MiB
_BLOCK_WORDS = 1 << 22


def words_per_row(n: int) -> int:
    return (n + WORD_BITS - 1) // WORD_BITS


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """
    Pack an (m, n) 0/1 matrix little-endian into (m, ceil(n/64)) uint64 words

    Bit j of word w holds column 64*w + j; trailing bits are zero.
    """
    bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
    m, n = bits.shape
    padded = np.zeros((m, words_per_row(n) * WORD_BITS), dtype=np.uint8)
    padded[:, :n] = bits & 1
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8")


def unpack_words(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of pack_bits: (m, W) uint64 words -> (m, n) uint8 bits"""
    words = np.ascontiguousarray(np.atleast_2d(words).astype("<u8", copy=False))
    as_bytes = words.view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :n]


def popcount(words: np.ndarray) -> np.ndarray:
    """Population count summed over the last (word) axis"""
    words = np.ascontiguousarray(words, dtype="<u8")
    as_bytes = words.view(np.uint8).reshape(words.shape[:-1] + (-1,))
    return _POPCOUNT8[as_bytes].sum(axis=-1, dtype=np.int64)


def _trailing_mask(n: int) -> np.ndarray:
    mask = np.full(words_per_row(n), np.iinfo(np.uint64).max, dtype=np.uint64)
    tail = n % WORD_BITS
    if tail:
        mask[-1] = np.uint64((1 << tail) - 1)
    return mask


@dataclass(frozen=True, eq=False)
class Codebook:
    """
    m barcodes of n bits, bit-packed into 64-bit words

    Immutable after construction; the word array is made read-only.
    """
    n: int
    words: np.ndarray
    ensemble: Ensemble = Ensemble.EXPLICIT
    epsilon: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"blocklength must be positive, got {self.n}")
        if self.words.ndim != 2 or self.words.shape[0] < 1:
            raise ShapeMismatchError("codebook needs at least one row")
        if self.words.shape[1] != words_per_row(self.n):
            raise ShapeMismatchError(
                f"expected {words_per_row(self.n)} words per row for n={self.n}, "
                f"got {self.words.shape[1]}"
            )
        if np.any(self.words & ~_trailing_mask(self.n)):
            raise ShapeMismatchError("bits beyond position n must be zero")
        self.words.setflags(write=False)

    @classmethod
    def from_bits(
        cls,
        bits: np.ndarray,
        ensemble: Ensemble = Ensemble.EXPLICIT,
        epsilon: Optional[float] = None,
        seed: Optional[int] = None
    ) -> "Codebook":
        bits = np.atleast_2d(np.asarray(bits))
        if not np.isin(bits, (0, 1)).all():
            raise ShapeMismatchError("codebook entries must be 0 or 1")
        return cls(n=bits.shape[1], words=pack_bits(bits), ensemble=ensemble,
                   epsilon=epsilon, seed=seed)

    @property
    def m(self) -> int:
        return self.words.shape[0]

    @property
    def rate(self) -> float:
        return math.log2(self.m) / self.n

    @property
    def bits(self) -> np.ndarray:
        return unpack_words(self.words, self.n)


@dataclass
class PairSet:
    """Disjoint index pairs (i < j) with their Hamming distances"""
    pairs: List[Tuple[int, int]] = field(default_factory=list)
    source_distances: List[int] = field(default_factory=list)

    def to_summary(self) -> PairSetSummary:
        return PairSetSummary(
            pairs=[[i, j] for i, j in self.pairs],
            source_distances=list(self.source_distances),
        )


# ==================== Distances ====================

def hamming(x, y) -> int:
    """Hamming distance between two 0/1 vectors of equal length"""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeMismatchError(f"hamming needs equal-length vectors, got {x.shape} and {y.shape}")
    if not (np.isin(x, (0, 1)).all() and np.isin(y, (0, 1)).all()):
        raise ShapeMismatchError("hamming entries must be 0 or 1")
    return hamming_packed(pack_bits(x)[0], pack_bits(y)[0])


def hamming_packed(a: np.ndarray, b: np.ndarray) -> int:
    """Hamming distance between two packed rows"""
    if a.shape != b.shape:
        raise ShapeMismatchError(f"packed rows differ in shape: {a.shape} vs {b.shape}")
    return int(popcount(np.bitwise_xor(a, b)))


def distance_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    All pairwise Hamming distances between packed row sets

    Args:
        a: (ma, W) uint64 words
        b: (mb, W) uint64 words

    Returns:
        (ma, mb) int32 matrix, entry [j, k] = d_H(a_j, b_k)
    """
    if a.shape[1] != b.shape[1]:
        raise ShapeMismatchError(f"word counts differ: {a.shape[1]} vs {b.shape[1]}")
    ma, mb, w = a.shape[0], b.shape[0], a.shape[1]
    out = np.empty((ma, mb), dtype=np.int32)
    block = max(1, _BLOCK_WORDS // max(1, mb * w))
    for start in range(0, ma, block):
        xor = np.bitwise_xor(a[start:start + block, None, :], b[None, :, :])
        out[start:start + block] = popcount(xor)
    return out


def pairwise_min_distance(codebook: Codebook) -> Tuple[int, Tuple[int, int]]:
    """
    Exact minimum pairwise distance and the lexicographically first pair attaining it
    """
    if codebook.m < 2:
        raise DomainError("pairwise_min_distance needs at least two rows")
    dist = distance_matrix(codebook.words, codebook.words).astype(np.int64)
    upper = np.triu(np.ones_like(dist, dtype=bool), k=1)
    dist[~upper] = np.iinfo(np.int64).max
    flat = int(np.argmin(dist))
    i, j = divmod(flat, codebook.m)
    return int(dist[i, j]), (i, j)


def pairwise_distance_range(codebook: Codebook) -> Tuple[int, int]:
    """(min, max) distance over all pairs i != j"""
    if codebook.m < 2:
        raise DomainError("pairwise distances need at least two rows")
    dist = distance_matrix(codebook.words, codebook.words)
    iu = np.triu_indices(codebook.m, k=1)
    values = dist[iu]
    return int(values.min()), int(values.max())


def greedy_pair_set(codebook: Codebook) -> PairSet:
    """
    Disjoint pair set built by repeated closest-pair extraction

    Each step takes a minimum-distance pair among the remaining rows and
    removes both endpoints, until ceil(m/4) pairs are collected.
    """
    m = codebook.m
    if m < 4:
        raise DomainError(f"greedy_pair_set needs m >= 4, got {m}")
    big = np.iinfo(np.int64).max
    dist = distance_matrix(codebook.words, codebook.words).astype(np.int64)
    dist[np.tril_indices(m)] = big

    result = PairSet()
    target = math.ceil(m / 4)
    while len(result.pairs) < target:
        flat = int(np.argmin(dist))
        i, j = divmod(flat, m)
        result.pairs.append((i, j))
        result.source_distances.append(int(dist[i, j]))
        for k in (i, j):
            dist[k, :] = big
            dist[:, k] = big
    return result


def permuted_distance(codebook: Codebook, sigma) -> int:
    """
    d_H(C, C_sigma) = sum_i d_H(c_i, c_sigma(i)) for a 0-based permutation sigma
    """
    sigma = np.asarray(sigma, dtype=np.int64)
    if sigma.shape != (codebook.m,) or not np.array_equal(np.sort(sigma), np.arange(codebook.m)):
        raise ShapeMismatchError("sigma must be a bijection on 0..m-1")
    return int(popcount(np.bitwise_xor(codebook.words, codebook.words[sigma])).sum())


# ==================== Generation ====================

def derive_m(n: int, rate: float) -> int:
    """Barcode count for a design rate: max(2, round(2^(nR)))"""
    cap = get_settings().max_codebook_bits
    if n * rate > math.log2(cap) + 1.0:
        raise ResourceLimitError(
            f"n*R = {n * rate:.6g} asks for about 2^{n * rate:.0f} barcodes, over the cap of {cap} bits"
        )
    return max(2, int(math.floor(2.0 ** (n * rate) + 0.5)))


def default_epsilon(rate: float) -> float:
    """TRC band slack min(0.02, delta_GV(2R)/4)"""
    return min(get_settings().trc_default_epsilon, gv_distance(min(1.0, 2.0 * rate)) / 4.0)


def trc_band(n: int, m: int, epsilon: float) -> Tuple[float, float]:
    """
    Exclusive distance band (n*d, n*(1-d)) with d = delta_GV(2R) - epsilon, R = log2(m)/n
    """
    rate = math.log2(m) / n
    if rate >= 0.5:
        raise DomainError(f"TRC requires rate < 0.5, got {rate:.6g}")
    design = gv_distance(2.0 * rate)
    if not 0.0 < epsilon < design:
        raise DomainError(
            f"TRC requires 0 < epsilon < delta_GV(2R) = {design:.6g}, got {epsilon!r}"
        )
    low = design - epsilon
    return n * low, n * (1.0 - low)


def in_band(distances: np.ndarray, band: Tuple[float, float]) -> bool:
    low, high = band
    return bool(np.all((distances > low) & (distances < high)))


def _check_size(n: int, m: int) -> None:
    if n < 1 or m < 1:
        raise DomainError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    cap = get_settings().max_codebook_bits
    if m * n > cap:
        raise ResourceLimitError(f"m*n = {m * n} exceeds the configured cap of {cap} bits")


def _random_words(rng: np.random.Generator, rows: int, n: int) -> np.ndarray:
    words = rng.integers(
        0, np.iinfo(np.uint64).max, size=(rows, words_per_row(n)),
        dtype=np.uint64, endpoint=True
    )
    return words & _trailing_mask(n)


def generate_rce(n: int, m: int, seed: int) -> Codebook:
    """Random code ensemble: all m*n bits i.i.d. uniform, deterministic given seed"""
    _check_size(n, m)
    rng = np.random.default_rng(seed)
    return Codebook(n=n, words=_random_words(rng, m, n), ensemble=Ensemble.RCE, seed=seed)


def generate_trc(
    n: int,
    m: int,
    epsilon: Optional[float],
    seed: int,
    max_attempts: Optional[int] = None
) -> Codebook:
    """
    Typical random code by sequential rejection

    Rows are drawn one at a time; a candidate is redrawn until every distance
    to the accepted rows lies strictly inside the TRC band.

    Raises:
        DomainError: rate >= 0.5 or epsilon outside (0, delta_GV(2R))
        GenerationBudgetError: a row was rejected max_attempts times
    """
    _check_size(n, m)
    if epsilon is None:
        epsilon = default_epsilon(math.log2(m) / n)
    max_attempts = max_attempts or get_settings().trc_max_attempts
    band = trc_band(n, m, epsilon)
    rng = np.random.default_rng(seed)

    words = np.zeros((m, words_per_row(n)), dtype=np.uint64)
    total_attempts = 0
    for row in range(m):
        for attempt in range(1, max_attempts + 1):
            candidate = _random_words(rng, 1, n)[0]
            if row == 0 or in_band(popcount(np.bitwise_xor(words[:row], candidate)), band):
                words[row] = candidate
                total_attempts += attempt
                break
        else:
            raise GenerationBudgetError(n, m, epsilon, row, max_attempts)

    logger.debug("TRC codebook n=%d m=%d eps=%.4g drawn with %d candidates",
                 n, m, epsilon, total_attempts)
    return Codebook(n=n, words=words, ensemble=Ensemble.TRC, epsilon=epsilon, seed=seed)


def satisfies_trc(codebook: Codebook, epsilon: float) -> bool:
    """Full pairwise scan of the TRC band constraint"""
    if codebook.m < 2:
        return True
    band = trc_band(codebook.n, codebook.m, epsilon)
    low, high = pairwise_distance_range(codebook)
    return low > band[0] and high < band[1]


# ==================== Text format ====================

def format_rows(bits: np.ndarray) -> List[str]:
    return ["".join("1" if b else "0" for b in row) for row in bits]


def save_codebook(codebook: Codebook, path: Union[str, Path]) -> None:
    """Write 'm n' then m lines of n characters from {0,1}"""
    lines = [f"{codebook.m} {codebook.n}"] + format_rows(codebook.bits)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def parse_rows(lines: List[str], source: str) -> np.ndarray:
    """Parse an 'm n' header followed by m bit strings into an (m, n) matrix"""
    if not lines:
        raise CodebookFormatError(f"{source}: empty file")
    header = lines[0].split(" ")
    if len(header) != 2 or not all(h.isdigit() for h in header):
        raise CodebookFormatError(f"{source}: header must be 'm n', got {lines[0]!r}")
    m, n = int(header[0]), int(header[1])
    rows = lines[1:]
    if m < 1 or n < 1 or len(rows) != m:
        raise CodebookFormatError(f"{source}: expected {m} rows of {n} bits, got {len(rows)} rows")
    for k, row in enumerate(rows):
        if len(row) != n or set(row) - {"0", "1"}:
            raise CodebookFormatError(f"{source}: row {k + 1} is not {n} characters of 0/1")
    return np.array([[c == "1" for c in row] for row in rows], dtype=np.uint8)


def load_codebook(path: Union[str, Path]) -> Codebook:
    """Read a codebook written by save_codebook"""
    text = Path(path).read_text(encoding="ascii")
    if not text.endswith("\n"):
        raise CodebookFormatError(f"{path}: file must be newline-terminated")
    return Codebook.from_bits(parse_rows(text[:-1].split("\n"), str(path)))


# ==================== Inspection ====================

def summarize(codebook: Codebook, epsilon: Optional[float] = None) -> CodebookSummary:
    """m, n, rate, distance range, TRC band check and greedy pair set"""
    summary = CodebookSummary(
        m=codebook.m, n=codebook.n, rate=codebook.rate, ensemble=codebook.ensemble
    )
    if codebook.m >= 2:
        summary.min_distance, pair = pairwise_min_distance(codebook)
        summary.min_pair = list(pair)
        summary.max_distance = pairwise_distance_range(codebook)[1]
        if codebook.rate < 0.5:
            eps = epsilon or codebook.epsilon or default_epsilon(codebook.rate)
            try:
                band = trc_band(codebook.n, codebook.m, eps)
            except DomainError:
                band = None
            if band is not None:
                summary.trc_band = list(band)
                summary.in_trc_band = (
                    summary.min_distance > band[0] and summary.max_distance < band[1]
                )
    if codebook.m >= 4:
        summary.pair_set = greedy_pair_set(codebook).to_summary()
    return summary
