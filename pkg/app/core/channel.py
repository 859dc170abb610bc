"""The bee-identification channel: uniform row permutation followed by BSC(p) noise"""
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from app.core.codebook import (
    Codebook,
    format_rows,
    pack_bits,
    parse_rows,
    popcount,
    unpack_words,
)
from app.core.errors import CodebookFormatError, ShapeMismatchError
from app.models.schemas import ChannelParam


PI_HEADER = "# pi:"


@dataclass(frozen=True, eq=False)
class PermutationMap:
    """
    forward[i] = pi(i): source row i lands at received row pi(i) (0-based)
    """
    forward: np.ndarray

    def __post_init__(self):
        forward = np.asarray(self.forward, dtype=np.int64)
        if forward.ndim != 1 or not np.array_equal(np.sort(forward), np.arange(forward.size)):
            raise ShapeMismatchError("permutation map must be a bijection on 0..m-1")
        forward.setflags(write=False)
        object.__setattr__(self, "forward", forward)

    @property
    def m(self) -> int:
        return int(self.forward.size)

    @classmethod
    def identity(cls, m: int) -> "PermutationMap":
        return cls(np.arange(m))

    def inverse(self) -> "PermutationMap":
        inv = np.empty_like(self.forward)
        inv[self.forward] = np.arange(self.m)
        return PermutationMap(inv)

    def compose(self, first: "PermutationMap") -> "PermutationMap":
        """self after first: i -> self(first(i))"""
        if first.m != self.m:
            raise ShapeMismatchError("cannot compose permutations of different sizes")
        return PermutationMap(self.forward[first.forward])

    def __eq__(self, other) -> bool:
        return isinstance(other, PermutationMap) and np.array_equal(self.forward, other.forward)

    def __hash__(self) -> int:
        return hash(self.forward.tobytes())


@dataclass(frozen=True, eq=False)
class ChannelOutput:
    """Row-permuted noisy codebook with the hidden permutation that produced it"""
    n: int
    received: np.ndarray
    truth: PermutationMap
    flip_count: int
    noise_seed: int

    @property
    def m(self) -> int:
        return self.received.shape[0]

    @property
    def bits(self) -> np.ndarray:
        return unpack_words(self.received, self.n)

    def relabel(self, tau: PermutationMap) -> "ChannelOutput":
        """Move received row k to position tau(k); the truth follows"""
        if tau.m != self.m:
            raise ShapeMismatchError("relabeling must act on m rows")
        received = np.empty_like(self.received)
        received[tau.forward] = self.received
        return ChannelOutput(
            n=self.n,
            received=received,
            truth=tau.compose(self.truth),
            flip_count=self.flip_count,
            noise_seed=self.noise_seed,
        )


def sample_permutation(m: int, rng: np.random.Generator) -> PermutationMap:
    """Uniform permutation of m rows (Fisher-Yates via Generator.permutation)"""
    if m < 1:
        raise ShapeMismatchError(f"m must be positive, got {m}")
    return PermutationMap(rng.permutation(m))


def noise_mask(m: int, n: int, p: float, noise_seed: int) -> np.ndarray:
    """
    Packed Bernoulli(p) flip mask for source rows 0..m-1

    Drawn from a Philox counter-based generator keyed by noise_seed in
    row-major order, so row i's mask depends only on (noise_seed, i, n).
    """
    rng = np.random.Generator(np.random.Philox(key=noise_seed))
    flips = rng.random((m, n)) < p
    return pack_bits(flips.astype(np.uint8))


def transmit(
    codebook: Codebook,
    pi: PermutationMap,
    ch: ChannelParam,
    noise_seed: int
) -> ChannelOutput:
    """
    Send a codebook through the channel: row pi(i) of the output is
    row i of the codebook XOR an i.i.d. Bernoulli(p) mask

    Args:
        codebook: Source codebook
        pi: Row permutation applied by the channel
        ch: Crossover probability (ChannelParam.noiseless() for p = 0)
        noise_seed: Key of the noise generator

    Returns:
        ChannelOutput carrying the ground-truth permutation
    """
    if pi.m != codebook.m:
        raise ShapeMismatchError(f"permutation acts on {pi.m} rows, codebook has {codebook.m}")
    mask = noise_mask(codebook.m, codebook.n, ch.p, noise_seed)
    received = np.empty_like(codebook.words)
    received[pi.forward] = np.bitwise_xor(codebook.words, mask)
    return ChannelOutput(
        n=codebook.n,
        received=received,
        truth=pi,
        flip_count=int(popcount(mask).sum()),
        noise_seed=noise_seed,
    )


# ==================== Text format ====================

def save_channel_output(output: ChannelOutput, path: Union[str, Path]) -> None:
    """Codebook text format preceded by '# pi: <forward map>'"""
    lines = [
        f"{PI_HEADER} " + " ".join(str(int(v)) for v in output.truth.forward),
        f"{output.m} {output.n}",
    ] + format_rows(output.bits)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_channel_output(path: Union[str, Path], noise_seed: int = 0) -> ChannelOutput:
    """Read a fixture written by save_channel_output (flip_count is not stored)"""
    text = Path(path).read_text(encoding="ascii")
    if not text.endswith("\n"):
        raise CodebookFormatError(f"{path}: file must be newline-terminated")
    lines = text[:-1].split("\n")
    if not lines or not lines[0].startswith(PI_HEADER):
        raise CodebookFormatError(f"{path}: first line must start with '{PI_HEADER}'")
    try:
        forward = [int(tok) for tok in lines[0][len(PI_HEADER):].split()]
    except ValueError as exc:
        raise CodebookFormatError(f"{path}: bad permutation header") from exc
    bits = parse_rows(lines[1:], str(path))
    if len(forward) != bits.shape[0]:
        raise CodebookFormatError(f"{path}: permutation has {len(forward)} entries for {bits.shape[0]} rows")
    return ChannelOutput(
        n=bits.shape[1],
        received=pack_bits(bits),
        truth=PermutationMap(np.array(forward)),
        flip_count=0,
        noise_seed=noise_seed,
    )
