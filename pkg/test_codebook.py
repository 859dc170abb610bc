"""
Tests for codebook storage, distances, generation and the text format
"""
import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st
from scipy import stats

import app.core.codebook as cb
from app.core.errors import (
    CodebookFormatError,
    DomainError,
    GenerationBudgetError,
    ResourceLimitError,
    ShapeMismatchError,
)
from app.core.exponents import gv_distance
from app.models.schemas import Ensemble


def bit_vectors(n):
    return st.lists(st.integers(0, 1), min_size=n, max_size=n)


# ==================== Packing ====================

def test_pack_spans_word_boundary():
    bits = np.zeros((2, 70), dtype=np.uint8)
    bits[0, 0] = 1
    bits[0, 64] = 1
    bits[1, 69] = 1
    words = cb.pack_bits(bits)
    assert words.shape == (2, 2)
    assert words[0, 0] == 1 and words[0, 1] == 1
    assert words[1, 1] == 1 << 5
    np.testing.assert_array_equal(cb.unpack_words(words, 70), bits)


def test_codebook_rejects_stray_trailing_bits():
    words = np.array([[1 << 10]], dtype=np.uint64)
    with pytest.raises(ShapeMismatchError):
        cb.Codebook(n=8, words=words)


def test_codebook_words_are_read_only():
    codebook = cb.Codebook.from_bits([[0, 1, 1], [1, 0, 0]])
    with pytest.raises(ValueError):
        codebook.words[0, 0] = 0


def test_from_bits_rejects_non_binary():
    with pytest.raises(ShapeMismatchError):
        cb.Codebook.from_bits([[0, 2, 1]])


# ==================== Distances ====================

@given(bit_vectors(20), bit_vectors(20), bit_vectors(20))
@hyp_settings(max_examples=200, deadline=None)
def test_hamming_is_a_metric(x, y, z):
    assert cb.hamming(x, x) == 0
    assert cb.hamming(x, y) == cb.hamming(y, x)
    assert cb.hamming(x, z) <= cb.hamming(x, y) + cb.hamming(y, z)
    assert cb.hamming(x, y) == sum(a != b for a, b in zip(x, y))


def test_hamming_length_mismatch():
    with pytest.raises(ShapeMismatchError):
        cb.hamming([0, 1], [0, 1, 1])


def test_hamming_rejects_non_binary():
    with pytest.raises(ShapeMismatchError):
        cb.hamming([2], [0])
    with pytest.raises(ShapeMismatchError):
        cb.hamming([0, 1], [0, -1])


def test_distance_matrix_matches_direct_count():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 2, size=(5, 90), dtype=np.uint8)
    b = rng.integers(0, 2, size=(7, 90), dtype=np.uint8)
    dist = cb.distance_matrix(cb.pack_bits(a), cb.pack_bits(b))
    expected = (a[:, None, :] != b[None, :, :]).sum(axis=2)
    np.testing.assert_array_equal(dist, expected)


def test_pairwise_min_distance_first_witness():
    codebook = cb.Codebook.from_bits([
        [0, 0, 0, 0, 0, 0],
        [1, 1, 1, 0, 0, 0],
        [1, 1, 1, 1, 0, 0],
        [0, 0, 0, 0, 0, 1],
    ])
    # (0, 3) and (1, 2) both sit at distance 1
    assert cb.pairwise_min_distance(codebook) == (1, (0, 3))
    assert cb.pairwise_distance_range(codebook) == (1, 5)


def test_greedy_pair_set_on_sixteen_rows():
    codebook = cb.generate_rce(24, 16, seed=11)
    pairs = cb.greedy_pair_set(codebook)
    assert len(pairs.pairs) == 4
    flat = [k for pair in pairs.pairs for k in pair]
    assert len(set(flat)) == 8
    assert all(i < j for i, j in pairs.pairs)
    words = codebook.words
    for (i, j), d in zip(pairs.pairs, pairs.source_distances):
        assert d == cb.hamming_packed(words[i], words[j])
    # first pair is a closest pair of the whole codebook
    assert pairs.source_distances[0] == cb.pairwise_min_distance(codebook)[0]


def test_greedy_pair_set_on_four_rows():
    codebook = cb.Codebook.from_bits(np.array([
        [0, 0, 0, 0, 0, 0],
        [1, 1, 1, 1, 1, 1],
        [0, 0, 0, 0, 0, 1],
        [1, 1, 1, 1, 0, 0],
    ]))
    pairs = cb.greedy_pair_set(codebook)
    assert pairs.pairs == [(0, 2)]
    assert pairs.source_distances == [1]


def test_permuted_distance():
    codebook = cb.Codebook.from_bits([[0, 0, 0, 0], [1, 1, 0, 0], [1, 1, 1, 1]])
    assert cb.permuted_distance(codebook, [0, 1, 2]) == 0
    # swap rows 0 and 2: each contributes d(c0, c2) = 4
    assert cb.permuted_distance(codebook, [2, 1, 0]) == 8
    with pytest.raises(ShapeMismatchError):
        cb.permuted_distance(codebook, [0, 0, 1])


# ==================== Generation ====================

@pytest.mark.parametrize("n, rate, expected", [
    (12, 0.25, 8),
    (1, 0.1, 2),
    (16, 0.5, 256),
    (10, 0.1, 2),
])
def test_derive_m(n, rate, expected):
    assert cb.derive_m(n, rate) == expected


def test_derive_m_refuses_oversized_codebooks():
    # 2^1200 would overflow a float
    with pytest.raises(ResourceLimitError):
        cb.derive_m(2000, 0.6)


def test_default_epsilon():
    assert cb.default_epsilon(0.05) == pytest.approx(min(0.02, gv_distance(0.1) / 4))
    assert cb.default_epsilon(0.49) == pytest.approx(gv_distance(0.98) / 4)


def test_generate_rce_is_deterministic():
    first = cb.generate_rce(70, 9, seed=42)
    second = cb.generate_rce(70, 9, seed=42)
    other = cb.generate_rce(70, 9, seed=43)
    np.testing.assert_array_equal(first.words, second.words)
    assert not np.array_equal(first.words, other.words)
    assert first.ensemble == Ensemble.RCE
    assert first.bits.shape == (9, 70)


def test_generate_rce_size_cap():
    with pytest.raises(ResourceLimitError):
        cb.generate_rce(2 ** 14, 2 ** 13, seed=0)


@pytest.mark.slow
def test_generate_rce_pair_distances_are_binomial():
    n, m = 16, 4096
    codebook = cb.generate_rce(n, m, seed=2024)
    dist = cb.distance_matrix(codebook.words, codebook.words)
    pairs = dist[np.triu_indices(m, k=1)]
    observed = np.bincount(pairs, minlength=n + 1)
    expected = stats.binom.pmf(np.arange(n + 1), n, 0.5) * pairs.size
    # distances of distinct pairs are pairwise independent, so counts keep binomial variance
    _, p_value = stats.chisquare(observed, expected * observed.sum() / expected.sum())
    assert p_value > 1e-3


def test_generate_trc_respects_band():
    codebook = cb.generate_trc(64, 8, None, seed=5)
    assert codebook.ensemble == Ensemble.TRC
    assert cb.satisfies_trc(codebook, codebook.epsilon)
    low, high = cb.trc_band(64, 8, codebook.epsilon)
    d_min, d_max = cb.pairwise_distance_range(codebook)
    assert low < d_min and d_max < high


def test_generate_trc_rejects_high_rate():
    with pytest.raises(DomainError):
        cb.generate_trc(8, 16, 0.01, seed=0)


def test_generate_trc_budget_error(monkeypatch):
    monkeypatch.setattr(cb, "in_band", lambda distances, band: False)
    with pytest.raises(GenerationBudgetError) as info:
        cb.generate_trc(32, 4, None, seed=1, max_attempts=5)
    assert info.value.row_index == 1
    assert info.value.attempts == 5
    assert info.value.m == 4


def test_trc_band_requires_epsilon_below_design_distance():
    with pytest.raises(DomainError):
        cb.trc_band(16, 4, gv_distance(0.25))


# ==================== Text format ====================

def test_save_and_load(tmp_path):
    codebook = cb.generate_rce(16, 8, seed=1)
    path = tmp_path / "cb.txt"
    cb.save_codebook(codebook, path)
    lines = path.read_text().split("\n")
    assert lines[0] == "8 16"
    assert len(lines) == 10 and lines[-1] == ""
    assert all(len(line) == 16 and set(line) <= {"0", "1"} for line in lines[1:9])
    loaded = cb.load_codebook(path)
    np.testing.assert_array_equal(loaded.words, codebook.words)
    assert loaded.ensemble == Ensemble.EXPLICIT


@pytest.mark.parametrize("content", [
    "2 3\n010\n111",          # no trailing newline
    "2 3 1\n010\n111\n",      # bad header
    "2 3\n010\n11\n",         # short row
    "2 3\n010\n1x1\n",        # bad symbol
    "3 3\n010\n111\n",        # missing row
])
def test_load_rejects_malformed(tmp_path, content):
    path = tmp_path / "bad.txt"
    path.write_text(content)
    with pytest.raises(CodebookFormatError):
        cb.load_codebook(path)


def test_summarize_trc_codebook():
    codebook = cb.generate_trc(64, 8, None, seed=9)
    summary = cb.summarize(codebook)
    assert (summary.m, summary.n) == (8, 64)
    assert summary.in_trc_band is True
    assert summary.min_distance > summary.trc_band[0]
    assert len(summary.pair_set.pairs) == 2
