"""Special functions, GF(2) rank and Berlekamp-Massey."""

import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specrng.errors import DomainError
from specrng.nist import berlekamp_massey, erfc, gf2_rank, igamc
from specrng.nist.gf2 import rank_probability
from specrng.nist.special import normal_cdf

mpmath.mp.dps = 40


# -- erfc / igamc -------------------------------------------------------------------


def test_erfc_examples():
    assert erfc(0.0) == 1.0
    assert erfc(1.0) == pytest.approx(0.1572992071, abs=1e-9)


@settings(max_examples=300)
@given(st.floats(-10, 10))
def test_erfc_reflection_and_accuracy(x):
    assert erfc(x) + erfc(-x) == pytest.approx(2.0, abs=1e-12)
    assert abs(erfc(x) - float(mpmath.erfc(x))) <= 1e-10
    assert 0.0 <= erfc(x) <= 2.0


def test_erfc_rejects_nan():
    with pytest.raises(DomainError):
        erfc(float("nan"))


@settings(max_examples=100)
@given(st.floats(1e-3, 1e4))
def test_igamc_at_zero_is_one(a):
    assert igamc(a, 0.0) == 1.0


@settings(max_examples=200)
@given(st.floats(0, 100))
def test_igamc_half_integer_identity(x):
    assert igamc(0.5, x) == pytest.approx(erfc(math.sqrt(x)), abs=1e-10)


def test_igamc_oracle_value():
    oracle = float(mpmath.gammainc(1.5, 1.5, mpmath.inf, regularized=True))
    assert igamc(1.5, 1.5) == pytest.approx(oracle, abs=1e-12)
    assert oracle == pytest.approx(0.39162517627108895, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.5, 1e4), st.floats(0, 1e5))
def test_igamc_accuracy(a, x):
    oracle = float(mpmath.gammainc(a, x, mpmath.inf, regularized=True))
    assert abs(igamc(a, x) - oracle) <= 1e-10
    assert 0.0 <= igamc(a, x) <= 1.0


@settings(max_examples=60)
@given(st.integers(1, 20), st.floats(0, 50))
def test_igamc_integer_series(k, x):
    # Q(k, x) = e^-x * sum_{j<k} x^j / j!
    series = math.exp(-x) * sum(x**j / math.factorial(j) for j in range(k))
    assert igamc(k, x) == pytest.approx(series, abs=1e-10)


@pytest.mark.parametrize("a,x", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.1)])
def test_igamc_domain(a, x):
    with pytest.raises(DomainError):
        igamc(a, x)


def test_normal_cdf():
    np.testing.assert_allclose(normal_cdf(np.array([0.0, 1.0, -2.0])), [0.5, 0.8413447460685429, 0.022750131948179195])


# -- GF(2) rank ------------------------------------------------------------------------


def test_rank_examples():
    assert gf2_rank(np.eye(32, dtype=np.uint8)) == 32
    assert gf2_rank(np.zeros((32, 32), dtype=np.uint8)) == 0
    m = np.zeros((32, 32), dtype=np.uint8)
    m[3] = m[17] = np.random.default_rng(0).integers(0, 2, 32)
    m[3, 0] = m[17, 0] = 1
    assert gf2_rank(m) == 1


def _rank_oracle(m):
    """Rank as the log2 size of the row space, by enumeration (small matrices)."""
    rows = [int("".join(map(str, r)), 2) for r in m]
    span = {0}
    for r in rows:
        span |= {s ^ r for s in span}
    return int(math.log2(len(span)))


@settings(max_examples=200)
@given(st.integers(1, 8), st.integers(1, 12), st.data())
def test_rank_matches_span_enumeration(rows, cols, data):
    m = np.array(data.draw(st.lists(st.lists(st.integers(0, 1), min_size=cols, max_size=cols),
                                     min_size=rows, max_size=rows)), dtype=np.uint8)
    assert gf2_rank(m) == _rank_oracle(m)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_rank_invariant_under_row_operations(seed):
    rng = np.random.default_rng(seed)
    m = rng.integers(0, 2, (32, 32), dtype=np.uint8)
    r = gf2_rank(m)
    i, j = rng.choice(32, 2, replace=False)
    m2 = m.copy()
    m2[i] ^= m2[j]
    assert gf2_rank(m2) == r == gf2_rank(m.T)


def test_rank_probabilities():
    assert rank_probability(32) == pytest.approx(0.2887880950866, abs=1e-10)
    assert rank_probability(31) == pytest.approx(0.5775761901732, abs=1e-10)
    assert sum(rank_probability(r) for r in range(33)) == pytest.approx(1.0, abs=1e-12)


# -- Berlekamp-Massey -------------------------------------------------------------------


def lfsr_oracle(bits):
    """Shortest LFSR by exhaustive search over all feedback polynomials."""
    n = len(bits)
    for L in range(n + 1):
        for taps in itertools.product((0, 1), repeat=L):
            if all(bits[i] == sum(taps[j] * bits[i - 1 - j] for j in range(L)) % 2 for i in range(L, n)):
                return L
    raise AssertionError("unreachable")


def test_bm_examples():
    assert berlekamp_massey([0, 0, 0, 1]) == 4 == lfsr_oracle([0, 0, 0, 1])
    assert berlekamp_massey([0] * 20) == 0
    alt = [1, 0] * 5
    assert berlekamp_massey(alt) == 2 == lfsr_oracle(alt)
    assert berlekamp_massey([int(c) for c in "1101011110001"]) == 4


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=12))
def test_bm_matches_exhaustive_search(bits):
    assert berlekamp_massey(bits) == lfsr_oracle(bits)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_bm_recovers_generating_lfsr(L, seed):
    rng = np.random.default_rng(seed)
    taps = rng.integers(0, 2, L)
    taps[-1] = 1
    state = list(rng.integers(0, 2, L))
    state[0] = 1
    seq = list(state)
    while len(seq) < 4 * L + 10:
        seq.append(int(sum(t * seq[-1 - j] for j, t in enumerate(taps)) % 2))
    assert berlekamp_massey(seq) <= L
