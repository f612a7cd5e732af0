"""Statistic and p-value computations for each SP 800-22 test.

Every function takes a 0/1 ``uint8`` array and returns ``(p_values, detail)``.
Length preconditions raise :class:`NotApplicable`; malformed parameters
raise :class:`~specrng.errors.InvalidParams`.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from ..errors import InvalidParams
from .gf2 import rank_of_rows, rank_probability
from .lfsr import berlekamp_massey
from .special import erfc, igamc, normal_cdf

ALPHA = 0.01


class NotApplicable(Exception):
    """Input does not meet a test's length or cycle-count requirement."""


def _clamp(p: float) -> float:
    return min(1.0, max(0.0, float(p)))


def _window_codes(bits: np.ndarray, m: int, wrap: bool) -> np.ndarray:
    """Integer value (MSB first) of every m-bit window, optionally wrapping around."""
    n = len(bits)
    src = np.concatenate([bits, bits[: m - 1]]) if wrap else bits
    count = n if wrap else n - m + 1
    codes = np.zeros(count, dtype=np.int64)
    for i in range(m):
        codes = (codes << 1) | src[i : i + count]
    return codes


def _template_bits(template) -> np.ndarray:
    if isinstance(template, str):
        if not template or set(template) - {"0", "1"}:
            raise InvalidParams(f"template must be a non-empty 0/1 string, got {template!r}")
        return np.frombuffer(template.encode(), dtype=np.uint8) - ord("0")
    arr = np.asarray(template, dtype=np.uint8)
    if arr.ndim != 1 or not arr.size or arr.max() > 1:
        raise InvalidParams("template must be a non-empty 0/1 sequence")
    return arr


def _code(bits: np.ndarray) -> int:
    return int("".join(map(str, bits.tolist())), 2)


# -- frequency family ------------------------------------------------------


def frequency(bits: np.ndarray):
    n = len(bits)
    s = 2 * int(bits.sum()) - n
    s_obs = abs(s) / math.sqrt(n)
    return [_clamp(erfc(s_obs / math.sqrt(2)))], {"n": n, "S_n": s, "s_obs": s_obs}


def block_frequency(bits: np.ndarray, block_length: int = 128):
    M = int(block_length)
    if M < 1:
        raise InvalidParams(f"block length must be >= 1, got {M}")
    N = len(bits) // M
    if N < 1:
        raise NotApplicable(f"need at least one block of {M} bits")
    props = bits[: N * M].reshape(N, M).mean(axis=1)
    chi2 = 4.0 * M * float(np.sum((props - 0.5) ** 2))
    return [_clamp(igamc(N / 2, chi2 / 2))], {"M": M, "N": N, "chi2": chi2}


def runs(bits: np.ndarray):
    n = len(bits)
    pi = float(bits.mean())
    tau = 2.0 / math.sqrt(n)
    if abs(pi - 0.5) >= tau:
        # frequency prerequisite failed; the standard reports p = 0
        return [0.0], {"pi": pi, "tau": tau, "prerequisite": "failed"}
    v_obs = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    num = abs(v_obs - 2.0 * n * pi * (1 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1 - pi)
    return [_clamp(erfc(num / den))], {"pi": pi, "V_obs": v_obs}


_LONGEST_RUN_TABLES = (
    # (min n, M, lowest class, highest class, class probabilities)
    (750_000, 10_000, 10, 16, (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    (6272, 128, 4, 9, (0.1174035788, 0.242955959, 0.249363483, 0.17517706, 0.102701071, 0.112398847)),
    (128, 8, 1, 4, (0.21484375, 0.3671875, 0.23046875, 0.1875)),
)


def _longest_runs(blocks: np.ndarray) -> np.ndarray:
    current = np.zeros(blocks.shape[0], dtype=np.int64)
    best = np.zeros_like(current)
    for col in blocks.T:
        current = (current + 1) * col
        np.maximum(best, current, out=best)
    return best


def longest_run(bits: np.ndarray):
    n = len(bits)
    for min_n, M, lo, hi, probs in _LONGEST_RUN_TABLES:
        if n >= min_n:
            break
    else:
        raise NotApplicable("longest-run test needs n >= 128")
    N = n // M
    longest = _longest_runs(bits[: N * M].reshape(N, M))
    nu = np.bincount(np.clip(longest, lo, hi) - lo, minlength=hi - lo + 1)
    expected = N * np.asarray(probs)
    chi2 = float(np.sum((nu - expected) ** 2 / expected))
    K = len(probs) - 1
    return [_clamp(igamc(K / 2, chi2 / 2))], {"M": M, "N": N, "nu": nu.tolist(), "chi2": chi2}


# -- structure ------------------------------------------------------------------


def binary_matrix_rank(bits: np.ndarray, rows: int = 32, cols: int = 32):
    size = rows * cols
    N = len(bits) // size
    if N < 1:
        raise NotApplicable(f"need at least {size} bits for one {rows}x{cols} matrix")
    mats = bits[: N * size].reshape(N, rows, cols)
    weights = 1 << np.arange(cols - 1, -1, -1, dtype=np.uint64)
    packed = (mats.astype(np.uint64) * weights).sum(axis=2)
    ranks = np.array([rank_of_rows([int(v) for v in rows_]) for rows_ in packed])
    full = min(rows, cols)
    f_full = int(np.sum(ranks == full))
    f_minus = int(np.sum(ranks == full - 1))
    p_full = rank_probability(full, rows, cols)
    p_minus = rank_probability(full - 1, rows, cols)
    p_rest = 1.0 - p_full - p_minus
    observed = np.array([f_full, f_minus, N - f_full - f_minus])
    expected = N * np.array([p_full, p_minus, p_rest])
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    return [_clamp(math.exp(-chi2 / 2))], {"N": N, "counts": observed.tolist(), "chi2": chi2}


def dft_spectral(bits: np.ndarray):
    n = len(bits)
    if n < 2:
        raise NotApplicable("spectral test needs n >= 2")
    x = 2.0 * bits - 1.0
    modulus = np.abs(np.fft.rfft(x))[: n // 2]
    threshold = math.sqrt(math.log(1 / 0.05) * n)
    n0 = 0.95 * n / 2.0
    n1 = int(np.count_nonzero(modulus < threshold))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4)
    return [_clamp(erfc(abs(d) / math.sqrt(2)))], {"T": threshold, "N0": n0, "N1": n1, "d": d}


# -- templates ------------------------------------------------------------------


def is_aperiodic(template: str) -> bool:
    """True if the template cannot overlap a shifted copy of itself."""
    m = len(template)
    return all(template[s:] != template[: m - s] for s in range(1, m))


@lru_cache(maxsize=None)
def aperiodic_templates(m: int) -> tuple[str, ...]:
    return tuple(t for t in (format(v, f"0{m}b") for v in range(2**m)) if is_aperiodic(t))


def _count_non_overlapping(codes: np.ndarray, target: int, m: int) -> int:
    count, next_free = 0, 0
    for pos in np.flatnonzero(codes == target):
        if pos >= next_free:
            count += 1
            next_free = pos + m
    return count


def non_overlapping_template(bits: np.ndarray, template="000000001", n_blocks: int = 8):
    """One p-value per template; ``template="aperiodic"`` runs the whole length-9 set."""
    if isinstance(template, str) and template == "aperiodic":
        templates = list(aperiodic_templates(9))
    elif isinstance(template, (list, tuple)) and template and not isinstance(template[0], int):
        templates = list(template)
    else:
        templates = [template]
    tbits = [_template_bits(t) for t in templates]
    m = len(tbits[0])
    if any(len(t) != m for t in tbits):
        raise InvalidParams("all templates must have the same length")
    if m < 2:
        raise InvalidParams("template length must be >= 2")
    N = int(n_blocks)
    M = len(bits) // N
    if M - m + 1 < 1:
        raise NotApplicable(f"blocks of {M} bits cannot hold a {m}-bit template")
    mu = (M - m + 1) / 2**m
    var = M * (1 / 2**m - (2 * m - 1) / 2 ** (2 * m))
    block_codes = [_window_codes(bits[j * M : (j + 1) * M], m, wrap=False) for j in range(N)]
    p_values, counts = [], []
    for tb in tbits:
        target = _code(tb)
        W = np.array([_count_non_overlapping(c, target, m) for c in block_codes])
        chi2 = float(np.sum((W - mu) ** 2 / var))
        p_values.append(_clamp(igamc(N / 2, chi2 / 2)))
        counts.append(W.tolist())
    detail = {"m": m, "M": M, "N": N, "mu": mu, "sigma2": var, "W": counts}
    if len(templates) == 1:
        detail["template"] = "".join(map(str, tbits[0].tolist()))
    else:
        detail["templates"] = len(templates)
    return p_values, detail


def _failure_table(tb: np.ndarray) -> list[int]:
    m = len(tb)
    fail = [0] * (m + 1)
    k = 0
    for i in range(1, m):
        while k and tb[i] != tb[k]:
            k = fail[k]
        if tb[i] == tb[k]:
            k += 1
        fail[i + 1] = k
    return fail


@lru_cache(maxsize=None)
def overlapping_probabilities(template: str, M: int, K: int = 5) -> tuple[float, ...]:
    """Exact P(W = 0..K-1) and P(W >= K) for overlapping matches in a random M-bit block.

    Dynamic programme over (KMP automaton state, capped match count).
    """
    tb = _template_bits(template).tolist()
    m = len(tb)
    fail = _failure_table(np.array(tb))

    def step(state: int, bit: int) -> int:
        while state and (state == m or tb[state] != bit):
            state = fail[state]
        return state + 1 if tb[state] == bit else 0

    trans = [[step(s, b) for b in (0, 1)] for s in range(m + 1)]
    dist = np.zeros((m + 1, K + 1))
    dist[0, 0] = 1.0
    for _ in range(M):
        new = np.zeros_like(dist)
        for s in range(m + 1):
            for b in (0, 1):
                t = trans[s][b]
                if t == m:
                    new[t, 1:] += 0.5 * dist[s, :-1]
                    new[t, K] += 0.5 * dist[s, K]
                else:
                    new[t] += 0.5 * dist[s]
        dist = new
    return tuple(float(v) for v in dist.sum(axis=0))


def overlapping_template(bits: np.ndarray, template="111111111", block_length: int = 1032):
    tb = _template_bits(template)
    m = len(tb)
    if m < 2:
        raise InvalidParams("template length must be >= 2")
    M = int(block_length)
    if M < m:
        raise InvalidParams(f"block length {M} shorter than template length {m}")
    N = len(bits) // M
    if N < 1:
        raise NotApplicable(f"need at least one block of {M} bits")
    K = 5
    target = _code(tb)
    W = np.array(
        [int(np.count_nonzero(_window_codes(bits[j * M : (j + 1) * M], m, False) == target)) for j in range(N)]
    )
    nu = np.bincount(np.minimum(W, K), minlength=K + 1)
    pi = np.array(overlapping_probabilities("".join(map(str, tb.tolist())), M, K))
    expected = N * pi
    chi2 = float(np.sum((nu - expected) ** 2 / expected))
    return [_clamp(igamc(K / 2, chi2 / 2))], {"m": m, "M": M, "N": N, "nu": nu.tolist(), "chi2": chi2}


# -- compression / complexity ---------------------------------------------------

_UNIVERSAL_THRESHOLDS = (
    (1_059_061_760, 16), (496_435_200, 15), (231_669_760, 14), (107_560_960, 13),
    (49_643_520, 12), (22_753_280, 11), (10_342_400, 10), (4_654_080, 9),
    (2_068_480, 8), (904_960, 7), (387_840, 6),
)
_UNIVERSAL_EXPECTED = {
    6: 5.2177052, 7: 6.1962507, 8: 7.1836656, 9: 8.1764248, 10: 9.1723243, 11: 10.170032,
    12: 11.168765, 13: 12.168070, 14: 13.167693, 15: 14.167488, 16: 15.167379,
}
_UNIVERSAL_VARIANCE = {
    6: 2.954, 7: 3.125, 8: 3.238, 9: 3.311, 10: 3.356, 11: 3.384,
    12: 3.401, 13: 3.410, 14: 3.416, 15: 3.419, 16: 3.421,
}
UNIVERSAL_MIN_BITS = 387_840


def universal(bits: np.ndarray, block_length: int | None = None):
    n = len(bits)
    if block_length is None:
        L = next((L for min_n, L in _UNIVERSAL_THRESHOLDS if n >= min_n), None)
        if L is None:
            raise NotApplicable(f"Maurer's test needs n >= {UNIVERSAL_MIN_BITS}")
    else:
        L = int(block_length)
        if L not in _UNIVERSAL_EXPECTED:
            raise InvalidParams(f"universal block length must be in 6..16, got {L}")
    Q = 10 * 2**L
    K = n // L - Q
    if K < 1:
        raise NotApplicable(f"L={L} needs more than {(Q + 1) * L} bits")
    total = Q + K
    values = _window_codes(bits[: total * L], L, wrap=False)[::L]
    # previous (1-based) occurrence index of the same value, 0 if none
    order = np.lexsort((np.arange(total), values))
    prev = np.zeros(total, dtype=np.int64)
    same = values[order[1:]] == values[order[:-1]]
    prev[order[1:][same]] = order[:-1][same] + 1
    idx = np.arange(Q + 1, total + 1)
    fn = float(np.sum(np.log2(idx - prev[Q:]))) / K
    c = 0.7 - 0.8 / L + (4 + 32 / L) * K ** (-3 / L) / 15
    sigma = c * math.sqrt(_UNIVERSAL_VARIANCE[L] / K)
    arg = abs(fn - _UNIVERSAL_EXPECTED[L]) / (math.sqrt(2) * sigma)
    return [_clamp(erfc(arg))], {"L": L, "Q": Q, "K": K, "fn": fn, "sigma": sigma}


_LC_PROBS = np.array([1 / 96, 1 / 32, 1 / 8, 1 / 2, 1 / 4, 1 / 16, 1 / 48])


def linear_complexity(bits: np.ndarray, block_length: int = 500):
    M = int(block_length)
    if M < 1:
        raise InvalidParams(f"block length must be >= 1, got {M}")
    N = len(bits) // M
    if N < 1:
        raise NotApplicable(f"need at least one block of {M} bits")
    blocks = bits[: N * M].reshape(N, M)
    sign = -1.0 if M % 2 else 1.0
    mu = M / 2 + (9 - sign) / 36 - (M / 3 + 2 / 9) * 2.0**-M
    L = np.array([berlekamp_massey(b) for b in blocks], dtype=float)
    T = sign * (L - mu) + 2 / 9
    edges = np.array([-2.5, -1.5, -0.5, 0.5, 1.5, 2.5])
    nu = np.bincount(np.searchsorted(edges, T, side="left"), minlength=7)
    expected = N * _LC_PROBS
    chi2 = float(np.sum((nu - expected) ** 2 / expected))
    return [_clamp(igamc(3, chi2 / 2))], {"M": M, "N": N, "nu": nu.tolist(), "chi2": chi2}


# -- pattern counts ---------------------------------------------------------------


def _psi2(bits: np.ndarray, m: int) -> float:
    if m <= 0:
        return 0.0
    n = len(bits)
    counts = np.bincount(_window_codes(bits, m, wrap=True), minlength=2**m).astype(np.float64)
    return 2**m / n * float(np.dot(counts, counts)) - n


def serial(bits: np.ndarray, pattern_length: int = 16):
    m = int(pattern_length)
    if m < 2:
        raise InvalidParams(f"serial pattern length must be >= 2, got {m}")
    if len(bits) < m:
        raise NotApplicable(f"serial test needs n >= m = {m}")
    psi = [_psi2(bits, m - i) for i in range(3)]
    d1 = psi[0] - psi[1]
    d2 = psi[0] - 2 * psi[1] + psi[2]
    p1 = igamc(2 ** (m - 2), d1 / 2)
    p2 = igamc(2 ** (m - 3), d2 / 2)
    return [_clamp(p1), _clamp(p2)], {"m": m, "psi2": psi, "del1": d1, "del2": d2}


def _phi(bits: np.ndarray, m: int) -> float:
    if m == 0:
        return 0.0
    n = len(bits)
    counts = np.bincount(_window_codes(bits, m, wrap=True), minlength=2**m)
    p = counts[counts > 0] / n
    return float(np.sum(p * np.log(p)))


def approximate_entropy(bits: np.ndarray, pattern_length: int = 10):
    m = int(pattern_length)
    if m < 1:
        raise InvalidParams(f"pattern length must be >= 1, got {m}")
    n = len(bits)
    if n < m + 1:
        raise NotApplicable(f"approximate entropy needs n > m = {m}")
    apen = _phi(bits, m) - _phi(bits, m + 1)
    chi2 = 2.0 * n * (math.log(2) - apen)
    return [_clamp(igamc(2 ** (m - 1), chi2 / 2))], {"m": m, "ApEn": apen, "chi2": chi2}


# -- random walks -------------------------------------------------------------------


def cumulative_sums(bits: np.ndarray, reverse: bool = False):
    n = len(bits)
    x = 2 * bits[::-1].astype(np.int64) - 1 if reverse else 2 * bits.astype(np.int64) - 1
    z = int(np.max(np.abs(np.cumsum(x))))
    r = n / z
    sq = math.sqrt(n)
    k1 = np.arange(math.ceil((-r + 1) / 4), math.floor((r - 1) / 4) + 1)
    k2 = np.arange(math.ceil((-r - 3) / 4), math.floor((r - 1) / 4) + 1)
    sum1 = np.sum(normal_cdf((4 * k1 + 1) * z / sq) - normal_cdf((4 * k1 - 1) * z / sq))
    sum2 = np.sum(normal_cdf((4 * k2 + 3) * z / sq) - normal_cdf((4 * k2 + 1) * z / sq))
    return [_clamp(1.0 - sum1 + sum2)], {"z": z, "mode": "backward" if reverse else "forward"}


def _walk(bits: np.ndarray):
    s = np.cumsum(2 * bits.astype(np.int64) - 1)
    zeros = s == 0
    J = int(zeros.sum()) + (0 if s[-1] == 0 else 1)
    return s, zeros, J


def _cycle_constraint(n: int) -> float:
    return max(0.005 * math.sqrt(n), 500.0)


def random_excursions(bits: np.ndarray):
    n = len(bits)
    s, zeros, J = _walk(bits)
    if J < _cycle_constraint(n):
        raise NotApplicable(f"only {J} cycles; need >= {_cycle_constraint(n):g}")
    cycle = np.cumsum(zeros) - zeros  # zeros strictly before each step
    p_values, nus = [], {}
    for x in (-4, -3, -2, -1, 1, 2, 3, 4):
        visits = np.bincount(cycle[s == x], minlength=J)[:J]
        nu = np.bincount(np.minimum(visits, 5), minlength=6)
        ax = abs(x)
        q = 1 - 1 / (2 * ax)
        pi = np.array([q] + [q ** (k - 1) / (4 * ax * ax) for k in range(1, 5)] + [q**4 / (2 * ax)])
        chi2 = float(np.sum((nu - J * pi) ** 2 / (J * pi)))
        p_values.append(_clamp(igamc(2.5, chi2 / 2)))
        nus[x] = nu.tolist()
    return p_values, {"J": J, "states": [-4, -3, -2, -1, 1, 2, 3, 4], "nu": nus}


def random_excursions_variant(bits: np.ndarray):
    n = len(bits)
    s, _, J = _walk(bits)
    if J < _cycle_constraint(n):
        raise NotApplicable(f"only {J} cycles; need >= {_cycle_constraint(n):g}")
    states = [x for x in range(-9, 10) if x]
    counts = np.bincount(s[(s >= -9) & (s <= 9)] + 9, minlength=19)
    p_values = []
    for x in states:
        xi = int(counts[x + 9])
        p_values.append(_clamp(erfc(abs(xi - J) / math.sqrt(2.0 * J * (4 * abs(x) - 2)))))
    return p_values, {"J": J, "states": states, "xi": [int(counts[x + 9]) for x in states]}
