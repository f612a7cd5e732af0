"""Spectrogram frame selection and xorshift seed extraction.

One output word is produced per frame: a ``c x k`` window at a random
position (clamped at the matrix edge), flattened row-major, and folded
into a 32-bit seed with::

    seed ^= t; seed ^= seed << 13; seed ^= seed >> 17; seed ^= seed << 5

where ``t`` is the IEEE-754 single-precision bit pattern of each pixel.
"""

from __future__ import annotations

import statistics
import struct
import time
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Sequence

import numpy as np

from .bitstream import BitStream
from .errors import DegenerateSource, EmptyFrame, InvalidParams, NonFiniteInput
from .spectrogram import Spectrogram

MASK32 = 0xFFFFFFFF
MAX_CONSECUTIVE_SKIPS = 1000

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_ROUND_CONSTANTS = [_U64((r * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF) for r in range(1, 5)]


def xorshift32(x: int) -> int:
    """One (13, 17, 5) xorshift step on a 32-bit word."""
    x ^= (x << 13) & MASK32
    x ^= x >> 17
    x ^= (x << 5) & MASK32
    return x


def pixel_word(magnitude: float) -> int:
    """IEEE-754 binary32 bit pattern of a nonnegative magnitude."""
    value = float(magnitude)
    if not np.isfinite(value):
        raise NonFiniteInput(f"pixel magnitude must be finite, got {magnitude!r}")
    if value < 0:
        raise InvalidParams(f"pixel magnitude must be >= 0, got {magnitude!r}")
    try:
        packed = struct.pack("<f", value + 0.0)  # + 0.0 folds -0.0 onto 0.0
    except OverflowError:
        raise NonFiniteInput(f"{magnitude!r} overflows single precision") from None
    return struct.unpack("<I", packed)[0]


def pixel_words(d: Spectrogram) -> np.ndarray:
    """Vectorised :func:`pixel_word` over a whole spectrogram (uint32 matrix)."""
    mags = np.asarray(d.magnitudes if isinstance(d, Spectrogram) else d, dtype=np.float64)
    with np.errstate(over="ignore"):
        single = (mags + 0.0).astype(np.float32)
    if not np.all(np.isfinite(single)):
        raise NonFiniteInput("spectrogram has values that are not finite in single precision")
    if np.any(single < 0):
        raise InvalidParams("spectrogram has negative magnitudes")
    return single.view(np.uint32)


@dataclass(frozen=True)
class FrameSize:
    c: int
    k: int

    def __post_init__(self):
        if int(self.c) < 1 or int(self.k) < 1:
            raise InvalidParams(f"frame size must have c >= 1 and k >= 1, got {self.c}x{self.k}")


@dataclass(frozen=True, eq=False)
class FrameSelection:
    x_start: int
    y_start: int
    x_end: int
    y_end: int
    pixels: np.ndarray  # uint32, row-major

    @property
    def area(self) -> int:
        return (self.x_end - self.x_start) * (self.y_end - self.y_start)


# -- position generator -----------------------------------------------------


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finaliser, elementwise on uint64 arrays."""
    z = np.asarray(z, dtype=_U64)
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


def derive_seed(*parts: int) -> int:
    """Hash a tuple of integers into a 64-bit seed."""
    h = 0x6A09E667F3BCC909
    for p in parts:
        z = (h ^ (int(p) & 0xFFFFFFFFFFFFFFFF)) + 0x9E3779B97F4A7C15 & 0xFFFFFFFFFFFFFFFF
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & 0xFFFFFFFFFFFFFFFF
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB & 0xFFFFFFFFFFFFFFFF
        h = z ^ (z >> 31)
    return h


def _feistel_permute(idx: np.ndarray, domain: int, key: np.ndarray) -> np.ndarray:
    """Keyed bijection on ``range(domain)`` (balanced Feistel + cycle walking).

    ``key`` holds one 64-bit key per element, so indices from different
    epochs can be permuted in one call.
    """
    half = max(1, (int(domain - 1).bit_length() + 1) // 2)
    mask = _U64((1 << half) - 1)
    shift = _U64(half)
    x = idx.astype(_U64)
    pending = np.ones(x.shape, dtype=bool)
    out = np.empty_like(x)
    while pending.any():
        v, kk = x[pending], key[pending]
        left, right = v >> shift, v & mask
        for rc in _ROUND_CONSTANTS:
            f = _mix64(right ^ _mix64(kk + rc)) & mask
            left, right = right, left ^ f
        v = (left << shift) | right
        done = v < _U64(domain)
        where = np.flatnonzero(pending)
        out[where[done]] = v[done]
        x[where[~done]] = v[~done]
        pending[where[done]] = False
    return out


@dataclass
class SelectorState:
    """Counter-based frame-position generator.

    Draw ``i`` depends only on ``(seed, i)``, so positions replay exactly
    and batches can be evaluated in any grouping.

    ``mode="shuffle"`` (default) visits the ``m*n`` positions in a keyed
    random order, re-keyed every ``m*n`` draws: each draw is uniform over
    the grid, but no position repeats within an epoch. ``mode="iid"``
    draws every position independently, which repeats windows (and hence
    output words) at the birthday rate.
    """

    seed: int
    counter: int = 0
    mode: Literal["shuffle", "iid"] = "shuffle"

    def __post_init__(self):
        self.seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF
        if self.mode not in ("shuffle", "iid"):
            raise InvalidParams(f"unknown selector mode {self.mode!r}")

    def positions_at(self, counters: np.ndarray, m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        counters = np.asarray(counters, dtype=_U64)
        seed = _U64(self.seed)
        if self.mode == "iid":
            h = _mix64(seed + (counters + _U64(1)) * _GOLDEN)
            x = ((h >> _U64(32)) * _U64(m)) >> _U64(32)
            y = ((h & _U64(MASK32)) * _U64(n)) >> _U64(32)
            return x.astype(np.int64), y.astype(np.int64)
        domain = m * n
        epoch = counters // _U64(domain)
        keys = _mix64(seed ^ _mix64(epoch + _GOLDEN))
        flat = _feistel_permute(counters % _U64(domain), domain, keys).astype(np.int64)
        return flat // n, flat % n

    def next_positions(self, count: int, m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        counters = np.arange(self.counter, self.counter + count, dtype=_U64)
        self.counter += count
        return self.positions_at(counters, m, n)


# -- Algorithm ----------------------------------------------------------------


def select_frame(d: Spectrogram, size: FrameSize, sel: SelectorState) -> FrameSelection:
    xs, ys = sel.next_positions(1, d.m, d.n)
    x0, y0 = int(xs[0]), int(ys[0])
    x1, y1 = min(x0 + size.c, d.m), min(y0 + size.k, d.n)
    window = pixel_words(Spectrogram(d.magnitudes[x0:x1, y0:y1]))
    return FrameSelection(x0, y0, x1, y1, window.ravel())


def extract_seed(frame: FrameSelection | Sequence[int]) -> int:
    pixels = frame.pixels if isinstance(frame, FrameSelection) else frame
    if len(pixels) == 0:
        raise EmptyFrame("cannot extract a seed from an empty frame")
    seed = 0
    for t in pixels:
        seed ^= int(t)
        seed ^= (seed << 13) & MASK32
        seed ^= seed >> 17
        seed ^= (seed << 5) & MASK32
    return seed


def extract_seeds(
    words: np.ndarray, xs: np.ndarray, ys: np.ndarray, size: FrameSize
) -> np.ndarray:
    """Seeds for many windows at once; equal to :func:`extract_seed` per window."""
    m, n = words.shape
    seeds = np.zeros(len(xs), dtype=np.uint32)
    s13, s17, s5 = np.uint32(13), np.uint32(17), np.uint32(5)
    for i in range(size.c):
        rows = xs + i
        row_ok = rows < m
        rows = np.minimum(rows, m - 1)
        for j in range(size.k):
            cols = ys + j
            ok = row_ok & (cols < n)
            s = seeds ^ words[rows, np.minimum(cols, n - 1)]
            s ^= s << s13
            s ^= s >> s17
            s ^= s << s5
            if ok.all():
                seeds = s
            else:
                seeds = np.where(ok, s, seeds)
    return seeds


def _nonzero_windows(words: np.ndarray, xs, ys, size: FrameSize) -> np.ndarray:
    """True where the clamped window holds at least one nonzero word."""
    m, n = words.shape
    table = np.zeros((m + 1, n + 1), dtype=np.int64)
    table[1:, 1:] = np.cumsum(np.cumsum(words != 0, axis=0), axis=1)
    x1, y1 = np.minimum(xs + size.c, m), np.minimum(ys + size.k, n)
    total = table[x1, y1] - table[xs, y1] - table[x1, ys] + table[xs, ys]
    return total > 0


class Generation(NamedTuple):
    words: np.ndarray  # uint32 seeds in output order
    skipped: int  # all-zero frames passed over
    draws: int  # positions consumed from the selector


def generate_words(
    d: Spectrogram, size: FrameSize, n_words: int, sel: SelectorState
) -> Generation:
    """Collect ``n_words`` seeds, skipping windows made only of zero words."""
    words = pixel_words(d)
    out: list[np.ndarray] = []
    have = skipped = draws = 0
    run = 0  # consecutive skips carried across batches
    while have < n_words:
        need = n_words - have
        batch = need + need // 8 + 64
        xs, ys = sel.next_positions(batch, d.m, d.n)
        ok = _nonzero_windows(words, xs, ys, size)
        accepted = np.flatnonzero(ok)
        prev = np.concatenate(([-1 - run], accepted[:-1]))
        gaps = accepted - prev - 1
        take = accepted[:need]
        if len(take) and gaps[: len(take)].max() >= MAX_CONSECUTIVE_SKIPS:
            raise DegenerateSource(
                f"{MAX_CONSECUTIVE_SKIPS} consecutive all-zero frames: degenerate source"
            )
        if len(take) < need:
            run = run + batch if not len(accepted) else batch - 1 - int(accepted[-1])
            if run >= MAX_CONSECUTIVE_SKIPS:
                raise DegenerateSource(
                    f"{MAX_CONSECUTIVE_SKIPS} consecutive all-zero frames: degenerate source"
                )
            used = batch
        else:
            used = int(take[-1]) + 1
            run = 0
            # return unused draws so the counter reflects what was consumed
            sel.counter -= batch - used
        out.append(extract_seeds(words, xs[take], ys[take], size))
        have += len(take)
        skipped += used - len(take)
        draws += used
    seeds = np.concatenate(out) if out else np.zeros(0, dtype=np.uint32)
    return Generation(seeds, skipped, draws)


def generate_bits(d: Spectrogram, size: FrameSize, n_bits: int, sel: SelectorState) -> BitStream:
    if int(n_bits) < 1:
        raise InvalidParams(f"n_bits must be >= 1, got {n_bits}")
    gen = generate_words(d, size, -(-int(n_bits) // 32), sel)
    return BitStream.from_words(gen.words, int(n_bits))


@dataclass
class BenchResult:
    n_bits: int
    median_ms: float
    bits_per_second: float
    runs_ms: list[float] = field(default_factory=list)


def bench_latency(
    d: Spectrogram,
    size: FrameSize,
    n_bits: int,
    *,
    runs: int = 5,
    warmup: int = 1,
    sel_seed: int = 0,
) -> BenchResult:
    """Median wall-clock time of :func:`generate_bits` over ``runs`` runs."""
    if int(n_bits) < 1:
        raise InvalidParams(f"n_bits must be >= 1, got {n_bits}")
    for _ in range(warmup):
        generate_bits(d, size, n_bits, SelectorState(sel_seed))
    timings = []
    for r in range(runs):
        sel = SelectorState(derive_seed(sel_seed, r))
        t0 = time.perf_counter()
        generate_bits(d, size, n_bits, sel)
        timings.append((time.perf_counter() - t0) * 1e3)
    median = statistics.median(timings)
    return BenchResult(int(n_bits), median, n_bits / (median / 1e3), timings)
