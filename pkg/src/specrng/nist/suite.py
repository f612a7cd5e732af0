"""Test kinds, results and the suite runner."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np

from ..bitstream import BitStream
from ..errors import EmptyInput, InputTooShort, InvalidParams
from . import battery
from .battery import ALPHA, NotApplicable

log = logging.getLogger(__name__)

MIN_SUITE_BITS = 100


class TestKind(enum.Enum):
    __test__ = False

    Frequency = "Frequency"
    BlockFrequency = "BlockFrequency"
    Runs = "Runs"
    LongestRun = "LongestRun"
    BinaryMatrixRank = "BinaryMatrixRank"
    DftSpectral = "DftSpectral"
    NonOverlappingTemplate = "NonOverlappingTemplate"
    OverlappingTemplate = "OverlappingTemplate"
    Universal = "Universal"
    LinearComplexity = "LinearComplexity"
    Serial = "Serial"
    ApproximateEntropy = "ApproximateEntropy"
    CusumForward = "CusumForward"
    CusumBackward = "CusumBackward"
    RandomExcursions = "RandomExcursions"
    RandomExcursionsVariant = "RandomExcursionsVariant"


# Declaration order above is the report order.
SUITE_ORDER: tuple[TestKind, ...] = tuple(TestKind)

DISPLAY_NAMES = {
    TestKind.Frequency: "Frequency",
    TestKind.BlockFrequency: "Block Frequency",
    TestKind.Runs: "Run",
    TestKind.LongestRun: "Run (Longest Run of Ones)",
    TestKind.BinaryMatrixRank: "Binary Matrix Rank",
    TestKind.DftSpectral: "Discrete Fourier Transform (Spectral)",
    TestKind.NonOverlappingTemplate: "Non-overlapping Template Matching",
    TestKind.OverlappingTemplate: "Overlapping Template Matching",
    TestKind.Universal: "Universal Statistical",
    TestKind.LinearComplexity: "Linear Complexity",
    TestKind.Serial: "Serial",
    TestKind.ApproximateEntropy: "Approximate Entropy",
    TestKind.CusumForward: "Cumulative Sums (Forward)",
    TestKind.CusumBackward: "Cumulative Sums (Backward)",
    TestKind.RandomExcursions: "Random Excursions",
    TestKind.RandomExcursionsVariant: "Random Excursions Variant",
}


class Verdict(enum.Enum):
    Pass = "Pass"
    Fail = "Fail"
    NotApplicable = "NotApplicable"


@dataclass(frozen=True)
class TestParams:
    """Per-test parameters; ``None`` fields take the kind's default."""

    __test__ = False

    block_length: Optional[int] = None
    pattern_length: Optional[int] = None
    template: Union[str, Sequence[str], None] = None


DEFAULT_PARAMS: dict[TestKind, TestParams] = {
    TestKind.BlockFrequency: TestParams(block_length=128),
    TestKind.NonOverlappingTemplate: TestParams(template="000000001"),
    TestKind.OverlappingTemplate: TestParams(block_length=1032, template="111111111"),
    TestKind.LinearComplexity: TestParams(block_length=500),
    TestKind.Serial: TestParams(pattern_length=16),
    TestKind.ApproximateEntropy: TestParams(pattern_length=10),
}


def resolve_params(kind: TestKind, params: Optional[TestParams]) -> TestParams:
    base = DEFAULT_PARAMS.get(kind, TestParams())
    if params is None:
        return base
    return replace(
        base,
        **{k: v for k, v in vars(params).items() if v is not None},
    )


@dataclass
class TestResult:
    __test__ = False

    kind: TestKind
    p_values: Optional[list[float]]
    verdict: Verdict
    params: dict[str, Any] = field(default_factory=dict)
    detail: dict[str, Any] = field(default_factory=dict)

    @property
    def p_value(self) -> Optional[float]:
        """Smallest reported p-value (the one that decides the verdict)."""
        return None if self.p_values is None else min(self.p_values)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "p_values": self.p_values,
            "verdict": self.verdict.value,
            "params": self.params,
            "detail": _jsonable(self.detail),
        }


def verdict_for(p_values: Optional[Sequence[float]], alpha: float = ALPHA) -> Verdict:
    if p_values is None:
        return Verdict.NotApplicable
    return Verdict.Pass if all(p >= alpha for p in p_values) else Verdict.Fail


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _as_bits(bits) -> np.ndarray:
    if isinstance(bits, BitStream):
        return bits.bits()
    if isinstance(bits, str):
        return BitStream.from_string(bits).bits()
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise InvalidParams("bit arrays may only hold 0 and 1")
    return arr


def _recommendations(kind: TestKind, n: int, p: TestParams) -> list[str]:
    """Advisory length/parameter guidance from SP 800-22; never blocks a run."""
    notes = []
    if kind in (TestKind.Frequency, TestKind.Runs, TestKind.CusumForward, TestKind.CusumBackward) and n < 100:
        notes.append("n < 100")
    if kind is TestKind.BlockFrequency:
        M = p.block_length
        if M < 20 or M <= 0.01 * n or n // M >= 100:
            notes.append("recommended: M >= 20, M > 0.01 n, N < 100")
    if kind is TestKind.BinaryMatrixRank and n < 38 * 1024:
        notes.append("recommended: n >= 38912")
    if kind is TestKind.OverlappingTemplate and n < 10**6:
        notes.append("recommended: n >= 10^6")
    if kind is TestKind.LinearComplexity and (not 500 <= p.block_length <= 5000 or n // p.block_length < 200):
        notes.append("recommended: 500 <= M <= 5000, N >= 200")
    if kind is TestKind.Serial and p.pattern_length >= int(math.log2(n)) - 2:
        notes.append("recommended: m < floor(log2 n) - 2")
    if kind is TestKind.ApproximateEntropy and p.pattern_length >= int(math.log2(n)) - 5:
        notes.append("recommended: m < floor(log2 n) - 5")
    return notes


def _dispatch(kind: TestKind, bits: np.ndarray, p: TestParams):
    if kind is TestKind.Frequency:
        return battery.frequency(bits)
    if kind is TestKind.BlockFrequency:
        return battery.block_frequency(bits, p.block_length)
    if kind is TestKind.Runs:
        return battery.runs(bits)
    if kind is TestKind.LongestRun:
        return battery.longest_run(bits)
    if kind is TestKind.BinaryMatrixRank:
        return battery.binary_matrix_rank(bits)
    if kind is TestKind.DftSpectral:
        return battery.dft_spectral(bits)
    if kind is TestKind.NonOverlappingTemplate:
        return battery.non_overlapping_template(bits, p.template)
    if kind is TestKind.OverlappingTemplate:
        return battery.overlapping_template(bits, p.template, p.block_length)
    if kind is TestKind.Universal:
        return battery.universal(bits, p.block_length)
    if kind is TestKind.LinearComplexity:
        return battery.linear_complexity(bits, p.block_length)
    if kind is TestKind.Serial:
        return battery.serial(bits, p.pattern_length)
    if kind is TestKind.ApproximateEntropy:
        return battery.approximate_entropy(bits, p.pattern_length)
    if kind is TestKind.CusumForward:
        return battery.cumulative_sums(bits, reverse=False)
    if kind is TestKind.CusumBackward:
        return battery.cumulative_sums(bits, reverse=True)
    if kind is TestKind.RandomExcursions:
        return battery.random_excursions(bits)
    if kind is TestKind.RandomExcursionsVariant:
        return battery.random_excursions_variant(bits)
    raise InvalidParams(f"unknown test kind {kind!r}")


def run_test(kind: TestKind, bits, params: Optional[TestParams] = None) -> TestResult:
    kind = TestKind(kind)
    arr = _as_bits(bits)
    if arr.size == 0:
        raise EmptyInput("cannot test an empty bit sequence")
    p = resolve_params(kind, params)
    used = {k: v for k, v in vars(p).items() if v is not None}
    try:
        p_values, detail = _dispatch(kind, arr, p)
    except NotApplicable as exc:
        return TestResult(kind, None, Verdict.NotApplicable, used, {"reason": str(exc), "n": int(arr.size)})
    notes = _recommendations(kind, int(arr.size), p)
    if notes:
        detail["warnings"] = notes
    return TestResult(kind, p_values, verdict_for(p_values), used, detail)


@dataclass
class SuiteConfig:
    params: Mapping[TestKind, TestParams] = field(default_factory=dict)
    kinds: Sequence[TestKind] = SUITE_ORDER


def run_suite(bits, config: Optional[SuiteConfig] = None) -> list[TestResult]:
    """Run every configured test in report order, isolating failures per test."""
    config = config or SuiteConfig()
    arr = _as_bits(bits)
    if arr.size < MIN_SUITE_BITS:
        raise InputTooShort(f"the suite needs at least {MIN_SUITE_BITS} bits, got {arr.size}")
    results = []
    for kind in SUITE_ORDER:
        if kind not in config.kinds:
            continue
        try:
            results.append(run_test(kind, arr, config.params.get(kind)))
        except Exception as exc:  # one broken test must not abort the suite
            log.exception("%s raised", kind.value)
            results.append(
                TestResult(kind, None, Verdict.NotApplicable, {}, {"error": f"{type(exc).__name__}: {exc}"})
            )
    return results


def any_failed(results: Sequence[TestResult]) -> bool:
    return any(r.verdict is Verdict.Fail for r in results)
