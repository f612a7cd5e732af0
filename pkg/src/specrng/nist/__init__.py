"""SP 800-22 statistical test battery."""

from .gf2 import gf2_rank
from .lfsr import berlekamp_massey
from .special import erfc, igamc
from .suite import (
    SUITE_ORDER,
    SuiteConfig,
    TestKind,
    TestParams,
    TestResult,
    Verdict,
    run_suite,
    run_test,
)

__all__ = [
    "SUITE_ORDER",
    "SuiteConfig",
    "TestKind",
    "TestParams",
    "TestResult",
    "Verdict",
    "berlekamp_massey",
    "erfc",
    "gf2_rank",
    "igamc",
    "run_suite",
    "run_test",
]
