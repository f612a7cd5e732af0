"""Special functions needed for the test p-values."""

import math

import numpy as np
from scipy.special import gammaincc

from ..errors import DomainError


def erfc(x: float) -> float:
    """Complementary error function."""
    x = float(x)
    if math.isnan(x):
        raise DomainError("erfc of NaN")
    return math.erfc(x)


def igamc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma function Q(a, x)."""
    a, x = float(a), float(x)
    if not a > 0 or math.isinf(a):
        raise DomainError(f"igamc requires finite a > 0, got a={a}")
    if not x >= 0:
        raise DomainError(f"igamc requires x >= 0, got x={x}")
    if math.isinf(x):
        return 0.0
    return float(gammaincc(a, x))


def normal_cdf(x):
    """Standard normal CDF; accepts scalars or arrays."""
    return 0.5 * np.vectorize(math.erfc, otypes=[float])(-np.asarray(x, dtype=float) / math.sqrt(2.0))
