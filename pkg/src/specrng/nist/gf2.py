"""Rank of binary matrices over GF(2)."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParams


def rows_to_ints(matrix) -> list[int]:
    """Pack each row of a 0/1 matrix into a Python int (first column = MSB)."""
    arr = np.asarray(matrix, dtype=np.uint8)
    if arr.ndim != 2:
        raise InvalidParams(f"expected a 2-D matrix, got shape {arr.shape}")
    return [int("".join("1" if b else "0" for b in row) or "0", 2) for row in arr]


def rank_of_rows(rows: list[int]) -> int:
    """Rank of row vectors given as ints, by forward elimination on leading bits."""
    pivots: dict[int, int] = {}
    for r in rows:
        while r:
            lead = r.bit_length() - 1
            p = pivots.get(lead)
            if p is None:
                pivots[lead] = r
                break
            r ^= p
    return len(pivots)


def gf2_rank(matrix) -> int:
    return rank_of_rows(rows_to_ints(matrix))


def rank_probability(r: int, rows: int = 32, cols: int = 32) -> float:
    """Probability that a uniformly random ``rows x cols`` binary matrix has rank ``r``."""
    if r < 0 or r > min(rows, cols):
        return 0.0
    product = 1.0
    for i in range(r):
        product *= (1 - 2.0 ** (i - cols)) * (1 - 2.0 ** (i - rows)) / (1 - 2.0 ** (i - r))
    return 2.0 ** (r * (rows + cols - r) - rows * cols) * product
