"""Linear complexity via Berlekamp-Massey over GF(2)."""

from __future__ import annotations


def berlekamp_massey(bits) -> int:
    """Length of the shortest LFSR that generates ``bits``.

    Polynomials are held as Python ints (bit j = coefficient of x^j) and the
    discrepancy is the parity of ``C & window``, where ``window`` keeps the
    most recent bits in reverse order.
    """
    c = b = 1
    L = 0
    m = -1
    window = 0
    for N, bit in enumerate(bits):
        window = (window << 1) | int(bit)
        if (c & window).bit_count() & 1:
            t = c
            c ^= b << (N - m)
            if 2 * L <= N:
                L, m, b = N + 1 - L, N, t
    return L
