"""Shannon entropy of generator output and the (c, k) frame-size sweep."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .core import FrameSize, SelectorState, derive_seed, generate_bits
from .errors import DegenerateSource, EmptyInput, InvalidParams, IoError
from .spectrogram import Spectrogram

CSV_HEADER = ["c", "k", "entropy_bits_per_byte", "flagged"]


def shannon_entropy(data) -> float:
    """Empirical byte entropy in bits per byte, in [0, 8]."""
    arr = np.frombuffer(bytes(data), dtype=np.uint8) if not isinstance(data, np.ndarray) else data
    if arr.size == 0:
        raise EmptyInput("entropy of an empty byte sequence is undefined")
    counts = np.bincount(arr.astype(np.uint8), minlength=256)
    p = counts[counts > 0] / arr.size
    return float(max(0.0, -np.sum(p * np.log2(p))))


def bit_entropy(data) -> float:
    """Binary entropy of the ones-proportion, in bits per bit."""
    arr = np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))
    if arr.size == 0:
        raise EmptyInput("entropy of an empty byte sequence is undefined")
    p = arr.mean()
    if p in (0.0, 1.0):
        return 0.0
    return float(-(p * math.log2(p) + (1 - p) * math.log2(1 - p)))


@dataclass
class EntropyGrid:
    c_values: list[int]
    k_values: list[int]
    entropy_bits_per_byte: np.ndarray  # [c][k]
    entropy_bits_per_bit: np.ndarray
    flagged: np.ndarray  # True where the cell hit DegenerateSource

    def rows(self):
        for i, c in enumerate(self.c_values):
            for j, k in enumerate(self.k_values):
                yield c, k, float(self.entropy_bits_per_byte[i, j]), bool(self.flagged[i, j]), float(
                    self.entropy_bits_per_bit[i, j]
                )

    def unflagged(self) -> np.ndarray:
        return self.entropy_bits_per_byte[~self.flagged]

    def coefficient_of_variation(self) -> float:
        vals = self.unflagged()
        if vals.size == 0 or vals.mean() == 0:
            return float("nan")
        return float(vals.std() / vals.mean())

    def argmax(self) -> tuple[int, int]:
        masked = np.where(self.flagged, -np.inf, self.entropy_bits_per_byte)
        i, j = np.unravel_index(np.argmax(masked), masked.shape)
        return self.c_values[i], self.k_values[j]

    def argmin(self) -> tuple[int, int]:
        masked = np.where(self.flagged, np.inf, self.entropy_bits_per_byte)
        i, j = np.unravel_index(np.argmin(masked), masked.shape)
        return self.c_values[i], self.k_values[j]


def cell_seed(sel_seed: int, c: int, k: int) -> int:
    return derive_seed(sel_seed, c, k)


def entropy_sweep(
    d: Spectrogram,
    c_range: Sequence[int],
    k_range: Sequence[int],
    bytes_per_cell: int = 4096,
    sel_seed: int = 0,
) -> EntropyGrid:
    c_values, k_values = sorted(set(map(int, c_range))), sorted(set(map(int, k_range)))
    if not c_values or not k_values:
        raise InvalidParams("c and k ranges must be non-empty")
    if bytes_per_cell < 256:
        raise InvalidParams(f"bytes_per_cell must be >= 256, got {bytes_per_cell}")
    shape = (len(c_values), len(k_values))
    byte_h = np.zeros(shape)
    bit_h = np.zeros(shape)
    flagged = np.zeros(shape, dtype=bool)
    for i, c in enumerate(c_values):
        for j, k in enumerate(k_values):
            sel = SelectorState(cell_seed(sel_seed, c, k))
            try:
                bs = generate_bits(d, FrameSize(c, k), 8 * bytes_per_cell, sel)
            except DegenerateSource:
                flagged[i, j] = True
                continue
            byte_h[i, j] = shannon_entropy(bs.data)
            bit_h[i, j] = bit_entropy(bs.data)
    return EntropyGrid(c_values, k_values, byte_h, bit_h, flagged)


def parse_range(text: str) -> list[int]:
    """``"2..40"`` -> [2, ..., 40]; ``"4,8,16"`` -> [4, 8, 16]; ``"7"`` -> [7]."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = (int(v) for v in part.split(".."))
            if hi < lo:
                raise InvalidParams(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise InvalidParams(f"no values in range {text!r}")
    return out


def write_csv(grid: EntropyGrid, path, *, with_bit_entropy: bool = False) -> None:
    header = CSV_HEADER + (["entropy_bits_per_bit"] if with_bit_entropy else [])
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for c, k, h, flag, hb in grid.rows():
                row = [c, k, f"{h:.6f}", int(flag)]
                if with_bit_entropy:
                    row.append(f"{hb:.6f}")
                writer.writerow(row)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def render_heatmap(grid: EntropyGrid, path, scale: int = 8) -> None:
    """Grayscale heatmap (rows = c, columns = k), min-max normalized over unflagged cells."""
    vals = grid.entropy_bits_per_byte.copy()
    good = vals[~grid.flagged]
    lo, hi = (float(good.min()), float(good.max())) if good.size else (0.0, 0.0)
    img = np.zeros(vals.shape, dtype=np.uint8)
    if hi > lo:
        img = np.rint(255 * np.clip((vals - lo) / (hi - lo), 0, 1)).astype(np.uint8)
    img[grid.flagged] = 0
    img = np.kron(img, np.ones((scale, scale), dtype=np.uint8))
    try:
        Image.fromarray(img, mode="L").save(Path(path), format="PNG")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
