"""Magnitude spectrograms: STFT, area-weighted resizing and file I/O."""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, EmptyImage, InvalidParams, IoError, TooFewSamples
from .waveform import BasebandFrame

SPG_MAGIC = b"SPG1"
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Nonnegative magnitude matrix, rows = frequency bins, columns = time."""

    magnitudes: np.ndarray

    def __post_init__(self):
        mags = np.asarray(self.magnitudes, dtype=np.float64)
        if mags.ndim != 2 or mags.shape[0] < 1 or mags.shape[1] < 1:
            raise InvalidParams(f"spectrogram must be a non-empty 2-D matrix, got shape {mags.shape}")
        if not np.all(np.isfinite(mags)):
            raise InvalidParams("spectrogram contains non-finite values")
        if np.any(mags < 0):
            raise InvalidParams("spectrogram contains negative values")
        object.__setattr__(self, "magnitudes", mags)

    @property
    def m(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def n(self) -> int:
        return self.magnitudes.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.magnitudes.shape


@dataclass(frozen=True)
class StftParams:
    fft_length: int = 4096
    hop: Optional[int] = None  # None -> fft_length (no overlap)
    window: Literal["rectangular", "hann"] = "hann"
    output_rows: Optional[int] = 256  # None keeps the native size
    output_cols: Optional[int] = 256

    @classmethod
    def small(cls) -> "StftParams":
        return cls(fft_length=256, hop=64)

    @property
    def hop_length(self) -> int:
        return self.fft_length if self.hop is None else self.hop

    def validate(self) -> None:
        L = self.fft_length
        if not isinstance(L, (int, np.integer)) or L < 1 or L & (L - 1):
            raise InvalidParams(f"fft_length must be a positive power of two, got {L!r}")
        if not 1 <= self.hop_length <= L:
            raise InvalidParams(f"hop must lie in [1, fft_length], got {self.hop_length}")
        if self.window not in ("rectangular", "hann"):
            raise InvalidParams(f"unknown window {self.window!r}")
        if self.output_rows is not None and not 1 <= self.output_rows <= L:
            raise InvalidParams("output_rows must lie in [1, fft_length]")
        if self.output_cols is not None and self.output_cols < 1:
            raise InvalidParams("output_cols must be positive")


def _window(kind: str, length: int) -> np.ndarray:
    if kind == "rectangular":
        return np.ones(length)
    # periodic Hann
    return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(length) / length)


def stft_power(samples: np.ndarray, p: StftParams) -> np.ndarray:
    """|X[f, t]|^2 with frequency rows in ascending order (DC centred)."""
    p.validate()
    x = np.asarray(samples)
    L, hop = p.fft_length, p.hop_length
    if len(x) < L:
        raise TooFewSamples(f"need at least {L} samples for one FFT window, got {len(x)}")
    n_cols = (len(x) - L) // hop + 1
    segments = np.lib.stride_tricks.sliding_window_view(x, L)[::hop][:n_cols]
    spec = np.fft.fft(segments * _window(p.window, L), axis=1)
    spec = np.fft.fftshift(spec, axes=1)
    return (spec.real**2 + spec.imag**2).T


def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic matrix averaging n_in cells into n_out equal intervals."""
    edges = np.arange(n_out + 1) * (n_in / n_out)
    lo, hi = edges[:-1, None], edges[1:, None]
    cells = np.arange(n_in)[None, :]
    overlap = np.clip(np.minimum(hi, cells + 1) - np.maximum(lo, cells), 0.0, None)
    return overlap / (n_in / n_out)


def block_resize(matrix: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Area-weighted block average of ``matrix`` onto a ``rows x cols`` grid.

    Every output cell is the mean of the input over an equal share of the
    input extent (fractional cells weighted by overlap), so
    ``out.sum() * (m * n) / (rows * cols) == matrix.sum()``.
    """
    a = np.asarray(matrix, dtype=np.float64)
    m, n = a.shape
    if (rows, cols) == (m, n):
        return a.copy()
    return _area_weights(m, rows) @ a @ _area_weights(n, cols).T


def compute_spectrogram(frame: BasebandFrame, p: StftParams = StftParams()) -> Spectrogram:
    """STFT magnitude of ``frame`` resized to ``p.output_rows x p.output_cols``.

    Resizing averages power and takes the square root afterwards, which
    keeps the spectrogram's energy unchanged.
    """
    samples = frame.samples if isinstance(frame, BasebandFrame) else np.asarray(frame)
    power = stft_power(samples, p)
    rows = p.output_rows or power.shape[0]
    cols = p.output_cols or power.shape[1]
    power = block_resize(power, rows, cols)
    return Spectrogram(np.sqrt(np.clip(power, 0.0, None)))


def load_spectrogram_png(path) -> Spectrogram:
    """Read a PNG as luminance in [0, 1] (0.299 R + 0.587 G + 0.114 B)."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        img = Image.open(io.BytesIO(data))
        if img.format != "PNG":
            raise DecodeError(f"{path} is not a PNG (detected {img.format})")
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    if img.width == 0 or img.height == 0:
        raise EmptyImage(f"{path} has a zero dimension")

    if img.mode in ("I;16", "I;16B", "I;16L", "I"):
        # 16-bit grayscale
        return Spectrogram(np.asarray(img, dtype=np.float64) / 65535.0)
    if img.mode in ("1", "L", "LA"):
        return Spectrogram(np.asarray(img.convert("L"), dtype=np.float64) / 255.0)
    rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    return Spectrogram(np.clip(rgb @ _LUMA / 255.0, 0.0, 1.0))


def to_gray8(s: Spectrogram) -> np.ndarray:
    """Min-max normalize to uint8; a constant matrix maps to all zeros."""
    mags = s.magnitudes
    lo, hi = float(mags.min()), float(mags.max())
    if hi == lo:
        return np.zeros(mags.shape, dtype=np.uint8)
    return np.rint(255.0 * (mags - lo) / (hi - lo)).astype(np.uint8)


def save_spectrogram_png(s: Spectrogram, path) -> None:
    try:
        Image.fromarray(to_gray8(s), mode="L").save(Path(path), format="PNG")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def save_spectrogram_raw(s: Spectrogram, path) -> None:
    """SPG1 format: magic, u32 m, u32 n (LE), then m*n LE float32 row-major."""
    header = SPG_MAGIC + struct.pack("<II", s.m, s.n)
    try:
        Path(path).write_bytes(header + s.magnitudes.astype("<f4").tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_spectrogram_raw(path) -> Spectrogram:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(raw) < 12 or raw[:4] != SPG_MAGIC:
        raise DecodeError(f"{path}: missing SPG1 header")
    m, n = struct.unpack("<II", raw[4:12])
    if m == 0 or n == 0:
        raise EmptyImage(f"{path}: zero dimension {m}x{n}")
    if len(raw) != 12 + 4 * m * n:
        raise DecodeError(f"{path}: expected {12 + 4 * m * n} bytes, found {len(raw)}")
    mags = np.frombuffer(raw, dtype="<f4", offset=12).reshape(m, n)
    return Spectrogram(mags.astype(np.float64))


def load_spectrogram(path) -> Spectrogram:
    """Dispatch on content: SPG1 raw matrices or PNG images."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            head = fh.read(4)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if head == SPG_MAGIC:
        return load_spectrogram_raw(path)
    return load_spectrogram_png(path)
