"""Packed bit streams and their on-disk formats.

Binary files hold the packed bytes (MSB first) and carry a one-line
sidecar ``<file>.hdr`` reading ``bits=<n>``. The ASCII form is one
``0``/``1`` character per bit, as expected by external test suites.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DecodeError, InvalidParams, IoError


@dataclass(frozen=True, eq=False)
class BitStream:
    data: bytes
    bit_length: int

    def __post_init__(self):
        if self.bit_length < 0:
            raise InvalidParams("bit_length must be >= 0")
        if len(self.data) != -(-self.bit_length // 8):
            raise InvalidParams(
                f"{len(self.data)} bytes cannot hold exactly {self.bit_length} bits"
            )
        pad = 8 * len(self.data) - self.bit_length
        if pad and self.data[-1] & ((1 << pad) - 1):
            raise InvalidParams("trailing pad bits must be zero")

    @classmethod
    def from_bits(cls, bits) -> "BitStream":
        arr = np.asarray(bits, dtype=np.uint8).ravel()
        if arr.size and arr.max() > 1:
            raise InvalidParams("bits must be 0 or 1")
        return cls(np.packbits(arr).tobytes(), int(arr.size))

    @classmethod
    def from_string(cls, text: str) -> "BitStream":
        digits = "".join(text.split())
        if set(digits) - {"0", "1"}:
            raise InvalidParams("bit strings may only contain '0' and '1'")
        return cls.from_bits(np.frombuffer(digits.encode("ascii"), dtype=np.uint8) - ord("0"))

    @classmethod
    def from_words(cls, words: np.ndarray, n_bits: int) -> "BitStream":
        """Concatenate 32-bit words MSB first and truncate to ``n_bits``."""
        raw = np.asarray(words, dtype=">u4").view(np.uint8)
        if n_bits > 8 * raw.size:
            raise InvalidParams(f"{raw.size // 4} words cannot supply {n_bits} bits")
        return cls.from_bits(np.unpackbits(raw)[:n_bits])

    def bits(self) -> np.ndarray:
        return np.unpackbits(np.frombuffer(self.data, dtype=np.uint8))[: self.bit_length]

    def to_string(self) -> str:
        return (self.bits() + ord("0")).tobytes().decode("ascii")

    def __len__(self) -> int:
        return self.bit_length

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitStream):
            return NotImplemented
        return self.bit_length == other.bit_length and self.data == other.data

    def __hash__(self) -> int:
        return hash((self.data, self.bit_length))


def header_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".hdr")


def write_bitstream(bs: BitStream, path) -> None:
    path = Path(path)
    try:
        path.write_bytes(bs.data)
        header_path(path).write_text(f"bits={bs.bit_length}\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_ascii(bs: BitStream, path) -> None:
    try:
        Path(path).write_text(bs.to_string() + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_bitstream(path) -> BitStream:
    """Read a packed file (bit count from its sidecar, else 8 x size) or ASCII bits."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    hdr = header_path(path)
    if hdr.exists():
        try:
            key, _, value = hdr.read_text().strip().partition("=")
            if key != "bits":
                raise ValueError(key)
            n_bits = int(value)
        except (OSError, ValueError) as exc:
            raise DecodeError(f"{hdr}: expected a single 'bits=<n>' line") from exc
        if n_bits > 8 * len(raw) or len(raw) != -(-n_bits // 8):
            raise DecodeError(f"{path}: {len(raw)} bytes do not match bits={n_bits}")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:n_bits]
        return BitStream.from_bits(bits)

    stripped = b"".join(raw.split())
    if stripped and not stripped.strip(b"01"):
        return BitStream.from_string(stripped.decode("ascii"))
    return BitStream(raw, 8 * len(raw))
