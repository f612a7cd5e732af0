"""Desk-scale OFDM baseband synthesis.

Frames are built from QPSK-loaded subcarriers with a 1/16 cyclic prefix,
band-limited, shifted to a centre offset, rotated by a constant Doppler
term and buried in calibrated complex AWGN. Everything is driven by a
single PCG64 stream seeded from ``SynthParams.prng_seed`` so that equal
parameters give bit-identical samples.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidParams, IoError

# Values a synthesized frame may take, following the dataset table.
NOMINAL_BANDWIDTHS_MHZ = (10, 15, 20, 25, 30, 40, 50)
SUBCARRIER_SPACINGS_HZ = (15e3, 30e3)
SNR_VALUES_DB = (40.0, 50.0, 100.0)
DOPPLER_VALUES_HZ = (0.0, 10.0, 500.0)

# Maximum transmission bandwidth (resource blocks) per nominal channel
# bandwidth, FR1, keyed by subcarrier spacing.
_NR_RESOURCE_BLOCKS = {
    15e3: {5: 25, 10: 52, 15: 79, 20: 106, 25: 133, 30: 160, 40: 216, 50: 270},
    30e3: {5: 11, 10: 24, 15: 38, 20: 51, 25: 65, 30: 78, 40: 106, 50: 133},
}

CP_FRACTION = 16  # cyclic prefix = symbol length / 16


def nr_occupied_bandwidth(nominal_mhz: int, scs_hz: float) -> float:
    """Occupied bandwidth (Hz) of an NR carrier: resource blocks x 12 x SCS."""
    try:
        n_rb = _NR_RESOURCE_BLOCKS[float(scs_hz)][int(nominal_mhz)]
    except KeyError:
        raise InvalidParams(
            f"no NR resource-block entry for {nominal_mhz} MHz at {scs_hz:g} Hz SCS"
        ) from None
    return n_rb * 12 * float(scs_hz)


@dataclass(frozen=True)
class SynthParams:
    sample_rate_hz: float = 61.44e6
    frame_duration_ms: float = 40.0
    bandwidth_hz: float = 51 * 12 * 30e3  # 20 MHz nominal carrier at 30 kHz
    subcarrier_spacing_hz: float = 30e3
    snr_db: float = 40.0
    doppler_hz: float = 0.0
    center_offset_hz: float = 0.0
    prng_seed: int = 0

    @classmethod
    def small(cls, **overrides) -> "SynthParams":
        """CI-sized profile: 1.92 MHz sampling, 10 ms frames, 1.08 MHz band."""
        fields = dict(
            sample_rate_hz=1.92e6,
            frame_duration_ms=10.0,
            bandwidth_hz=6 * 12 * 15e3,
            subcarrier_spacing_hz=15e3,
        )
        fields.update(overrides)
        return cls(**fields)

    @property
    def n_samples(self) -> int:
        return int(round(self.frame_duration_ms * self.sample_rate_hz / 1000.0))

    @property
    def n_subcarriers(self) -> int:
        return int(round(self.bandwidth_hz / self.subcarrier_spacing_hz))

    @property
    def fft_size(self) -> int:
        return int(round(self.sample_rate_hz / self.subcarrier_spacing_hz))

    def validate(self) -> None:
        """Raise InvalidParams naming the first violated constraint."""
        for name in ("sample_rate_hz", "frame_duration_ms", "bandwidth_hz", "subcarrier_spacing_hz"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InvalidParams(f"{name} must be a positive finite number, got {value!r}")
        for name in ("snr_db", "doppler_hz", "center_offset_hz"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidParams(f"{name} must be finite")
        if self.doppler_hz < 0:
            raise InvalidParams(f"doppler_hz must be >= 0, got {self.doppler_hz}")
        if not 0 <= int(self.prng_seed) < 2**64:
            raise InvalidParams("prng_seed must fit in 64 unsigned bits")

        if self.sample_rate_hz < 2 * (abs(self.center_offset_hz) + self.bandwidth_hz / 2):
            raise InvalidParams(
                "aliasing: sample_rate_hz must be >= 2*(|center_offset_hz| + bandwidth_hz/2) "
                f"({self.sample_rate_hz:g} < {2 * (abs(self.center_offset_hz) + self.bandwidth_hz / 2):g})"
            )
        ratio = self.bandwidth_hz / self.subcarrier_spacing_hz
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise InvalidParams(
                f"subcarrier_spacing_hz={self.subcarrier_spacing_hz:g} does not divide "
                f"bandwidth_hz={self.bandwidth_hz:g} into an integer subcarrier count"
            )
        n = self.frame_duration_ms * self.sample_rate_hz / 1000.0
        if abs(n - round(n)) > 1e-6:
            raise InvalidParams(
                f"frame_duration_ms x sample_rate_hz gives a non-integer sample count ({n})"
            )
        ifft = self.sample_rate_hz / self.subcarrier_spacing_hz
        if abs(ifft - round(ifft)) > 1e-9 * ifft:
            raise InvalidParams(
                "sample_rate_hz must be an integer multiple of subcarrier_spacing_hz"
            )
        if self.n_subcarriers > self.fft_size:
            raise InvalidParams("more subcarriers than IFFT bins")


@dataclass(frozen=True)
class BasebandFrame:
    samples: np.ndarray  # complex128
    sample_rate_hz: float

    def __len__(self) -> int:
        return len(self.samples)


def _subcarrier_bins(n_sc: int) -> np.ndarray:
    return np.arange(n_sc) - n_sc // 2


def synthesize_parts(params: SynthParams) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(signal, noise)`` whose sum is the synthesized frame.

    The signal has unit mean power. The noise is white over the full
    sampling band with its in-band share equal to ``10**(-snr_db/10)``.
    """
    params.validate()
    rng = np.random.default_rng(int(params.prng_seed))
    fs = float(params.sample_rate_hz)
    n_total = params.n_samples
    n_fft = params.fft_size
    n_sc = params.n_subcarriers
    cp = n_fft // CP_FRACTION
    sym_len = n_fft + cp
    n_sym = -(-n_total // sym_len)

    qpsk = (rng.integers(0, 2, size=(n_sym, n_sc)) * 2 - 1) + 1j * (
        rng.integers(0, 2, size=(n_sym, n_sc)) * 2 - 1
    )
    grid = np.zeros((n_sym, n_fft), dtype=np.complex128)
    grid[:, _subcarrier_bins(n_sc) % n_fft] = qpsk / np.sqrt(2.0)
    body = np.fft.ifft(grid, axis=1) * (n_fft / np.sqrt(n_sc))
    symbols = np.concatenate([body[:, -cp:], body], axis=1) if cp else body
    signal = symbols.reshape(-1)[:n_total]

    # Ideal band-limiting filter around the subcarrier block (pre-shift).
    centre = ((n_sc - 1) / 2 - n_sc // 2) * params.subcarrier_spacing_hz
    spectrum = np.fft.fft(signal)
    freqs = np.fft.fftfreq(n_total, d=1.0 / fs)
    spectrum[np.abs(freqs - centre) > params.bandwidth_hz / 2] = 0.0
    signal = np.fft.ifft(spectrum)
    signal /= np.sqrt(np.mean(np.abs(signal) ** 2))

    t = np.arange(n_total) / fs
    shift = params.center_offset_hz - centre + params.doppler_hz
    signal = signal * np.exp(2j * np.pi * shift * t)

    snr = 10.0 ** (params.snr_db / 10.0)
    noise_var = (fs / params.bandwidth_hz) / snr
    noise = np.sqrt(noise_var / 2.0) * (
        rng.standard_normal(n_total) + 1j * rng.standard_normal(n_total)
    )
    return signal, noise


def synthesize_frame(params: SynthParams) -> BasebandFrame:
    signal, noise = synthesize_parts(params)
    return BasebandFrame(samples=signal + noise, sample_rate_hz=float(params.sample_rate_hz))


def draw_table_params(
    seed: int, index: int = 0, *, small: bool = False, **fixed
) -> SynthParams:
    """Draw one parameter set from the dataset table, reproducibly.

    Keyword arguments pin individual fields; everything else is drawn
    from ``(seed, index)``. The centre offset is uniform over the range
    that keeps the occupied band alias-free.
    """
    rng = np.random.default_rng([int(seed), int(index)])
    base = SynthParams.small() if small else SynthParams()
    scs = fixed.pop("subcarrier_spacing_hz", None) or float(rng.choice(SUBCARRIER_SPACINGS_HZ))
    if "bandwidth_hz" in fixed:
        bw = fixed.pop("bandwidth_hz")
    elif small:
        bw = base.bandwidth_hz
    else:
        bw = nr_occupied_bandwidth(int(rng.choice(NOMINAL_BANDWIDTHS_MHZ)), scs)
    snr = fixed.pop("snr_db", None)
    snr = float(rng.choice(SNR_VALUES_DB)) if snr is None else snr
    doppler = fixed.pop("doppler_hz", None)
    doppler = float(rng.choice(DOPPLER_VALUES_HZ)) if doppler is None else doppler
    offset = fixed.pop("center_offset_hz", None)
    if offset is None:
        span = max(base.sample_rate_hz / 2 - bw / 2 - doppler, 0.0)
        offset = float(rng.uniform(-span, span))
    prng_seed = fixed.pop("prng_seed", None)
    if prng_seed is None:
        prng_seed = int(rng.integers(0, 2**63))
    params = SynthParams(
        sample_rate_hz=fixed.pop("sample_rate_hz", base.sample_rate_hz),
        frame_duration_ms=fixed.pop("frame_duration_ms", base.frame_duration_ms),
        bandwidth_hz=bw,
        subcarrier_spacing_hz=scs,
        snr_db=snr,
        doppler_hz=doppler,
        center_offset_hz=offset,
        prng_seed=prng_seed,
    )
    if fixed:
        raise InvalidParams(f"unknown synthesis fields: {sorted(fixed)}")
    params.validate()
    return params


def params_dict(params: SynthParams) -> dict:
    return asdict(params)


def write_iq(frame: BasebandFrame, path) -> None:
    """Write interleaved little-endian float32 I/Q pairs."""
    iq = np.empty(2 * len(frame.samples), dtype="<f4")
    iq[0::2] = frame.samples.real
    iq[1::2] = frame.samples.imag
    try:
        Path(path).write_bytes(iq.tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_iq(path, sample_rate_hz: float) -> BasebandFrame:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(raw) % 8:
        raise IoError(f"{path}: size {len(raw)} is not a whole number of I/Q float32 pairs")
    iq = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return BasebandFrame(samples=iq[0::2] + 1j * iq[1::2], sample_rate_hz=float(sample_rate_hz))
