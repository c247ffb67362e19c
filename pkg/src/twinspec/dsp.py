"""Spectral analysis and synthesis for 16 kHz mono speech.

Frames start at sample 0 with no center padding, so frame t covers samples
[t*hop, t*hop + win_len). The inverse transform overlap-adds windowed frames
and divides by the overlap-added squared window; the window/hop pair must
keep that normalizer positive over the fully overlapped interior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io.wavfile
import scipy.signal

from .errors import ConfigError, DataError, DimensionError, InvariantError

_WINDOWS = ("hamming", "hann", "rect")

# Relative floor below which an overlap-add normalizer sample counts as zero.
_NORM_TINY = 1e-10


@dataclass(frozen=True)
class StftConfig:
    """Analysis/synthesis parameters. Defaults: 20 ms Hamming frames, 50% overlap."""

    sample_rate: int = 16000
    win_len: int = 320
    hop: int = 160
    fft_size: int = 320
    window: str = "hamming"

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.win_len <= 0 or self.fft_size < self.win_len:
            raise ConfigError(
                f"need 0 < win_len <= fft_size, got win_len={self.win_len} "
                f"fft_size={self.fft_size}"
            )
        if not 0 < self.hop <= self.win_len:
            raise ConfigError(f"need 0 < hop <= win_len, got hop={self.hop}")
        if self.window not in _WINDOWS:
            raise ConfigError(f"unknown window {self.window!r}, expected one of {_WINDOWS}")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    def n_frames(self, n_samples: int) -> int:
        """Frame count for a signal of n_samples (raises if shorter than one window)."""
        if n_samples < self.win_len:
            raise DataError(
                f"signal of {n_samples} samples is shorter than one window ({self.win_len})"
            )
        return (n_samples - self.win_len) // self.hop + 1

    def window_array(self) -> np.ndarray:
        if self.window == "rect":
            return np.ones(self.win_len)
        return scipy.signal.get_window(self.window, self.win_len, fftbins=True)


@dataclass
class Spectrogram:
    """Complex spectrum stored as separate real/imaginary (T, F) planes."""

    real: np.ndarray
    imag: np.ndarray
    cfg: StftConfig

    @property
    def n_frames(self) -> int:
        return self.real.shape[0]

    @property
    def n_bins(self) -> int:
        return self.real.shape[1]


@dataclass
class Magnitude:
    """Nonnegative (T, F) magnitude plane."""

    values: np.ndarray
    cfg: StftConfig


@dataclass
class UnitPhase:
    """Phase as unit-norm (cos, sin) planes; zero-magnitude bins carry (1, 0)."""

    cos: np.ndarray
    sin: np.ndarray


def stft(x: np.ndarray, cfg: StftConfig) -> Spectrogram:
    """Short-time transform of a 1-D signal.

    Returns float32 (T, F) planes with T = (len(x) - win_len) // hop + 1 and
    F = fft_size // 2 + 1. Accumulation runs in float64.
    """
    x = np.asarray(x)
    if x.ndim != 1:
        raise DimensionError(f"expected a 1-D signal, got shape {x.shape}")
    n_frames = cfg.n_frames(x.shape[0])
    frames = np.lib.stride_tricks.sliding_window_view(x, cfg.win_len)[:: cfg.hop]
    frames = frames[:n_frames].astype(np.float64)
    spec = np.fft.rfft(frames * cfg.window_array(), n=cfg.fft_size, axis=1)
    return Spectrogram(
        real=spec.real.astype(np.float32),
        imag=spec.imag.astype(np.float32),
        cfg=cfg,
    )


def istft(spec: Spectrogram) -> np.ndarray:
    """Invert a spectrogram by windowed overlap-add.

    Output has (T - 1) * hop + win_len samples and keeps the float64
    accumulation (I/O boundaries quantize to float32). The per-sample
    normalizer is the overlap-added squared window; it must stay positive
    over the fully overlapped interior (ConfigError otherwise), and is
    clamped only at the leading/trailing partial-overlap samples.
    """
    cfg = spec.cfg
    if spec.real.shape != spec.imag.shape or spec.real.ndim != 2:
        raise DimensionError(
            f"real/imag planes must be matching 2-D arrays, got "
            f"{spec.real.shape} and {spec.imag.shape}"
        )
    if spec.n_bins != cfg.n_bins:
        raise DimensionError(f"expected {cfg.n_bins} bins, got {spec.n_bins}")
    n_frames = spec.n_frames
    window = cfg.window_array()
    z = spec.real.astype(np.float64) + 1j * spec.imag.astype(np.float64)
    frames = np.fft.irfft(z, n=cfg.fft_size, axis=1)[:, : cfg.win_len]

    out_len = (n_frames - 1) * cfg.hop + cfg.win_len
    num = np.zeros(out_len)
    den = np.zeros(out_len)
    wsq = window * window
    for t in range(n_frames):
        start = t * cfg.hop
        num[start : start + cfg.win_len] += frames[t] * window
        den[start : start + cfg.win_len] += wsq

    edge = cfg.win_len - cfg.hop
    interior = slice(edge, out_len - edge) if edge > 0 else slice(0, out_len)
    floor = _NORM_TINY * den.max()
    if np.any(den[interior] <= floor):
        raise ConfigError(
            f"window {cfg.window!r} with hop {cfg.hop} leaves zero overlap-add "
            f"normalizer at interior samples"
        )
    return num / np.maximum(den, floor)


def mag_phase(spec: Spectrogram) -> tuple[Magnitude, UnitPhase]:
    """Split a spectrogram into magnitude and unit phase.

    Magnitude is sqrt(real^2 + imag^2); phase is (real, imag) / magnitude with
    the (1, 0) convention at exactly zero magnitude.
    """
    mag, phase = _mag_phase_arrays(spec.real, spec.imag)
    return Magnitude(values=mag, cfg=spec.cfg), phase


def _mag_phase_arrays(real: np.ndarray, imag: np.ndarray) -> tuple[np.ndarray, UnitPhase]:
    mag = np.hypot(real, imag)
    safe = np.where(mag == 0.0, 1.0, mag)
    cos = np.where(mag == 0.0, 1.0, real / safe).astype(real.dtype)
    sin = np.where(mag == 0.0, 0.0, imag / safe).astype(real.dtype)
    return mag.astype(real.dtype), UnitPhase(cos=cos, sin=sin)


def polar_combine(mag: Magnitude, phase: UnitPhase) -> Spectrogram:
    """Recombine magnitude and unit phase into a spectrogram.

    The phase must be unit-norm within 1e-3 and the magnitude nonnegative;
    violations raise InvariantError.
    """
    values = np.asarray(mag.values)
    if values.shape != phase.cos.shape or values.shape != phase.sin.shape:
        raise DimensionError(
            f"magnitude {values.shape} and phase {phase.cos.shape} shapes differ"
        )
    if np.any(values < 0):
        raise InvariantError("magnitude must be nonnegative")
    norm_err = np.abs(phase.cos.astype(np.float64) ** 2 + phase.sin.astype(np.float64) ** 2 - 1.0)
    if np.any(norm_err > 1e-3):
        raise InvariantError(
            f"phase is not unit-norm: worst |cos^2+sin^2-1| = {norm_err.max():.3e}"
        )
    return Spectrogram(
        real=(values * phase.cos).astype(np.float32),
        imag=(values * phase.sin).astype(np.float32),
        cfg=mag.cfg,
    )


def read_wav(path, expected_rate: int | None = None) -> tuple[np.ndarray, int]:
    """Read a mono WAV file as float32 in [-1, 1].

    Accepts 16-bit PCM (scaled by 1/32768) or 32-bit float. A sample-rate
    mismatch against expected_rate is an error; nothing is resampled silently.
    """
    try:
        rate, data = scipy.io.wavfile.read(path)
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    except ValueError as exc:
        raise DataError(f"unreadable WAV file {path}: {exc}") from None
    if data.ndim != 1:
        raise DataError(f"{path}: expected mono audio, got {data.ndim} channels")
    if data.dtype == np.int16:
        x = data.astype(np.float32) / 32768.0
    elif data.dtype == np.float32:
        x = data
    else:
        raise DataError(f"{path}: unsupported sample format {data.dtype}")
    if expected_rate is not None and rate != expected_rate:
        raise DataError(f"{path}: sample rate {rate} != expected {expected_rate}")
    return x, rate


def write_wav(path, x: np.ndarray, rate: int) -> None:
    """Write a 1-D float array as a 32-bit float mono WAV file."""
    x = np.asarray(x)
    if x.ndim != 1:
        raise DimensionError(f"expected a 1-D signal, got shape {x.shape}")
    scipy.io.wavfile.write(path, rate, x.astype(np.float32))
