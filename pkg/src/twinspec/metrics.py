"""Objective evaluation: band-envelope intelligibility, SI-SDR, and SNR.

The intelligibility score follows the short-time band-correlation recipe:
resample to 10 kHz, drop frames more than 40 dB below the loudest clean
frame, decompose into 15 one-third-octave band envelopes (256-sample Hann
frames, half-overlap, 512-point FFT), then average clipped correlation
coefficients over 30-frame segments. Scores land in [-1, 1], typically [0, 1].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.signal

from .errors import DataError, DimensionError

STOI_RATE = 10_000
STOI_FRAME = 256
STOI_HOP = 128
STOI_FFT = 512
STOI_BANDS = 15
STOI_FIRST_CENTER = 150.0
STOI_SEGMENT = 30
STOI_DYN_RANGE_DB = 40.0
STOI_BETA_DB = -15.0

SISDR_CAP_DB = 60.0


@dataclass(frozen=True)
class EvalRow:
    utterance_id: str
    snr_db: float
    stoi_noisy: float
    stoi_enhanced: float
    sisdr_noisy: float
    sisdr_enhanced: float


def _hann(n: int) -> np.ndarray:
    # endpoint-free Hann, nonzero across the whole frame
    return np.hanning(n + 2)[1:-1]


def _frame(x: np.ndarray, window: np.ndarray, hop: int) -> np.ndarray:
    n_frames = (x.size - window.size) // hop + 1
    if n_frames < 1:
        raise DataError(f"signal of {x.size} samples is too short to frame")
    idx = np.arange(window.size)[None, :] + hop * np.arange(n_frames)[:, None]
    return x[idx] * window[None, :]


def _remove_silent_frames(clean: np.ndarray, other: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Drop frames whose clean energy is 40 dB under the loudest, then
    overlap-add the survivors back into waveforms."""
    window = _hann(STOI_FRAME)
    cf = _frame(clean, window, STOI_HOP)
    of = _frame(other, window, STOI_HOP)
    energy = np.linalg.norm(cf, axis=1)
    if not energy.any():
        raise DataError("clean signal is silent everywhere; the metric is undefined")
    keep = 20.0 * np.log10(energy + 1e-300) > 20.0 * np.log10(energy.max()) - STOI_DYN_RANGE_DB
    cf, of = cf[keep], of[keep]
    out_len = (cf.shape[0] - 1) * STOI_HOP + STOI_FRAME
    rebuilt_c = np.zeros(out_len)
    rebuilt_o = np.zeros(out_len)
    for i in range(cf.shape[0]):
        rebuilt_c[i * STOI_HOP : i * STOI_HOP + STOI_FRAME] += cf[i]
        rebuilt_o[i * STOI_HOP : i * STOI_HOP + STOI_FRAME] += of[i]
    return rebuilt_c, rebuilt_o


def _third_octave_matrix() -> np.ndarray:
    freqs = np.arange(STOI_FFT // 2 + 1) * (STOI_RATE / STOI_FFT)
    obm = np.zeros((STOI_BANDS, freqs.size))
    for j in range(STOI_BANDS):
        center = STOI_FIRST_CENTER * 2.0 ** (j / 3.0)
        lo = int(np.argmin(np.abs(freqs - center * 2.0 ** (-1.0 / 6.0))))
        hi = int(np.argmin(np.abs(freqs - center * 2.0 ** (1.0 / 6.0))))
        obm[j, lo:hi] = 1.0
    return obm


def _band_envelopes(x: np.ndarray) -> np.ndarray:
    frames = _frame(x, _hann(STOI_FRAME), STOI_HOP)
    spec = np.fft.rfft(frames, n=STOI_FFT, axis=1)
    return np.sqrt(_third_octave_matrix() @ (np.abs(spec) ** 2).T)


def stoi(clean: np.ndarray, processed: np.ndarray, rate: int = 16000) -> float:
    """Short-time band-envelope correlation between clean and processed audio."""
    clean = np.asarray(clean, dtype=np.float64)
    processed = np.asarray(processed, dtype=np.float64)
    if clean.shape != processed.shape or clean.ndim != 1:
        raise DimensionError(
            f"need equal-length 1-D signals, got {clean.shape} and {processed.shape}"
        )
    if rate != STOI_RATE:
        clean = scipy.signal.resample_poly(clean, STOI_RATE, rate)
        processed = scipy.signal.resample_poly(processed, STOI_RATE, rate)
    clean, processed = _remove_silent_frames(clean, processed)
    x = _band_envelopes(clean)
    y = _band_envelopes(processed)
    n_frames = x.shape[1]
    if n_frames < STOI_SEGMENT:
        raise DataError(
            f"only {n_frames} active frames; the metric needs at least {STOI_SEGMENT}"
        )
    clip = 10.0 ** (-STOI_BETA_DB / 20.0)
    total, count = 0.0, 0
    for m in range(STOI_SEGMENT, n_frames + 1):
        xs = x[:, m - STOI_SEGMENT : m]
        ys = y[:, m - STOI_SEGMENT : m]
        norm_y = np.linalg.norm(ys, axis=1, keepdims=True)
        alpha = np.linalg.norm(xs, axis=1, keepdims=True) / np.maximum(norm_y, 1e-300)
        ys_prime = np.minimum(ys * alpha, xs * (1.0 + clip))
        xc = xs - xs.mean(axis=1, keepdims=True)
        yc = ys_prime - ys_prime.mean(axis=1, keepdims=True)
        den = np.linalg.norm(xc, axis=1) * np.linalg.norm(yc, axis=1)
        num = np.sum(xc * yc, axis=1)
        good = den > 0.0
        total += float(np.sum(num[good] / den[good]))
        count += STOI_BANDS
    return total / count


def si_sdr(ref: np.ndarray, est: np.ndarray) -> float:
    """Scale-invariant SDR in dB: project est onto ref, compare energies."""
    ref = np.asarray(ref, dtype=np.float64)
    est = np.asarray(est, dtype=np.float64)
    if ref.shape != est.shape or ref.ndim != 1:
        raise DimensionError(f"need equal-length 1-D signals, got {ref.shape} and {est.shape}")
    ref_energy = float(np.dot(ref, ref))
    if ref_energy == 0.0:
        raise DataError("reference signal is zero; SI-SDR is undefined")
    target = (float(np.dot(est, ref)) / ref_energy) * ref
    residual = est - target
    num = float(np.dot(target, target))
    den = float(np.dot(residual, residual))
    if den == 0.0 or 10.0 * math.log10(num / den) > SISDR_CAP_DB:
        return SISDR_CAP_DB
    return 10.0 * math.log10(num / den)


def snr_db(signal: np.ndarray, noise: np.ndarray) -> float:
    """10*log10 of the mean-square power ratio."""
    signal = np.asarray(signal, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if signal.shape != noise.shape:
        raise DimensionError(f"shape mismatch: {signal.shape} vs {noise.shape}")
    p_noise = float(np.mean(np.square(noise)))
    if p_noise == 0.0:
        raise DataError("noise is zero; SNR is undefined")
    return 10.0 * math.log10(float(np.mean(np.square(signal))) / p_noise)


def write_eval_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["utterance_id", "snr_db", "stoi_noisy", "stoi_enhanced", "sisdr_noisy", "sisdr_enhanced"]
        )
        for r in rows:
            writer.writerow(
                [
                    r.utterance_id,
                    f"{r.snr_db:.2f}",
                    f"{r.stoi_noisy:.6f}",
                    f"{r.stoi_enhanced:.6f}",
                    f"{r.sisdr_noisy:.4f}",
                    f"{r.sisdr_enhanced:.4f}",
                ]
            )


def read_eval_csv(path) -> list[EvalRow]:
    rows = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read evaluation file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"evaluation file {path} is empty")
        for record in reader:
            if len(record) != 6:
                raise DataError(f"malformed evaluation row: {record!r}")
            rows.append(
                EvalRow(
                    utterance_id=record[0],
                    snr_db=float(record[1]),
                    stoi_noisy=float(record[2]),
                    stoi_enhanced=float(record[3]),
                    sisdr_noisy=float(record[4]),
                    sisdr_enhanced=float(record[5]),
                )
            )
    return rows
