"""Mixture synthesis at exact SNRs, batching with padding masks, manifests.

Everything here is pure given its seed: the same manifest row always yields
the same mixture, bit for bit. A small synthetic corpus generator (harmonic
"voices" plus white/pink noise) lets the whole pipeline run without any
external audio.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import StftConfig, read_wav, write_wav
from .errors import DataError

SNR_CYCLE = (-5.0, 0.0, 5.0, 10.0)


@dataclass(frozen=True)
class ManifestRow:
    """One mixture recipe: which clean file, which noise, at what SNR."""

    clean_path: str
    noise_id: str
    snr_db: float
    seed: int
    split: str

    def __post_init__(self):
        if not math.isfinite(self.snr_db):
            raise DataError(f"snr_db must be finite, got {self.snr_db}")


@dataclass
class Batch:
    """Tail-padded waveforms with their true lengths and a frame validity mask.

    mask[i, t] is 1.0 exactly when frame t lies fully inside item i's true
    length, so the count of valid frames equals the frame count of the
    unpadded utterance.
    """

    waves: np.ndarray
    lengths: list[int]
    mask: np.ndarray


def rms_normalize(x: np.ndarray, rms: float) -> np.ndarray:
    power = float(np.mean(np.square(x, dtype=np.float64)))
    if power == 0.0:
        raise DataError("cannot normalize a silent signal")
    return x * (rms / math.sqrt(power))


def synth_voice(
    duration: float,
    seed: int,
    rate: int = 16000,
    f0_range: tuple[float, float] = (100.0, 300.0),
    n_harmonics: int = 10,
    rms: float = 0.1,
) -> np.ndarray:
    """Harmonic tone with syllable-rate amplitude modulation and a slow pitch
    drift, speech-like enough for envelope-correlation metrics.

    The drift sweeps each harmonic across band boundaries the way intonation
    does, and the modulation dips near silence between "syllables".
    """
    rng = np.random.default_rng(seed)
    f0 = rng.uniform(*f0_range)
    n = int(round(duration * rate))
    t = np.arange(n, dtype=np.float64) / rate
    drift = 1.0 + 0.08 * np.sin(
        2.0 * np.pi * rng.uniform(4.0, 7.0) * t + rng.uniform(0.0, 2.0 * np.pi)
    )
    phase = 2.0 * np.pi * f0 * np.cumsum(drift) / rate
    x = np.zeros(n)
    for k in range(1, n_harmonics + 1):
        x += np.sin(k * phase + rng.uniform(0.0, 2.0 * np.pi)) / math.sqrt(k)
    am = 0.5 * (1.0 - np.cos(2.0 * np.pi * rng.uniform(2.0, 5.0) * t + rng.uniform(0.0, 2.0 * np.pi)))
    x *= 0.1 + 0.9 * am
    return rms_normalize(x, rms)


def white_noise(duration: float, seed: int, rate: int = 16000, rms: float = 0.1) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rms_normalize(rng.standard_normal(int(round(duration * rate))), rms)


def pink_noise(duration: float, seed: int, rate: int = 16000, rms: float = 0.1) -> np.ndarray:
    """1/f-shaped noise: white spectrum divided by sqrt(bin index)."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * rate))
    spectrum = np.fft.rfft(rng.standard_normal(n))
    idx = np.arange(spectrum.size, dtype=np.float64)
    idx[0] = 1.0
    return rms_normalize(np.fft.irfft(spectrum / np.sqrt(idx), n=n), rms)


def build_noise_track(noise_paths, expected_rate: int = 16000) -> np.ndarray:
    """Concatenate noise files, in order, into one long vector."""
    parts = []
    for path in noise_paths:
        wav, _ = read_wav(path, expected_rate=expected_rate)
        parts.append(np.asarray(wav, dtype=np.float64))
    if not parts:
        raise DataError("no noise files given")
    return np.concatenate(parts)


def mix_at_snr(
    clean: np.ndarray, noise_track: np.ndarray, snr_db: float, seed: int
) -> tuple[np.ndarray, np.ndarray, int]:
    """Draw a seeded excerpt, scale it to the target SNR, add it to the clean.

    Returns (mixture, scaled_noise, offset). Powers are whole-utterance mean
    squares, so the realized SNR is exact up to float rounding.
    """
    clean = np.asarray(clean, dtype=np.float64)
    noise_track = np.asarray(noise_track, dtype=np.float64)
    if not math.isfinite(snr_db):
        raise DataError(f"snr_db must be finite, got {snr_db}")
    if noise_track.size < clean.size:
        raise DataError(
            f"noise track ({noise_track.size} samples) is shorter than the "
            f"clean utterance ({clean.size})"
        )
    p_clean = float(np.mean(np.square(clean)))
    if p_clean == 0.0:
        raise DataError("clean utterance is silent; SNR is undefined")
    rng = np.random.default_rng(seed)
    offset = int(rng.integers(0, noise_track.size - clean.size + 1))
    excerpt = noise_track[offset : offset + clean.size]
    p_noise = float(np.mean(np.square(excerpt)))
    if p_noise == 0.0:
        raise DataError("selected noise excerpt is silent; cannot scale to an SNR")
    gain = math.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0)))
    scaled = gain * excerpt
    return clean + scaled, scaled, offset


def make_batch(utterances, cfg: StftConfig) -> Batch:
    """Tail-pad to the longest item and mark the frames fully inside each."""
    items = [np.asarray(u, dtype=np.float64) for u in utterances]
    if not items:
        raise DataError("cannot batch an empty utterance list")
    lengths = [u.size for u in items]
    n_max = max(lengths)
    t_max = cfg.n_frames(n_max)
    waves = np.zeros((len(items), n_max))
    mask = np.zeros((len(items), t_max), dtype=np.float32)
    for i, (u, n) in enumerate(zip(items, lengths)):
        waves[i, :n] = u
        mask[i, : cfg.n_frames(n)] = 1.0
    return Batch(waves=waves, lengths=lengths, mask=mask)


def write_manifest(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        for row in rows:
            writer.writerow([row.clean_path, row.noise_id, repr(row.snr_db), row.seed, row.split])


def read_manifest(path) -> list[ManifestRow]:
    rows = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    with fh:
        for lineno, record in enumerate(csv.reader(fh, delimiter="\t"), 1):
            if not record:
                continue
            if len(record) != 5:
                raise DataError(f"{path}:{lineno}: expected 5 tab-separated fields, got {len(record)}")
            clean_path, noise_id, snr, seed, split = record
            try:
                rows.append(
                    ManifestRow(
                        clean_path=clean_path,
                        noise_id=noise_id,
                        snr_db=float(snr),
                        seed=int(seed),
                        split=split,
                    )
                )
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise DataError(f"manifest {path} is empty")
    return rows


def noise_track_path(corpus_dir, noise_id: str) -> Path:
    path = Path(corpus_dir) / "noise" / f"{noise_id}.wav"
    if not path.exists():
        raise DataError(f"no noise file for id {noise_id!r} under {corpus_dir}")
    return path


def load_mixture(row: ManifestRow, corpus_dir, rate: int = 16000):
    """Materialize one manifest row into (mixture, clean) float64 waveforms."""
    clean, _ = read_wav(Path(corpus_dir) / row.clean_path, expected_rate=rate)
    track = build_noise_track([noise_track_path(corpus_dir, row.noise_id)], expected_rate=rate)
    mixture, _, _ = mix_at_snr(clean, track, row.snr_db, row.seed)
    return mixture, np.asarray(clean, dtype=np.float64)


def write_corpus(
    out_dir,
    n_utts: int = 8,
    seed: int = 0,
    rate: int = 16000,
    duration_range: tuple[float, float] = (1.0, 2.0),
    noise_duration: float = 12.0,
    eval_fraction: float = 0.25,
) -> Path:
    """Generate a self-contained corpus (clean/, noise/, manifest.tsv).

    Utterance durations, SNRs, and mixing seeds all derive from the one seed,
    so two calls with the same arguments produce identical trees.
    """
    out_dir = Path(out_dir)
    (out_dir / "clean").mkdir(parents=True, exist_ok=True)
    (out_dir / "noise").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    write_wav(out_dir / "noise" / "white.wav", white_noise(noise_duration, seed + 1, rate), rate)
    write_wav(out_dir / "noise" / "pink.wav", pink_noise(noise_duration, seed + 2, rate), rate)
    noise_ids = ("white", "pink")
    rows = []
    n_eval = max(1, int(round(n_utts * eval_fraction))) if n_utts > 1 else 0
    for i in range(n_utts):
        duration = float(rng.uniform(*duration_range))
        rel = f"clean/utt{i:04d}.wav"
        write_wav(out_dir / rel, synth_voice(duration, seed + 100 + i, rate), rate)
        rows.append(
            ManifestRow(
                clean_path=rel,
                noise_id=noise_ids[i % len(noise_ids)],
                snr_db=SNR_CYCLE[i % len(SNR_CYCLE)],
                seed=seed + 1000 + i,
                split="eval" if i >= n_utts - n_eval else "train",
            )
        )
    manifest = out_dir / "manifest.tsv"
    write_manifest(manifest, rows)
    return manifest
