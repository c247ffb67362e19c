"""Deterministic training loop: per-step loss logging, per-epoch checkpoints.

Everything downstream of the seed is reproducible bit for bit: epoch shuffles
come from a per-epoch generator, mixtures are frozen by their manifest seeds,
and the optimizer is plain Adam. A resumed run continues exactly where the
uninterrupted run would have been.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .data import ManifestRow, load_mixture, make_batch, read_manifest
from .dsp import mag_phase, stft
from .errors import DataError, NumericError
from .model import build_model, compute_loss, forward, load_model, save_model
from .nncore import Tape, adam_step

LOSS_LOG_NAME = "loss_log.csv"
CHECKPOINT_NAME = "checkpoint.ckpt"


@dataclass
class TrainResult:
    checkpoint_path: Path
    loss_log_path: Path
    steps: int
    epochs_done: int
    final_loss: float
    initial_loss: float


def _batch_rows(rows: list[ManifestRow], epoch: int, seed: int, batch_size: int):
    order = np.random.default_rng(seed + epoch).permutation(len(rows))
    shuffled = [rows[i] for i in order]
    return [shuffled[i : i + batch_size] for i in range(0, len(shuffled), batch_size)]


def _prepare_batch(batch_rows, corpus_dir, cfg: RunConfig):
    """Mix each row, pad to a common length, and lift everything to spectra."""
    stft_cfg = cfg.stft()
    mixtures, cleans = [], []
    for row in batch_rows:
        mixture, clean = load_mixture(row, corpus_dir, rate=cfg.sample_rate)
        mixtures.append(mixture)
        cleans.append(clean)
    mix_batch = make_batch(mixtures, stft_cfg)
    noisy_planes = []
    ref_mag, ref_real, ref_imag = [], [], []
    for i in range(mix_batch.waves.shape[0]):
        spec = stft(mix_batch.waves[i], stft_cfg)
        noisy_planes.append(np.stack([spec.real, spec.imag]))
        clean_padded = np.zeros_like(mix_batch.waves[i])
        clean_padded[: cleans[i].size] = cleans[i]
        ref = stft(clean_padded, stft_cfg)
        mag, _ = mag_phase(ref)
        ref_mag.append(mag.values)
        ref_real.append(ref.real)
        ref_imag.append(ref.imag)
    noisy = np.stack(noisy_planes)
    mask = mix_batch.mask if cfg.mask_padding else np.ones_like(mix_batch.mask)
    return noisy, np.stack(ref_mag), np.stack(ref_real), np.stack(ref_imag), mask


def train_loop(
    cfg: RunConfig,
    manifest_path,
    out_dir,
    max_steps: int | None = None,
    resume_from=None,
) -> TrainResult:
    """Train on the manifest's train split and leave a checkpoint plus loss log.

    A non-finite loss aborts with the offending batch spelled out. max_steps
    caps the total number of optimizer steps across all epochs.
    """
    manifest_path = Path(manifest_path)
    corpus_dir = manifest_path.parent
    rows = [r for r in read_manifest(manifest_path) if r.split == "train"]
    if not rows:
        raise DataError(f"manifest {manifest_path} has no train rows")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    epoch_start = 0
    if resume_from is not None:
        model, extra = load_model(resume_from)
        if model.cfg != cfg.model():
            raise DataError(
                "checkpoint architecture does not match the run config; "
                "refusing to resume"
            )
        epoch_start = int(extra.get("epochs_done", "0"))
    else:
        model = build_model(cfg.model(), seed=cfg.seed)

    loss_log_path = out_dir / LOSS_LOG_NAME
    checkpoint_path = out_dir / CHECKPOINT_NAME
    initial_loss = float("nan")
    final_loss = float("nan")
    step = model.store.step
    epochs_done = epoch_start

    with open(loss_log_path, "w", newline="") as log:
        log.write("step,L,L_mag,L_RI\n")
        for epoch in range(epoch_start, cfg.epochs):
            for batch in _batch_rows(rows, epoch, cfg.seed, cfg.batch_size):
                if max_steps is not None and step >= max_steps:
                    break
                noisy, ref_mag, ref_real, ref_imag, mask = _prepare_batch(
                    batch, corpus_dir, cfg
                )
                tape = Tape()
                est = forward(tape, model, noisy)
                total, l_mag, l_ri = compute_loss(
                    tape, est, ref_mag, ref_real, ref_imag, mask, cfg.alpha
                )
                loss_val = float(total.data)
                if not np.isfinite(loss_val):
                    ids = ",".join(r.clean_path for r in batch)
                    raise NumericError(
                        f"non-finite loss {loss_val} at epoch {epoch} step {step} "
                        f"on batch [{ids}]"
                    )
                tape.backward(total)
                adam_step(model.store, cfg.lr)
                step = model.store.step
                if np.isnan(initial_loss):
                    initial_loss = loss_val
                final_loss = loss_val
                log.write(f"{step},{loss_val!r},{float(l_mag.data)!r},{float(l_ri.data)!r}\n")
            epochs_done = epoch + 1
            extra = _checkpoint_extra(cfg, epochs_done)
            save_model(model, out_dir / f"checkpoint_epoch{epochs_done:03d}.ckpt", extra=extra)
            save_model(model, checkpoint_path, extra=extra)
            if max_steps is not None and step >= max_steps:
                break

    return TrainResult(
        checkpoint_path=checkpoint_path,
        loss_log_path=loss_log_path,
        steps=step,
        epochs_done=epochs_done,
        final_loss=final_loss,
        initial_loss=initial_loss,
    )


def _checkpoint_extra(cfg: RunConfig, epochs_done: int) -> dict[str, str]:
    return {
        "sample_rate": str(cfg.sample_rate),
        "win_len": str(cfg.win_len),
        "hop": str(cfg.hop),
        "fft_size": str(cfg.fft_size),
        "window": cfg.window,
        "epochs": str(cfg.epochs),
        "batch_size": str(cfg.batch_size),
        "lr": repr(cfg.lr),
        "seed": str(cfg.seed),
        "mask_padding": "1" if cfg.mask_padding else "0",
        "epochs_done": str(epochs_done),
    }
