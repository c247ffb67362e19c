"""Figure rendering for the report-producing CLI paths.

Each delimited output gets a rendered sibling: loss curves beside the loss
log, a metric summary beside the evaluation CSV, and an annotated view of the
phase-agreement map beside its raw matrix. Rendering is headless (Agg).
"""

from __future__ import annotations

import csv

import matplotlib
import numpy as np
from PIL import Image

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .errors import DataError  # noqa: E402


def write_phase_png(diff_map: np.ndarray, path) -> None:
    """8-bit grayscale map: -1 to black, +1 to white, bins bottom-up."""
    arr = np.asarray(diff_map, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"phase map must be 2-D, got shape {arr.shape}")
    levels = np.clip(np.round((arr + 1.0) * 127.5), 0, 255).astype(np.uint8)
    Image.fromarray(levels.T[::-1], mode="L").save(path)


def phase_figure(diff_map: np.ndarray, path, title: str = "phase agreement") -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    im = ax.imshow(
        np.asarray(diff_map).T,
        origin="lower",
        aspect="auto",
        cmap="gray",
        vmin=-1.0,
        vmax=1.0,
        interpolation="nearest",
    )
    ax.set_xlabel("frame")
    ax.set_ylabel("frequency bin")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="cos(phase difference)")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def loss_figure(loss_csv_path, path) -> None:
    steps, total, l_mag, l_ri = [], [], [], []
    try:
        fh = open(loss_csv_path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read loss log {loss_csv_path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["step", "L", "L_mag", "L_RI"]:
            raise DataError(f"unexpected loss log header: {header}")
        for record in reader:
            steps.append(int(record[0]))
            total.append(float(record[1]))
            l_mag.append(float(record[2]))
            l_ri.append(float(record[3]))
    if not steps:
        raise DataError(f"loss log {loss_csv_path} has no rows")
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(steps, total, label="L", linewidth=1.5)
    ax.plot(steps, l_mag, label="L_mag", linewidth=1.0, alpha=0.8)
    ax.plot(steps, l_ri, label="L_RI", linewidth=1.0, alpha=0.8)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def eval_figure(rows, path) -> None:
    """Paired noisy/enhanced bars per utterance for both metrics."""
    if not rows:
        raise DataError("no evaluation rows to plot")
    ids = [r.utterance_id for r in rows]
    x = np.arange(len(ids))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    width = 0.38
    ax1.bar(x - width / 2, [r.stoi_noisy for r in rows], width, label="noisy")
    ax1.bar(x + width / 2, [r.stoi_enhanced for r in rows], width, label="enhanced")
    ax1.set_ylabel("intelligibility score")
    ax1.set_ylim(0.0, 1.0)
    ax2.bar(x - width / 2, [r.sisdr_noisy for r in rows], width, label="noisy")
    ax2.bar(x + width / 2, [r.sisdr_enhanced for r in rows], width, label="enhanced")
    ax2.set_ylabel("SI-SDR (dB)")
    for ax in (ax1, ax2):
        ax.set_xticks(x)
        ax.set_xticklabels(ids, rotation=45, ha="right", fontsize=7)
        ax.legend(fontsize=8)
        ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_phase_csv(diff_map: np.ndarray, path) -> None:
    np.savetxt(path, np.asarray(diff_map), delimiter=",", fmt="%.6f")
