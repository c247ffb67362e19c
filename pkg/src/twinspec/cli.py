"""Command-line front end: mix, train, enhance, eval, phase-diff, params.

Exit codes: 0 success, 2 configuration problems, 3 data/shape problems,
4 numeric failures. Every subcommand is deterministic given its seed, so
re-running with identical inputs reproduces outputs byte for byte.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, load_run_config
from .data import load_mixture, read_manifest, write_corpus
from .dsp import StftConfig, UnitPhase, mag_phase, read_wav, stft, write_wav
from .errors import (
    ConfigError,
    DataError,
    DimensionError,
    InvariantError,
    NumericError,
    StateError,
)
from .figures import (
    eval_figure,
    loss_figure,
    phase_figure,
    write_phase_csv,
    write_phase_png,
)
from .metrics import EvalRow, si_sdr, stoi, write_eval_csv
from .model import build_model, count_params, enhance, load_model
from .train import train_loop


def phase_diff_map(phase_a: UnitPhase, phase_b: UnitPhase) -> np.ndarray:
    """cos of the per-bin phase difference, straight from unit-phase planes."""
    if phase_a.cos.shape != phase_b.cos.shape:
        raise DimensionError(
            f"phase shapes differ: {phase_a.cos.shape} vs {phase_b.cos.shape}"
        )
    return phase_a.cos * phase_b.cos + phase_a.sin * phase_b.sin


def thread_limit() -> int:
    """Worker cap for the mixing pool, overridable via TWINSPEC_THREADS."""
    raw = os.environ.get("TWINSPEC_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        limit = int(raw)
    except ValueError as exc:
        raise ConfigError(f"TWINSPEC_THREADS must be an integer, got {raw!r}") from exc
    if limit < 1:
        raise ConfigError(f"TWINSPEC_THREADS must be at least 1, got {limit}")
    return limit


def _run_config(args) -> RunConfig:
    overrides = {}
    for flag in ("no_phase", "no_experts", "no_compensation"):
        if getattr(args, flag, False):
            overrides[flag] = True
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "config", None):
        return load_run_config(args.config, overrides)
    return RunConfig(**overrides)


def _stft_from_extra(extra: dict[str, str]) -> StftConfig:
    defaults = RunConfig()
    try:
        return StftConfig(
            sample_rate=int(extra.get("sample_rate", defaults.sample_rate)),
            win_len=int(extra.get("win_len", defaults.win_len)),
            hop=int(extra.get("hop", defaults.hop)),
            fft_size=int(extra.get("fft_size", defaults.fft_size)),
            window=extra.get("window", defaults.window),
        )
    except ValueError as exc:
        raise DataError(f"checkpoint carries a bad analysis setting: {exc}") from exc


def _mixture_name(row) -> str:
    return f"{Path(row.clean_path).stem}__{row.noise_id}__snr{row.snr_db:+g}dB.wav"


def cmd_mix(args) -> int:
    limit = thread_limit()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.manifest:
        manifest = Path(args.manifest)
    else:
        seed = args.seed if args.seed is not None else 0
        manifest = write_corpus(out_dir / "corpus", n_utts=args.synth_utts, seed=seed)
        print(f"wrote corpus manifest {manifest}")
    corpus_dir = manifest.parent
    rows = read_manifest(manifest)
    mix_dir = out_dir / "mixtures"
    mix_dir.mkdir(parents=True, exist_ok=True)
    rate = RunConfig().sample_rate if not args.config else load_run_config(args.config).sample_rate

    def materialize(row):
        mixture, _ = load_mixture(row, corpus_dir, rate=rate)
        path = mix_dir / _mixture_name(row)
        write_wav(path, mixture, rate)
        return path

    with ThreadPoolExecutor(max_workers=max(1, min(limit, len(rows)))) as pool:
        paths = list(pool.map(materialize, rows))
    for path in sorted(paths):
        print(path)
    return 0


def cmd_train(args) -> int:
    cfg = _run_config(args)
    result = train_loop(
        cfg,
        args.manifest,
        args.out,
        max_steps=args.max_steps,
        resume_from=args.checkpoint,
    )
    loss_figure(result.loss_log_path, Path(args.out) / "loss_curves.png")
    print(
        f"trained {result.steps} steps over {result.epochs_done} epochs: "
        f"loss {result.initial_loss:.6f} -> {result.final_loss:.6f}"
    )
    print(f"checkpoint {result.checkpoint_path}")
    print(f"loss log {result.loss_log_path}")
    return 0


def cmd_enhance(args) -> int:
    model, extra = load_model(args.checkpoint)
    stft_cfg = _stft_from_extra(extra)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for wav_path in args.wavs:
        wav, _ = read_wav(wav_path, expected_rate=stft_cfg.sample_rate)
        cleaned = enhance(model, wav, stft_cfg)
        out_path = out_dir / f"{Path(wav_path).stem}_enhanced.wav"
        write_wav(out_path, cleaned, stft_cfg.sample_rate)
        print(out_path)
    return 0


def cmd_eval(args) -> int:
    model, extra = load_model(args.checkpoint)
    stft_cfg = _stft_from_extra(extra)
    manifest = Path(args.manifest)
    rows = read_manifest(manifest)
    eval_rows = [r for r in rows if r.split == "eval"] or rows
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = []
    for row in eval_rows:
        mixture, clean = load_mixture(row, manifest.parent, rate=stft_cfg.sample_rate)
        cleaned = enhance(model, mixture, stft_cfg)
        n = min(clean.size, cleaned.size)
        report.append(
            EvalRow(
                utterance_id=Path(row.clean_path).stem,
                snr_db=row.snr_db,
                stoi_noisy=stoi(clean[:n], mixture[:n], rate=stft_cfg.sample_rate),
                stoi_enhanced=stoi(clean[:n], cleaned[:n], rate=stft_cfg.sample_rate),
                sisdr_noisy=si_sdr(clean[:n], mixture[:n]),
                sisdr_enhanced=si_sdr(clean[:n], cleaned[:n]),
            )
        )
    csv_path = out_dir / "eval.csv"
    write_eval_csv(csv_path, report)
    eval_figure(report, out_dir / "eval_summary.png")
    d_stoi = float(np.mean([r.stoi_enhanced - r.stoi_noisy for r in report]))
    d_sisdr = float(np.mean([r.sisdr_enhanced - r.sisdr_noisy for r in report]))
    print(f"evaluated {len(report)} utterances")
    print(f"mean intelligibility change {d_stoi:+.4f}")
    print(f"mean SI-SDR change {d_sisdr:+.2f} dB")
    print(csv_path)
    return 0


def cmd_phase_diff(args) -> int:
    cfg = _run_config(args)
    stft_cfg = cfg.stft()
    a, _ = read_wav(args.wav_a, expected_rate=stft_cfg.sample_rate)
    b, _ = read_wav(args.wav_b, expected_rate=stft_cfg.sample_rate)
    n = min(a.size, b.size)
    _, phase_a = mag_phase(stft(a[:n], stft_cfg))
    _, phase_b = mag_phase(stft(b[:n], stft_cfg))
    diff = phase_diff_map(phase_a, phase_b)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_phase_csv(diff, out_dir / "phase_diff.csv")
    write_phase_png(diff, out_dir / "phase_diff.png")
    phase_figure(diff, out_dir / "phase_diff_view.png")
    print(f"phase agreement: mean {diff.mean():+.4f}, min {diff.min():+.4f}")
    print(out_dir / "phase_diff.csv")
    return 0


def cmd_params(args) -> int:
    cfg = _run_config(args)
    base = replace(cfg.model(), no_phase=False, no_experts=False, no_compensation=False)
    variants = [
        ("default", base),
        ("no_phase", replace(base, no_phase=True)),
        ("no_compensation", replace(base, no_compensation=True)),
        ("no_experts", replace(base, no_experts=True)),
    ]
    for name, model_cfg in variants:
        n = count_params(build_model(model_cfg, seed=0))
        print(f"{name}\t{n}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinspec",
        description="Two-branch speech enhancement: synthesis, training, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed=True):
        p.add_argument("--config", help="key=value run configuration file")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p_mix = sub.add_parser("mix", help="materialize mixtures (or synthesize a corpus first)")
    p_mix.add_argument("--manifest", help="existing manifest; omit to synthesize a corpus")
    p_mix.add_argument("--out", required=True, help="output directory")
    p_mix.add_argument("--synth-utts", type=int, default=8, help="corpus size when synthesizing")
    add_common(p_mix)
    p_mix.set_defaults(func=cmd_mix)

    p_train = sub.add_parser("train", help="train a model from a manifest")
    p_train.add_argument("--manifest", required=True)
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--checkpoint", help="resume from this checkpoint")
    p_train.add_argument("--max-steps", type=int, default=None)
    p_train.add_argument("--no-phase", action="store_true", dest="no_phase")
    p_train.add_argument("--no-experts", action="store_true", dest="no_experts")
    p_train.add_argument("--no-compensation", action="store_true", dest="no_compensation")
    add_common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_enh = sub.add_parser("enhance", help="run a checkpoint over waveforms")
    p_enh.add_argument("wavs", nargs="+", metavar="WAV")
    p_enh.add_argument("--checkpoint", required=True)
    p_enh.add_argument("--out", required=True)
    p_enh.set_defaults(func=cmd_enhance)

    p_eval = sub.add_parser("eval", help="score a checkpoint on the eval split")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--out", required=True)
    p_eval.set_defaults(func=cmd_eval)

    p_pd = sub.add_parser("phase-diff", help="map of cos(phase difference) between two takes")
    p_pd.add_argument("wav_a", metavar="WAV_A")
    p_pd.add_argument("wav_b", metavar="WAV_B")
    p_pd.add_argument("--out", required=True)
    add_common(p_pd, seed=False)
    p_pd.set_defaults(func=cmd_phase_diff)

    p_par = sub.add_parser("params", help="parameter counts for the model and its variants")
    p_par.add_argument("--no-phase", action="store_true", dest="no_phase")
    p_par.add_argument("--no-experts", action="store_true", dest="no_experts")
    p_par.add_argument("--no-compensation", action="store_true", dest="no_compensation")
    add_common(p_par, seed=False)
    p_par.set_defaults(func=cmd_params)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (DataError, DimensionError, InvariantError, StateError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
