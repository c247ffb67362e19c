"""Acceptance suite: one check per shipping requirement, one verdict line each.

Run with -s to see the verdict lines as they print; without it they still
appear for any failing check. The overfit fixture trains two small models for
500 steps each, so this file takes a few minutes.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from twinspec.blocks import (
    apply_conv_block,
    build_ceb,
    build_conv_block,
    build_encoder,
    build_stcm_group,
    cceb,
    ceb,
    encoder,
    stcm_stack,
)
from twinspec.config import RunConfig
from twinspec.data import mix_at_snr, pink_noise, synth_voice, white_noise, write_corpus
from twinspec.dsp import StftConfig, istft, mag_phase, stft
from twinspec.metrics import si_sdr, snr_db, stoi
from twinspec.model import (
    ModelConfig,
    build_model,
    compute_loss,
    enhance,
    forward,
    load_model,
    save_model,
)
from twinspec.nncore import (
    ConvSpec,
    ParamStore,
    Tape,
    adam_step,
    channel_norm,
    constant,
    conv,
    grad_check,
    masked_abs_sum,
    prelu,
    sigmoid_gate,
    softplus,
    square_sum,
    transposed_conv,
)
from twinspec.cli import phase_diff_map
from twinspec.train import train_loop

DEFAULT_STFT = StftConfig(
    sample_rate=16000, win_len=320, hop=160, fft_size=320, window="hamming"
)


def verdict(label: str, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    assert ok, f"{label}: {detail}"


def params_of(store: ParamStore):
    return [p for _, p in store.items()]


def margin_target(rng, base):
    signs = rng.choice([-1.0, 1.0], size=base.shape)
    return base - signs * rng.uniform(0.5, 1.5, size=base.shape)


def test_stft_round_trip_accuracy():
    rng = np.random.default_rng(41)
    worst = 0.0
    start = time.perf_counter()
    for _ in range(100):
        n = int(rng.uniform(1.0, 3.0) * DEFAULT_STFT.sample_rate)
        x = rng.standard_normal(n)
        recon = istft(stft(x, DEFAULT_STFT))
        m = min(n, recon.size)
        w = DEFAULT_STFT.win_len
        err = np.max(np.abs(recon[w : m - w] - x[w : m - w])) / np.max(np.abs(x))
        worst = max(worst, err)
    elapsed = time.perf_counter() - start
    verdict(
        "stft round-trip",
        worst < 1e-6 and elapsed < 5.0,
        f"100 signals, worst interior rel err {worst:.2e}, {elapsed:.2f}s",
    )


def test_gradient_suite():
    start = time.perf_counter()
    worst = 0.0

    def track(err):
        nonlocal worst
        worst = max(worst, err)
        return err

    # primitives on randomized small shapes, float64
    rng = np.random.default_rng(50)
    spec = ConvSpec(in_channels=2, out_channels=3, kernel=(2, 3), stride=(1, 2))
    x = constant(rng.standard_normal((1, 2, 5, 7)))
    w = constant(rng.standard_normal(spec.weight_shape()) * 0.4)
    b = constant(rng.standard_normal(3) * 0.1)
    track(grad_check(lambda t, i: square_sum(t, conv(t, x, w, b, spec)), [x, w, b], rng=rng))

    up = ConvSpec(in_channels=3, out_channels=2, kernel=(2, 3), stride=(1, 2))
    xu = constant(rng.standard_normal((1, 3, 4, 5)))
    wu = constant(rng.standard_normal(up.weight_shape()) * 0.4)
    bu = constant(rng.standard_normal(2) * 0.1)
    track(
        grad_check(
            lambda t, i: square_sum(t, transposed_conv(t, xu, wu, bu, up)), [xu, wu, bu], rng=rng
        )
    )

    a = constant(rng.standard_normal((2, 3, 4)))
    g = constant(rng.standard_normal((2, 3, 4)))
    track(grad_check(lambda t, i: square_sum(t, sigmoid_gate(t, a, g)), [a, g], rng=rng))

    xp = constant(rng.standard_normal((2, 3, 4, 5)) + 0.2)
    al = constant(np.abs(rng.standard_normal(3)) + 0.1)
    track(grad_check(lambda t, i: square_sum(t, prelu(t, xp, al)), [xp, al], rng=rng))

    xs = constant(rng.standard_normal((3, 9)))
    track(grad_check(lambda t, i: square_sum(t, softplus(t, xs)), [xs], rng=rng))

    xn = constant(rng.standard_normal((2, 4, 3, 5)))
    gn = constant(rng.standard_normal(4) * 0.5 + 1.0)
    bn = constant(rng.standard_normal(4) * 0.1)
    track(
        grad_check(lambda t, i: square_sum(t, channel_norm(t, xn, gn, bn)), [xn, gn, bn], rng=rng)
    )

    # composite blocks
    rng = np.random.default_rng(51)
    store = ParamStore()
    pc = build_ceb(store, "ceb", channels=4, hidden=2, kernel=(2, 3), rng=rng)
    store.promote(np.float64)
    xc = constant(rng.standard_normal((1, 4, 3, 5)))
    tc = margin_target(rng, ceb(None, xc, pc).data)
    track(
        grad_check(
            lambda t, i: masked_abs_sum(t, ceb(t, xc, pc), tc),
            [xc] + params_of(store),
            rng=rng,
            max_samples=4,
        )
    )

    store = ParamStore()
    pg = build_ceb(store, "cceb", channels=4, hidden=2, kernel=(2, 3), rng=rng, com_channels=4)
    store.promote(np.float64)
    xg = constant(rng.standard_normal((1, 4, 3, 5)))
    cg = constant(rng.standard_normal((1, 4, 3, 5)))
    tg = margin_target(rng, cceb(None, xg, cg, pg).data)
    track(
        grad_check(
            lambda t, i: masked_abs_sum(t, cceb(t, xg, cg, pg), tg),
            [xg, cg] + params_of(store),
            rng=rng,
            max_samples=4,
        )
    )

    store = ParamStore()
    units = build_stcm_group(store, "g", width=4, hidden=3, dilations=(1, 2), rng=rng)
    store.promote(np.float64)
    xt = constant(rng.standard_normal((1, 4, 9)))
    tt = margin_target(rng, stcm_stack(None, xt, units).data)
    track(
        grad_check(
            lambda t, i: masked_abs_sum(t, stcm_stack(t, xt, units), tt),
            [xt] + params_of(store),
            rng=rng,
            max_samples=4,
        )
    )

    # full tiny model, loss gradient over every parameter
    tiny = ModelConfig(
        n_bins=21, stages=2, channels=4, expert_channels=2,
        tcm_groups=1, tcm_units=2, tcm_hidden=4,
    )
    for seed in (0, 1, 2):
        model = build_model(tiny, seed=seed)
        model.store.promote(np.float64)
        mrng = np.random.default_rng(100 + seed)
        noisy = mrng.standard_normal((1, 2, 4, 21))
        real = mrng.standard_normal((1, 4, 21))
        imag = mrng.standard_normal((1, 4, 21))
        ref_mag = np.hypot(real, imag)
        mask = np.ones((1, 4))

        def objective(tape, _):
            est = forward(tape, model, noisy)
            total, _, _ = compute_loss(tape, est, ref_mag, real, imag, mask, 0.5)
            return total

        track(grad_check(objective, params_of(model.store), rng=mrng, max_samples=2))

    elapsed = time.perf_counter() - start
    verdict(
        "gradient suite",
        worst < 1e-5 and elapsed < 120.0,
        f"primitives + CEB/CCEB/S-TCM/full tiny model, worst rel err {worst:.2e}, {elapsed:.1f}s",
    )


def test_causality_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(60)
    holds = True

    # plain causal conv
    spec = ConvSpec(in_channels=2, out_channels=2, kernel=(3, 3), dilation=(2, 1))
    w = constant(rng.standard_normal(spec.weight_shape()))
    b = constant(rng.standard_normal(2))
    x1 = rng.standard_normal((1, 2, 20, 5))
    x2 = x1.copy()
    x2[:, :, 11:, :] += 1.0
    y1 = conv(None, constant(x1), w, b, spec).data
    y2 = conv(None, constant(x2), w, b, spec).data
    holds &= np.array_equal(y1[:, :, :11], y2[:, :, :11])

    # S-TCM group
    store = ParamStore()
    units = build_stcm_group(store, "g", width=4, hidden=4, dilations=(1, 2, 4), rng=rng)
    s1 = rng.standard_normal((1, 4, 30)).astype(np.float32)
    s2 = s1.copy()
    s2[:, :, 14:] -= 2.0
    o1 = stcm_stack(None, constant(s1), units).data
    o2 = stcm_stack(None, constant(s2), units).data
    holds &= np.array_equal(o1[:, :, :14], o2[:, :, :14])

    # encoder stack with taps
    store = ParamStore()
    pe = build_encoder(
        store, "enc", in_channels=2, channels=4, hidden=2, kernel=(2, 3), n_stages=3, rng=rng
    )
    e1 = rng.standard_normal((1, 2, 16, 41)).astype(np.float32)
    e2 = e1.copy()
    e2[:, :, 9:, :] += 0.7
    lat1, taps1 = encoder(None, constant(e1), pe)
    lat2, taps2 = encoder(None, constant(e2), pe)
    holds &= np.array_equal(lat1.data[:, :, :9], lat2.data[:, :, :9])
    for t1, t2 in zip(taps1, taps2):
        holds &= np.array_equal(t1.data[:, :, :9], t2.data[:, :, :9])

    # end-to-end model
    tiny = ModelConfig(
        n_bins=41, stages=3, channels=8, expert_channels=4,
        tcm_groups=1, tcm_units=3, tcm_hidden=8,
    )
    model = build_model(tiny, seed=5)
    m1 = rng.standard_normal((1, 2, 10, 41)).astype(np.float32)
    m2 = m1.copy()
    m2[:, :, 6:, :] += 1.5
    f1 = forward(None, model, m1)
    f2 = forward(None, model, m2)
    holds &= np.array_equal(f1.mag.data[:, :6], f2.mag.data[:, :6])
    holds &= np.array_equal(f1.ri.data[:, :6], f2.ri.data[:, :6])
    holds &= not np.array_equal(f1.mag.data[:, 6:], f2.mag.data[:, 6:])

    elapsed = time.perf_counter() - start
    verdict(
        "causality suite",
        bool(holds) and elapsed < 60.0,
        f"conv, S-TCM, encoder, end-to-end model untouched before the cut, {elapsed:.1f}s",
    )


def test_architecture_scale():
    counts = {}
    base = ModelConfig()
    for name, cfg in (
        ("default", base),
        ("no_phase", replace(base, no_phase=True)),
        ("no_compensation", replace(base, no_compensation=True)),
        ("no_experts", replace(base, no_experts=True)),
    ):
        model = build_model(cfg, seed=0)
        counts[name] = sum(p.data.size for _, p in model.store.items())
    ok = (
        abs(counts["default"] - 3_210_000) <= 0.25 * 3_210_000
        and counts["no_phase"] < counts["no_compensation"] < counts["default"]
        and counts["no_experts"] > counts["default"]
        and abs(counts["no_phase"] - 1_600_000) <= 0.25 * 1_600_000
    )
    verdict(
        "architecture scale",
        ok,
        f"default {counts['default']:,}, no_phase {counts['no_phase']:,}, "
        f"no_compensation {counts['no_compensation']:,}, no_experts {counts['no_experts']:,}",
    )


def test_snr_exactness():
    rng = np.random.default_rng(70)
    start = time.perf_counter()
    worst = 0.0
    targets = (-5.0, 0.0, 5.0, 10.0)
    for k in range(200):
        snr = targets[k % 4]
        dur = float(rng.uniform(0.5, 1.5))
        clean = synth_voice(dur, seed=1000 + k)
        track = (
            white_noise(2.0, seed=2000 + k) if k % 2 == 0 else pink_noise(2.0, seed=2000 + k)
        )
        _, noise, _ = mix_at_snr(clean, track, snr, seed=3000 + k)
        worst = max(worst, abs(snr_db(clean, noise) - snr))
    elapsed = time.perf_counter() - start
    verdict(
        "snr exactness",
        worst <= 0.1 and elapsed < 10.0,
        f"200 mixtures, worst deviation {worst:.2e} dB, {elapsed:.2f}s",
    )


OVERFIT_CFG = ModelConfig(
    n_bins=161, stages=2, channels=16, expert_channels=32,
    tcm_groups=1, tcm_units=6, tcm_hidden=16,
)


def run_overfit(no_compensation: bool):
    clean = synth_voice(1.0, seed=5)
    mixture, _, _ = mix_at_snr(clean, white_noise(2.0, seed=105), 0.0, seed=205)
    cfg = replace(OVERFIT_CFG, no_compensation=no_compensation)
    model = build_model(cfg, seed=0)

    spec = stft(mixture, DEFAULT_STFT)
    noisy = np.stack([spec.real, spec.imag])[None]
    ref = stft(clean, DEFAULT_STFT)
    ref_mag = mag_phase(ref)[0].values[None]
    ref_real, ref_imag = ref.real[None], ref.imag[None]
    mask = np.ones((1, spec.n_frames), dtype=np.float32)

    start = time.perf_counter()
    initial = final = None
    for _ in range(500):
        tape = Tape()
        est = forward(tape, model, noisy)
        total, _, _ = compute_loss(tape, est, ref_mag, ref_real, ref_imag, mask, 0.5)
        loss = float(total.data)
        if initial is None:
            initial = loss
        final = loss
        tape.backward(total)
        adam_step(model.store, 2e-4)
    elapsed = time.perf_counter() - start

    enhanced = enhance(model, mixture, DEFAULT_STFT)
    n = enhanced.size
    return {
        "initial": initial,
        "final": final,
        "elapsed": elapsed,
        "sisdr_noisy": si_sdr(clean[:n], mixture[:n]),
        "sisdr_enhanced": si_sdr(clean[:n], enhanced),
    }


@pytest.fixture(scope="module")
def overfit_runs():
    return {"full": run_overfit(False), "no_compensation": run_overfit(True)}


def test_overfit_single_utterance(overfit_runs):
    r = overfit_runs["full"]
    ratio = r["final"] / r["initial"]
    delta = r["sisdr_enhanced"] - r["sisdr_noisy"]
    ok = ratio < 0.30 and delta >= 5.0 and r["elapsed"] < 600.0
    verdict(
        "overfit smoke",
        ok,
        f"500 steps: loss {r['initial']:.4f} -> {r['final']:.4f} (ratio {ratio:.3f}), "
        f"SI-SDR {r['sisdr_noisy']:.2f} -> {r['sisdr_enhanced']:.2f} dB "
        f"(+{delta:.2f}), {r['elapsed']:.0f}s",
    )


def test_ablation_coherence(overfit_runs):
    full = overfit_runs["full"]["final"]
    bare = overfit_runs["no_compensation"]["final"]
    verdict(
        "ablation coherence",
        full <= bare,
        f"final loss with compensation {full:.6f} <= without {bare:.6f}",
    )


def test_metric_sanity():
    x = synth_voice(2.0, seed=1)
    identity = stoi(x, x)

    noise = white_noise(4.0, seed=2)
    means = []
    for snr in (10.0, 5.0, 0.0, -5.0):
        scores = [
            stoi(v, mix_at_snr(v, noise, snr, seed=20 + s)[0])
            for s, v in ((s, synth_voice(2.5, seed=10 + s)) for s in range(4))
        ]
        means.append(float(np.mean(scores)))
    decreasing = all(a > b for a, b in zip(means, means[1:]))

    rng = np.random.default_rng(8)
    worst_sisdr = 0.0
    for _ in range(20):
        ref = rng.standard_normal(500)
        est = rng.standard_normal(500) + rng.uniform(-2, 2) * ref
        scale = np.dot(est, ref) / np.dot(ref, ref)
        target = scale * ref
        oracle = 10.0 * np.log10(np.sum(target**2) / np.sum((est - target) ** 2))
        worst_sisdr = max(worst_sisdr, abs(si_sdr(ref, est) - min(oracle, 60.0)))

    ok = abs(identity - 1.0) <= 1e-6 and decreasing and worst_sisdr <= 1e-6
    verdict(
        "metric sanity",
        ok,
        f"stoi(x,x)={identity:.8f}, band means {['%.3f' % m for m in means]} decreasing, "
        f"si_sdr oracle gap {worst_sisdr:.2e} dB",
    )


def test_phase_difference_map():
    rng = np.random.default_rng(90)
    x = synth_voice(1.0, seed=9)
    _, pa = mag_phase(stft(x, DEFAULT_STFT))
    same = phase_diff_map(pa, pa)
    identity_ok = np.max(np.abs(same - 1.0)) <= 1e-6

    y = rng.standard_normal(x.size)
    _, pb = mag_phase(stft(y, DEFAULT_STFT))
    mixed = phase_diff_map(pa, pb)
    range_ok = mixed.min() >= -1.0 - 1e-6 and mixed.max() <= 1.0 + 1e-6
    verdict(
        "phase difference map",
        identity_ok and range_ok,
        f"identity within {np.max(np.abs(same - 1.0)):.2e} of 1, "
        f"values in [{mixed.min():.6f}, {mixed.max():.6f}]",
    )


def test_determinism_and_persistence(tmp_path):
    manifest = write_corpus(tmp_path / "corpus", n_utts=4, seed=11, duration_range=(0.8, 1.2))
    cfg = RunConfig(
        stages=2, channels=8, expert_channels=4, tcm_groups=1, tcm_units=2,
        tcm_hidden=8, epochs=1, batch_size=2, seed=3,
    )
    a = train_loop(cfg, manifest, tmp_path / "a")
    b = train_loop(cfg, manifest, tmp_path / "b")
    bitwise = (
        a.loss_log_path.read_bytes() == b.loss_log_path.read_bytes()
        and a.checkpoint_path.read_bytes() == b.checkpoint_path.read_bytes()
    )

    model, _ = load_model(a.checkpoint_path)
    rng = np.random.default_rng(12)
    probe = rng.standard_normal((1, 2, 7, 161)).astype(np.float32)
    before = forward(None, model, probe)
    save_model(model, tmp_path / "again.ckpt", extra={"epochs_done": "1"})
    reloaded, _ = load_model(tmp_path / "again.ckpt")
    after = forward(None, reloaded, probe)
    round_trip = np.array_equal(before.mag.data, after.mag.data) and np.array_equal(
        before.ri.data, after.ri.data
    )
    verdict(
        "determinism and persistence",
        bitwise and round_trip,
        "fixed-seed runs bit-identical, checkpoint round-trip forward bit-exact",
    )
