"""End-to-end runs of every subcommand plus exit-code and helper checks."""

import numpy as np
import pytest

from twinspec.cli import main, phase_diff_map, thread_limit
from twinspec.dsp import StftConfig, mag_phase, read_wav, stft
from twinspec.errors import ConfigError, DimensionError
from twinspec.metrics import read_eval_csv

CFG_TEXT = (
    "stages = 2\n"
    "channels = 8\n"
    "expert_channels = 4\n"
    "tcm_groups = 1\n"
    "tcm_units = 2\n"
    "tcm_hidden = 8\n"
    "epochs = 1\n"
    "batch_size = 2\n"
    "seed = 3\n"
)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One mix -> train pipeline shared by the downstream subcommand tests."""
    root = tmp_path_factory.mktemp("cli")
    cfg_path = root / "run.cfg"
    cfg_path.write_text(CFG_TEXT)
    assert main(["mix", "--out", str(root / "data"), "--synth-utts", "4", "--seed", "7"]) == 0
    manifest = root / "data" / "corpus" / "manifest.tsv"
    assert manifest.exists()
    assert (
        main(
            [
                "train",
                "--config",
                str(cfg_path),
                "--manifest",
                str(manifest),
                "--out",
                str(root / "run"),
            ]
        )
        == 0
    )
    return root


def test_mix_materializes_all_rows(workspace):
    wavs = sorted((workspace / "data" / "mixtures").glob("*.wav"))
    assert len(wavs) == 4
    names = [w.name for w in wavs]
    assert any("snr-5dB" in n for n in names)
    assert any("snr+10dB" in n for n in names)


def test_mix_rerun_is_byte_identical(workspace, tmp_path, monkeypatch):
    manifest = workspace / "data" / "corpus" / "manifest.tsv"
    monkeypatch.setenv("TWINSPEC_THREADS", "1")
    assert main(["mix", "--manifest", str(manifest), "--out", str(tmp_path / "one")]) == 0
    monkeypatch.setenv("TWINSPEC_THREADS", "3")
    assert main(["mix", "--manifest", str(manifest), "--out", str(tmp_path / "three")]) == 0
    ones = sorted((tmp_path / "one" / "mixtures").glob("*.wav"))
    threes = sorted((tmp_path / "three" / "mixtures").glob("*.wav"))
    assert [p.name for p in ones] == [p.name for p in threes]
    for a, b in zip(ones, threes):
        assert a.read_bytes() == b.read_bytes()
    originals = workspace / "data" / "mixtures"
    for a in ones:
        assert a.read_bytes() == (originals / a.name).read_bytes()


def test_train_outputs(workspace):
    run = workspace / "run"
    assert (run / "checkpoint.ckpt").exists()
    assert (run / "loss_log.csv").exists()
    assert (run / "loss_curves.png").read_bytes()[:4] == b"\x89PNG"
    header = (run / "loss_log.csv").read_text().splitlines()[0]
    assert header == "step,L,L_mag,L_RI"


def test_enhance_writes_wav(workspace, tmp_path):
    src = sorted((workspace / "data" / "mixtures").glob("*.wav"))[0]
    assert (
        main(
            [
                "enhance",
                str(src),
                "--checkpoint",
                str(workspace / "run" / "checkpoint.ckpt"),
                "--out",
                str(tmp_path),
            ]
        )
        == 0
    )
    out = tmp_path / f"{src.stem}_enhanced.wav"
    cleaned, rate = read_wav(out)
    original, _ = read_wav(src)
    assert rate == 16000
    assert cleaned.size <= original.size
    assert original.size - cleaned.size <= 160
    assert np.all(np.isfinite(cleaned))


def test_eval_writes_report_and_figure(workspace, tmp_path):
    assert (
        main(
            [
                "eval",
                "--manifest",
                str(workspace / "data" / "corpus" / "manifest.tsv"),
                "--checkpoint",
                str(workspace / "run" / "checkpoint.ckpt"),
                "--out",
                str(tmp_path),
            ]
        )
        == 0
    )
    rows = read_eval_csv(tmp_path / "eval.csv")
    assert len(rows) == 1  # 4 utterances -> 1 eval row
    assert rows[0].utterance_id.startswith("utt")
    assert (tmp_path / "eval_summary.png").read_bytes()[:4] == b"\x89PNG"


def test_phase_diff_identical_input_is_all_ones(workspace, tmp_path):
    wav = workspace / "data" / "corpus" / "clean" / "utt0000.wav"
    assert main(["phase-diff", str(wav), str(wav), "--out", str(tmp_path)]) == 0
    diff = np.loadtxt(tmp_path / "phase_diff.csv", delimiter=",")
    assert np.all(diff == 1.0)
    from PIL import Image

    img = np.asarray(Image.open(tmp_path / "phase_diff.png"))
    assert np.all(img == 255)
    assert (tmp_path / "phase_diff_view.png").exists()


def test_phase_diff_noisy_input_stays_in_range(workspace, tmp_path):
    clean = workspace / "data" / "corpus" / "clean" / "utt0000.wav"
    mixed = sorted((workspace / "data" / "mixtures").glob("utt0000*.wav"))[0]
    assert main(["phase-diff", str(clean), str(mixed), "--out", str(tmp_path)]) == 0
    diff = np.loadtxt(tmp_path / "phase_diff.csv", delimiter=",")
    assert diff.min() >= -1.0 - 1e-6
    assert diff.max() <= 1.0 + 1e-6
    assert diff.mean() < 0.999


def test_params_lists_all_variants(workspace, capsys):
    cfg_path = workspace / "run.cfg"
    assert main(["params", "--config", str(cfg_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    table = dict(line.split("\t") for line in lines)
    counts = {k: int(v) for k, v in table.items()}
    assert set(counts) == {"default", "no_phase", "no_compensation", "no_experts"}
    assert counts["no_phase"] < counts["no_compensation"] < counts["default"] < counts["no_experts"]


def test_phase_diff_map_values():
    cfg = StftConfig(sample_rate=16000, win_len=80, hop=40, fft_size=80)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(800)
    _, pa = mag_phase(stft(x, cfg))
    same = phase_diff_map(pa, pa)
    assert np.allclose(same, 1.0, atol=1e-12)
    _, pb = mag_phase(stft(rng.standard_normal(800), cfg))
    mixed = phase_diff_map(pa, pb)
    assert mixed.min() >= -1.0 - 1e-12
    assert mixed.max() <= 1.0 + 1e-12


def test_phase_diff_map_shape_mismatch():
    cfg = StftConfig(sample_rate=16000, win_len=80, hop=40, fft_size=80)
    rng = np.random.default_rng(1)
    _, pa = mag_phase(stft(rng.standard_normal(800), cfg))
    _, pb = mag_phase(stft(rng.standard_normal(1200), cfg))
    with pytest.raises(DimensionError):
        phase_diff_map(pa, pb)


def test_exit_code_for_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("bogus_key = 5\n")
    assert main(["params", "--config", str(bad)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_exit_code_for_missing_data(tmp_path, capsys):
    code = main(
        [
            "eval",
            "--manifest",
            str(tmp_path / "nope.tsv"),
            "--checkpoint",
            str(tmp_path / "nope.ckpt"),
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 3
    assert "data error" in capsys.readouterr().err


def test_missing_required_flag_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["train"])
    assert err.value.code == 2


def test_thread_limit_env(monkeypatch):
    monkeypatch.setenv("TWINSPEC_THREADS", "2")
    assert thread_limit() == 2
    monkeypatch.setenv("TWINSPEC_THREADS", "zebra")
    with pytest.raises(ConfigError):
        thread_limit()
    monkeypatch.setenv("TWINSPEC_THREADS", "0")
    with pytest.raises(ConfigError):
        thread_limit()
    monkeypatch.delenv("TWINSPEC_THREADS")
    assert thread_limit() >= 1
