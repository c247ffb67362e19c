import numpy as np
import pytest
from PIL import Image

from twinspec.errors import DataError
from twinspec.figures import (
    eval_figure,
    loss_figure,
    phase_figure,
    write_phase_csv,
    write_phase_png,
)
from twinspec.metrics import EvalRow

PNG_MAGIC = b"\x89PNG"


def test_phase_png_levels_and_orientation(tmp_path):
    # frames along rows, bins along columns; png puts bin 0 at the bottom
    diff = np.array([[-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]])
    path = tmp_path / "map.png"
    write_phase_png(diff, path)
    img = np.asarray(Image.open(path))
    assert img.shape == (3, 2)
    expected = np.array([[255, 128], [128, 0], [0, 255]], dtype=np.uint8)
    assert np.array_equal(img, expected)


def test_phase_png_rejects_non_2d(tmp_path):
    with pytest.raises(DataError):
        write_phase_png(np.zeros(5), tmp_path / "x.png")


def test_phase_csv_round_trip(tmp_path):
    diff = np.linspace(-1.0, 1.0, 12).reshape(3, 4)
    path = tmp_path / "map.csv"
    write_phase_csv(diff, path)
    back = np.loadtxt(path, delimiter=",")
    assert back.shape == (3, 4)
    assert np.allclose(back, diff, atol=5e-7)


def test_phase_figure_writes_png(tmp_path):
    path = tmp_path / "view.png"
    phase_figure(np.zeros((10, 6)), path)
    assert path.read_bytes()[:4] == PNG_MAGIC


def test_loss_figure_from_log(tmp_path):
    log = tmp_path / "loss_log.csv"
    log.write_text(
        "step,L,L_mag,L_RI\n1,0.5,0.3,0.7\n2,0.4,0.25,0.55\n3,0.35,0.2,0.5\n"
    )
    path = tmp_path / "loss.png"
    loss_figure(log, path)
    assert path.read_bytes()[:4] == PNG_MAGIC


def test_loss_figure_rejects_bad_header(tmp_path):
    log = tmp_path / "loss_log.csv"
    log.write_text("iteration,loss\n1,0.5\n")
    with pytest.raises(DataError):
        loss_figure(log, tmp_path / "loss.png")


def test_loss_figure_rejects_empty_log(tmp_path):
    log = tmp_path / "loss_log.csv"
    log.write_text("step,L,L_mag,L_RI\n")
    with pytest.raises(DataError):
        loss_figure(log, tmp_path / "loss.png")


def test_loss_figure_missing_file(tmp_path):
    with pytest.raises(DataError):
        loss_figure(tmp_path / "absent.csv", tmp_path / "loss.png")


def test_eval_figure(tmp_path):
    rows = [
        EvalRow("utt0000", 0.0, 0.6, 0.8, 1.0, 6.0),
        EvalRow("utt0001", 5.0, 0.7, 0.85, 4.0, 9.0),
    ]
    path = tmp_path / "eval.png"
    eval_figure(rows, path)
    assert path.read_bytes()[:4] == PNG_MAGIC


def test_eval_figure_rejects_empty(tmp_path):
    with pytest.raises(DataError):
        eval_figure([], tmp_path / "eval.png")
