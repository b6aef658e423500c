import json

import numpy as np
import pytest

from conftest import DATASET, synthetic_images
from neuromem import vision
from neuromem.cli import main
from neuromem.formats import ImageGrid, read_pgm, write_pgm


def rows(path):
    lines = path.read_text().splitlines()
    return lines[0], [list(map(float, ln.split(","))) for ln in lines[1:]]


@pytest.fixture
def noise_pgm(tmp_path):
    p = tmp_path / "noise.pgm"
    p.write_bytes(write_pgm(ImageGrid(synthetic_images(16)["noise"])))
    return p


def test_device_sweep_writes_csv_meta_and_plot(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["device-sweep", "--out", str(out), "--dt", "1e-4", "--plot"]) == 0
    header, data = rows(out)
    assert header == "t,v,i,x,memristance"
    data = np.array(data)
    zero = data[:, 1] == 0
    assert zero.any() and np.all(data[zero, 2] == 0)
    meta = json.loads((tmp_path / "sweep.csv.meta.json").read_text())
    assert meta["profile"] == "hp-linear" and meta["seed"] == 0
    assert str(out) in meta["outputs"]
    assert (tmp_path / "sweep.csv.png").stat().st_size > 0


def test_zero_amplitude_sweep_is_constant(tmp_path):
    out = tmp_path / "flat.csv"
    assert main(["device-sweep", "--amplitude", "0", "--duration", "0.01", "--out", str(out)]) == 0
    _, data = rows(out)
    assert len({r[4] for r in data}) == 1


def test_pulse_sweep_programs_monotonically(tmp_path):
    out = tmp_path / "pulses.csv"
    argv = ["device-sweep", "--waveform", "pulse", "--x0", "0", "--duration", "0.2", "--dt", "1e-4", "--out", str(out)]
    assert main(argv) == 0
    _, data = rows(out)
    m = np.array(data)[:, 4]
    assert np.all(np.diff(m) <= 0) and m[-1] < m[0]


def test_profile_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("NEUROMEM_PROFILE", "team")
    out = tmp_path / "team.csv"
    assert main(["device-sweep", "--duration", "0.01", "--out", str(out)]) == 0
    assert json.loads((tmp_path / "team.csv.meta.json").read_text())["profile"] == "team"


def test_bad_profile_and_usage_exit_codes(tmp_path):
    out = str(tmp_path / "x.csv")
    assert main(["device-sweep", "--profile", "missing", "--out", out]) == 2
    assert main(["device-sweep"]) == 1
    assert main(["no-such-command"]) == 1
    assert main(["activation", "--block", "sigmoid", "--out", out]) == 1
    assert main(["device-sweep", "--x0", "3", "--out", out]) == 1


def test_bridge_program_and_read(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["bridge", "program", "--target", "0.9", "--out", str(out)]) == 0
    data = out.read_text().splitlines()[1].split(",")
    target, width, weight = float(data[0]), float(data[1]), float(data[2])
    assert abs(weight - target) <= 0.01 and width > 0
    out2 = tmp_path / "r.csv"
    assert main(["bridge", "read", "--width", repr(width), "--out", str(out2)]) == 0
    assert float(out2.read_text().splitlines()[1].split(",")[2]) == weight
    assert main(["bridge", "program", "--target", "0", "--out", str(out)]) == 0
    assert float(out.read_text().splitlines()[1].split(",")[1]) == 0.0
    assert main(["bridge", "program", "--target", "0.99", "--out", str(out)]) == 2


def test_bridge_widths_monotone(tmp_path):
    widths = []
    for t in ("0.2", "0.6"):
        out = tmp_path / f"b{t}.csv"
        assert main(["bridge", "program", "--target", t, "--out", str(out)]) == 0
        widths.append(float(out.read_text().splitlines()[1].split(",")[1]))
    assert widths[0] < widths[1]


def test_kernel_command_matches_library(tmp_path, noise_pgm):
    out = tmp_path / "blur.pgm"
    assert main(["kernel", "--image", str(noise_pgm), "--kernel", "blur", "--out", str(out)]) == 0
    got = read_pgm(out.read_bytes())
    assert got == vision.run_kernel(read_pgm(noise_pgm.read_bytes()), vision.BLUR)
    outb = tmp_path / "blur_b.pgm"
    assert main(["kernel", "--image", str(noise_pgm), "--mode", "bridge", "--out", str(outb)]) == 0
    diff = read_pgm(outb.read_bytes()).data.astype(int) - got.data.astype(int)
    assert np.max(np.abs(diff)) <= 2


def test_kernel_inline_matrix_and_flat_image(tmp_path):
    flat = tmp_path / "flat.pgm"
    flat.write_bytes(write_pgm(ImageGrid(np.full((6, 6), 90))))
    out = tmp_path / "edge.pgm"
    assert main(["kernel", "--image", str(flat), "--kernel", "edge", "--out", str(out)]) == 0
    assert np.all(read_pgm(out.read_bytes()).data == 0)
    inline = "-0.1 -0.1 -0.1; -0.1 0.8 -0.1; -0.1 -0.1 -0.1"
    assert main(["kernel", "--image", str(flat), "--kernel", inline, "--out", str(out)]) == 0
    tiny = tmp_path / "tiny.pgm"
    tiny.write_bytes(write_pgm(ImageGrid(np.zeros((2, 2)))))
    assert main(["kernel", "--image", str(tiny), "--out", str(out)]) == 2


def test_ann_train_and_eval(tmp_path):
    model = tmp_path / "model.txt"
    argv = ["ann", "train", "--data", str(DATASET), "--epochs", "300", "--seed", "1", "--out", str(model)]
    assert main(argv) == 0
    assert (tmp_path / "model.txt.splits").read_text().startswith("train ")
    reports = []
    for k in range(2):
        rep = tmp_path / f"rep{k}.csv"
        argv = ["ann", "eval", "--data", str(DATASET), "--seed", "1", "--model", str(model), "--out", str(rep)]
        assert main(argv) == 0
        reports.append(rep.read_text())
    assert reports[0] == reports[1]
    lines = reports[0].splitlines()
    assert lines[0] == "split,n,accuracy,tn,fp,fn,tp"
    test = lines[3].split(",")
    assert test[0] == "test" and float(test[2]) >= 0.9
    assert sum(int(v) for v in test[3:]) == int(test[1])


def test_ann_missing_dataset(tmp_path, capsys):
    assert main(["ann", "eval", "--data", str(tmp_path / "nope"), "--model", "m", "--out", str(tmp_path / "r")]) == 2
    assert "UCI" in capsys.readouterr().err


@pytest.mark.parametrize(
    "block, lo, hi, n",
    [("relu", -1e-3, 1e-3, 201), ("tanh", 1e-5, 2e-3, 200), ("maxpool", 0.0, 2.0, 201)],
)
def test_activation_sweeps(tmp_path, block, lo, hi, n):
    out = tmp_path / f"{block}.csv"
    assert main(["activation", "--block", block, "--out", str(out)]) == 0
    header, data = rows(out)
    x = np.array(data)[:, 0]
    assert header == "input,output"
    assert len(x) == n and x[0] == pytest.approx(lo) and x[-1] == pytest.approx(hi)


def test_pool_curve_and_image(tmp_path, noise_pgm):
    out = tmp_path / "pool.csv"
    assert main(["pool", "--out", str(out)]) == 0
    _, data = rows(out)
    for v, y in data:
        assert y == (0.7 if v < 0.7 else v)
    img_out = tmp_path / "pooled.pgm"
    assert main(["pool", "--image", str(noise_pgm), "--out", str(img_out), "--plot"]) == 0
    assert read_pgm(img_out.read_bytes()).data.shape == (8, 8)
    assert (tmp_path / "pooled.pgm.png").exists()
