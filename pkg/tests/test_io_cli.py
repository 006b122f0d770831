import json
import math

import numpy as np
import pytest

from sbe_wavelets.cli import main, parse_radians
from sbe_wavelets.data import make_dataset
from sbe_wavelets.io import (
    FormatError,
    load_checkpoint,
    read_lwt1,
    read_pgm,
    rescale_to_u8,
    save_checkpoint,
    write_lwt1,
    write_metrics_csv,
    write_pgm,
)
from sbe_wavelets.lattice import lattice_to_filters, named_angles
from sbe_wavelets.train import TrainConfig, evaluate, train

HAAR_EXACT = (0.4 * math.pi - math.sin(0.6 * math.pi)) / (2 * math.pi)
FAST = ["--epochs", "2", "--per-class", "20"]


def run(*argv):
    return main([str(a) for a in argv])


# -- file formats ------------------------------------------------------------


def test_lwt1_round_trip(tmp_path):
    arr = np.random.default_rng(0).normal(size=(3, 5, 7)).astype(np.float32)
    write_lwt1(tmp_path / "a.lwt", arr)
    np.testing.assert_array_equal(read_lwt1(tmp_path / "a.lwt"), arr)
    raw = (tmp_path / "a.lwt").read_bytes()
    assert raw[:4] == b"LWT1" and len(raw) == 16 + 4 * arr.size
    write_lwt1(tmp_path / "b.lwt", np.ones((4, 4)))
    assert read_lwt1(tmp_path / "b.lwt").shape == (1, 4, 4)


def test_lwt1_rejects_garbage(tmp_path):
    (tmp_path / "bad.lwt").write_bytes(b"XXXX" + bytes(12))
    with pytest.raises(FormatError):
        read_lwt1(tmp_path / "bad.lwt")
    write_lwt1(tmp_path / "short.lwt", np.ones((1, 4, 4)))
    data = (tmp_path / "short.lwt").read_bytes()
    (tmp_path / "short.lwt").write_bytes(data[:-4])
    with pytest.raises(FormatError):
        read_lwt1(tmp_path / "short.lwt")


def test_pgm_round_trip_with_comment(tmp_path):
    img = np.arange(48, dtype=np.uint8).reshape(6, 8)
    write_pgm(tmp_path / "x.pgm", img)
    np.testing.assert_array_equal(read_pgm(tmp_path / "x.pgm"), img)
    (tmp_path / "c.pgm").write_bytes(b"P5\n# a comment\n8 6\n255\n" + img.tobytes())
    np.testing.assert_array_equal(read_pgm(tmp_path / "c.pgm"), img)
    (tmp_path / "p2.pgm").write_bytes(b"P2\n2 2\n255\n0 0 0 0\n")
    with pytest.raises(FormatError):
        read_pgm(tmp_path / "p2.pgm")


def test_rescale_to_u8_flat_and_range():
    assert np.all(rescale_to_u8(np.full((3, 3), 7.0)) == 0)
    r = rescale_to_u8(np.array([[-1.0, 0.0, 1.0]]))
    assert r.dtype == np.uint8 and r.min() == 0 and r.max() == 255


def test_checkpoint_round_trip(tmp_path):
    data = make_dataset(1, per_class=20)
    model = train(data, TrainConfig(alpha=0.5, epochs=2, seed=3, per_class=20, data_seed=1))
    save_checkpoint(tmp_path / "ck", model)
    manifest = json.loads((tmp_path / "ck" / "manifest.json").read_text())
    assert manifest["architecture"]["units"][0]["mode"] == "pool"
    assert any(b["name"].endswith("running_var") for b in manifest["buffers"])
    again = load_checkpoint(tmp_path / "ck")
    for (name, p), (_, q) in zip(model.net.named_parameters(), again.net.named_parameters()):
        if name.endswith("angles"):
            np.testing.assert_array_equal(p.detach().numpy(), q.detach().numpy())
        else:
            np.testing.assert_allclose(p.detach().numpy(), q.detach().numpy(), rtol=1e-7)
    assert evaluate(again, data.x_test, data.y_test).accuracy == evaluate(
        model, data.x_test, data.y_test
    ).accuracy
    assert again.history == model.history


def test_checkpoint_missing_manifest(tmp_path):
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path)


def test_metrics_csv_layout(tmp_path):
    history = [dict(epoch=0, l_ce=1.0, l_sbe=0.1, l_total=0.55, train_acc=0.5, test_acc=0.25)]
    write_metrics_csv(tmp_path / "m.csv", history)
    raw = (tmp_path / "m.csv").read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "epoch,l_ce,l_sbe,l_total,train_acc,test_acc"
    assert lines[1] == "0,1.0,0.1,0.55,0.5,0.25"


@pytest.mark.parametrize("text, value", [("0.6pi", 0.6 * math.pi), ("pi", math.pi), ("0.4*pi", 0.4 * math.pi), ("1.25", 1.25)])
def test_parse_radians(text, value):
    assert parse_radians(text) == pytest.approx(value, abs=1e-15)


# -- design / analyze / fit ----------------------------------------------------


def test_design_haar_and_angles_identical(tmp_path):
    assert run("design", "--wavelet", "haar", "--out", tmp_path / "a.json") == 0
    assert run("design", "--angles", "0.7853981633974483", "--out", tmp_path / "b.json") == 0
    a, b = (tmp_path / "a.json").read_bytes(), (tmp_path / "b.json").read_bytes()
    assert a == b
    # sin(pi/4) in float64 lands one ulp below 1/sqrt(2)
    h0 = json.loads(a)["h0"]
    assert h0[0] == 0.7071067811865476
    assert abs(h0[1] - 0.7071067811865476) <= math.ulp(0.7071067811865476)
    assert (tmp_path / "run.json").exists()


def test_design_unknown_wavelet(capsys):
    assert run("design", "--wavelet", "db9") == 2
    assert "unknown wavelet" in capsys.readouterr().err


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit) as info:
        run("design", "--wavelet", "haar", "--bogus")
    assert info.value.code == 2


def test_analyze_haar(tmp_path):
    run("design", "--wavelet", "haar", "--out", tmp_path / "haar.json")
    assert run("analyze", "--bank", tmp_path / "haar.json", "--out", tmp_path / "r.csv") == 0
    rows = (tmp_path / "r.csv").read_text().splitlines()
    assert rows[0] == "w,mag_sq_h0,mag_sq_h1" and len(rows) == 502
    s500 = json.loads((tmp_path / "r.json").read_text())["L_SBE"]
    assert abs(s500 - HAAR_EXACT) < 2e-3
    run("analyze", "--bank", tmp_path / "haar.json", "--K", 2000, "--out", tmp_path / "r2.csv")
    s2000 = json.loads((tmp_path / "r2.json").read_text())["L_SBE"]
    assert abs(s2000 - s500) < 5e-4
    assert len((tmp_path / "r2.csv").read_text().splitlines()) == 2002


def test_analyze_corrupt_and_broken_banks(tmp_path, capsys):
    (tmp_path / "bad.json").write_text('{"taps": 2, "h0": [0.7,')
    assert run("analyze", "--bank", tmp_path / "bad.json") == 3
    assert "parse" in capsys.readouterr().err
    doc = dict(taps=4, angles=None, h0=[0.5] * 4, h1=[0.5, -0.5, 0.5, -0.5])
    (tmp_path / "nonorth.json").write_text(json.dumps(doc))
    assert run("analyze", "--bank", tmp_path / "nonorth.json") == 3


def test_design_analyze_fit_round_trip(tmp_path):
    run("design", "--wavelet", "db2", "--out", tmp_path / "bank.json")
    run("analyze", "--bank", tmp_path / "bank.json", "--out", tmp_path / "resp.csv")
    assert run("fit", "--bank", tmp_path / "bank.json", "--out", tmp_path / "fit.json") == 0
    before = np.array(json.loads((tmp_path / "bank.json").read_text())["h0"])
    after = np.array(json.loads((tmp_path / "fit.json").read_text())["h0"])
    assert np.max(np.abs(after - before)) < 1e-8
    assert json.loads((tmp_path / "run.json").read_text())["residual"] < 1e-8


def test_fit_non_orthogonal_exit_3():
    assert run("fit", "--h0", "0.5,0.5,0.5,0.5") == 3


def test_subcommands_idempotent(tmp_path):
    for d in ("a", "b"):
        run("design", "--angles", "0.3,-1.2", "--out", tmp_path / d / "bank.json")
        run("analyze", "--bank", tmp_path / d / "bank.json", "--out", tmp_path / d / "r.csv")
    for name in ("bank.json", "r.csv", "r.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# -- dwt -----------------------------------------------------------------------


def test_dwt_constant_image(tmp_path):
    write_pgm(tmp_path / "const.pgm", np.full((8, 8), 64, dtype=np.uint8))
    assert run("dwt", "--bank", "haar", "--in", tmp_path / "const.pgm", "--out-dir", tmp_path / "d") == 0
    np.testing.assert_allclose(read_lwt1(tmp_path / "d" / "x_ll.lwt"), 128.0, atol=1e-4)
    for name in ("x_lh", "x_hl", "x_hh"):
        np.testing.assert_allclose(read_lwt1(tmp_path / "d" / f"{name}.lwt"), 0.0, atol=1e-4)
    assert (tmp_path / "d" / "run.json").exists()


def test_dwt_inverse_round_trip_non_square(tmp_path):
    img = np.random.default_rng(4).integers(0, 256, size=(9, 14)).astype(np.uint8)
    write_pgm(tmp_path / "x.pgm", img)
    run("dwt", "--bank", "db3", "--in", tmp_path / "x.pgm", "--out-dir", tmp_path / "fwd", "--pgm")
    assert (tmp_path / "fwd" / "x_hh.pgm").exists()
    assert run("dwt", "--bank", "db3", "--in", tmp_path / "fwd", "--out-dir", tmp_path / "inv", "--inverse") == 0
    rec = read_lwt1(tmp_path / "inv" / "reconstruction.lwt")
    assert rec.shape == (1, 9, 14)
    # float32 subband storage bounds the round trip error
    np.testing.assert_allclose(rec[0], img, atol=1e-3)


def test_dwt_lwt_input_multichannel(tmp_path):
    x = np.random.default_rng(5).normal(size=(2, 8, 8)).astype(np.float32)
    write_lwt1(tmp_path / "x.lwt", x)
    run("dwt", "--bank", "db2", "--in", tmp_path / "x.lwt", "--out-dir", tmp_path / "d")
    assert read_lwt1(tmp_path / "d" / "x_ll.lwt").shape == (2, 4, 4)


def test_dwt_missing_input(tmp_path):
    assert run("dwt", "--bank", "haar", "--in", tmp_path / "nope.pgm", "--out-dir", tmp_path / "d") == 3


# -- train / sweep / eval --------------------------------------------------------


def test_train_twice_identical_metrics(tmp_path):
    for d in ("a", "b"):
        assert run("train", "--alpha", 0, "--seed", 7, *FAST, "--out", tmp_path / d) == 0
    a = (tmp_path / "a" / "metrics.csv").read_bytes()
    assert a == (tmp_path / "b" / "metrics.csv").read_bytes()
    assert len(a.decode().splitlines()) == 1 + 3
    rec = json.loads((tmp_path / "a" / "run.json").read_text())
    assert rec["config"]["seed"] == 7 and "version" in rec


def test_train_blow_up_exit_4(tmp_path, capsys):
    assert run("train", "--lr", "1e30", "--epochs", 2, "--per-class", 10, "--out", tmp_path) == 4
    assert "learning rate" in capsys.readouterr().err


@pytest.mark.parametrize("flag, value", [("--alpha", 1.5), ("--lr", -0.1), ("--epochs", 0)])
def test_train_bad_config_exit_2(tmp_path, flag, value):
    assert run("train", *FAST, flag, value, "--out", tmp_path) == 2


def test_sweep_and_eval(tmp_path, capsys):
    assert run("sweep", "--alphas", "0,0.9", "--seed", 7, "--epochs", 3, "--per-class", 20, "--out", tmp_path / "s") == 0
    report = json.loads((tmp_path / "s" / "report.json").read_text())
    assert [r["alpha"] for r in report] == [0.0, 0.9]
    for lo, hi in zip(report[1]["unit_sbe"], report[0]["unit_sbe"]):
        assert lo < hi
    run_dir = tmp_path / "s" / report[1]["dir"]
    assert len((run_dir / "response_unit2.csv").read_text().splitlines()) == 502
    capsys.readouterr()
    assert run("eval", "--checkpoint", run_dir / "checkpoint", "--out", tmp_path / "ev.json") == 0
    ev = json.loads((tmp_path / "ev.json").read_text())
    assert ev["accuracy"] == pytest.approx(report[1]["test_acc"])
    assert np.sum(ev["confusion"]) == 12


def test_cli_bank_json_survives_double_precision(tmp_path):
    angles = named_angles("db4")
    run("design", "--angles", ",".join(repr(float(a)) for a in angles), "--out", tmp_path / "b.json")
    h0 = json.loads((tmp_path / "b.json").read_text())["h0"]
    np.testing.assert_array_equal(h0, lattice_to_filters(angles).h0)
