"""Command-line front-end: artifacts, determinism, exit codes."""

import csv
import json

import pytest

from bundlelab.cli import main


def run(argv):
    return main(argv)


def test_lps_build_and_checks(tmp_path):
    out = str(tmp_path / "b.json")
    assert run(["lps", "build", "--p0", "13", "--p1", "5", "--p", "1",
                "--out", out]) == 0
    blob = json.load(open(out))
    assert blob["graph"]["vertices"] == 120
    assert blob["meta"]["p0"] == 13 and blob["meta"]["b"] == 2
    assert run(["check", "ramanujan", "--in", out]) == 0

    eig = str(tmp_path / "eig.csv")
    assert run(["spectrum", "--in", out, "--out", eig]) == 0
    rows = list(csv.DictReader(open(eig)))
    assert len(rows) == 240
    # metadata artifact is written alongside
    meta = json.load(open(eig + ".meta.json"))
    assert meta["command"] == "spectrum"
    assert "numpy" in meta["versions"]


def test_bundle_roundtrip_byte_identical(tmp_path):
    out = str(tmp_path / "r.json")
    assert run(["bundle", "random", "--graph", "petersen", "--dim", "2",
                "--seed", "3", "--out", out]) == 0
    first = open(out, "rb").read()
    out2 = str(tmp_path / "r2.json")
    assert run(["bundle", "random", "--graph", "petersen", "--dim", "2",
                "--seed", "3", "--out", out2]) == 0
    assert first == open(out2, "rb").read()


def test_spectrum_csv_deterministic(tmp_path):
    b = str(tmp_path / "b.json")
    run(["bundle", "random", "--graph", "cycle:5", "--dim", "2", "--seed",
         "9", "--out", b])
    c1, c2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert run(["spectrum", "--in", b, "--out", c1]) == 0
    assert run(["spectrum", "--in", b, "--out", c2]) == 0
    assert open(c1, "rb").read() == open(c2, "rb").read()


def test_check_suite_exit_codes(tmp_path):
    b = str(tmp_path / "r.json")
    run(["bundle", "random", "--graph", "petersen", "--dim", "2", "--seed",
         "1", "--out", b])
    assert run(["check", "trace", "--in", b, "--kmax", "3"]) == 0
    assert run(["check", "chebyshev", "--in", b, "--kmax", "3"]) == 0
    assert run(["check", "b1", "--in", b]) == 0
    k = str(tmp_path / "k.csv")
    assert run(["check", "kernel", "--in", b, "--levels", "1", "--ops", "2",
                "--out", k]) == 0
    rows = list(csv.DictReader(open(k)))
    assert {"identity", "level", "residual"} == set(rows[0])
    # an impossible tolerance turns the same run into an assertion failure
    assert run(["check", "kernel", "--in", b, "--levels", "1", "--ops", "2",
                "--tol", "0"]) == 1


def test_check_toeplitz():
    assert run(["check", "toeplitz", "--f", "n3^2 - 1/3", "--p", "6"]) == 0


def test_invalid_inputs(tmp_path):
    assert run(["lps", "build", "--p0", "7", "--p1", "5", "--out",
                str(tmp_path / "x.json")]) == 2   # 7 = 3 mod 4
    assert run(["spectrum", "--in", str(tmp_path / "missing.json"),
                "--out", str(tmp_path / "y.csv")]) == 2
    # ramanujan check needs Cayley metadata
    b = str(tmp_path / "r.json")
    run(["bundle", "random", "--graph", "petersen", "--dim", "1", "--seed",
         "0", "--out", b])
    assert run(["check", "ramanujan", "--in", b]) == 2


def test_km_and_logdet(tmp_path):
    b = str(tmp_path / "b.json")
    run(["lps", "build", "--p0", "13", "--p1", "5", "--p", "0", "--out", b])
    out = str(tmp_path / "km.csv")
    assert run(["km", "--in", b, "--out", out, "--bins", "10"]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 10
    assert abs(sum(float(r["km_mass"]) for r in rows) - 1.0) < 1e-6
    assert run(["logdet", "--in", b]) == 0


def test_qe_csv_and_svg(tmp_path):
    out = str(tmp_path / "qe.csv")
    assert run(["qe", "--pairs", "13,5", "--p", "0,1", "--f", "n3",
                "--out", out, "--emit", "both"]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 2
    assert (tmp_path / "qe.svg").exists()
    svg = (tmp_path / "qe.svg").read_text()
    assert svg.lstrip().startswith("<?xml")
    # determinism apart from the timing column
    out2 = str(tmp_path / "qe2.csv")
    run(["qe", "--pairs", "13,5", "--p", "0,1", "--f", "n3", "--out", out2])
    strip = lambda p: [{k: v for k, v in r.items() if k != "seconds"}
                       for r in csv.DictReader(open(p))]
    assert strip(out) == strip(out2)


def test_zeros_command(tmp_path):
    out = str(tmp_path / "z.csv")
    assert run(["zeros", "--p0", "13", "--p1", "5", "--p", "1",
                "--g", "n3", "--out", out]) == 0
    rows = list(csv.DictReader(open(out)))
    assert {"section_index", "vertex", "theta", "phi", "multiplicity"} \
        == set(rows[0])


def test_harmonic_command():
    assert run(["harmonic", "--p0", "13", "--p1", "5", "--q", "0,1"]) == 0


def test_config_overrides_flags(tmp_path):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text("[bundle.random]\nseed = 11\ndim = 2\n")
    out1 = str(tmp_path / "a.json")
    run(["--config", str(cfg), "bundle", "random", "--graph", "petersen",
         "--dim", "1", "--seed", "0", "--out", out1])
    out2 = str(tmp_path / "b.json")
    run(["bundle", "random", "--graph", "petersen", "--dim", "2", "--seed",
         "11", "--out", out2])
    assert json.load(open(out1))["transports"] == \
        json.load(open(out2))["transports"]
