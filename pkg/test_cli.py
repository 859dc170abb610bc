"""
Tests for the command-line surface: CSV contracts and exit codes
"""
import csv
import io

import pytest

from app.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from app.core.codebook import load_codebook


def read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


# ==================== bounds ====================

def test_bounds_table(tmp_path, capsys):
    out = tmp_path / "bounds.csv"
    assert main(["bounds", "--p", "0.01", "--out", str(out)]) == EXIT_OK
    rows = read_csv(out)
    assert rows[0] == ["R", "lb_rce_id", "lb_rce_jd", "lb_trc_id", "lb_trc_jd", "ub"]
    assert len(rows) == 201
    assert float(rows[1][5]) == pytest.approx(2.33, abs=0.005)

    r_trc = None
    for line in capsys.readouterr().out.splitlines():
        name, value = line.split(" = ")
        if name == "r_trc":
            r_trc = float(value)
    assert r_trc is not None

    for row in rows[1:]:
        rate = float(row[0])
        if rate >= r_trc:
            assert row[3] == "" and row[4] == ""
        else:
            assert float(row[4]) == pytest.approx(2 * float(row[3]), rel=1e-8)


def test_bounds_rejects_bad_channel(capsys):
    assert main(["bounds", "--p", "0.7"]) == EXIT_USAGE
    assert "0 < p < 0.5" in capsys.readouterr().err


def test_bounds_to_stdout_keeps_csv_clean(capsys):
    assert main(["bounds", "--p", "0.1", "--steps", "5"]) == EXIT_OK
    captured = capsys.readouterr()
    rows = list(csv.reader(io.StringIO(captured.out)))
    assert len(rows) == 6
    assert "alpha_p = " in captured.err


# ==================== simulate ====================

SIMULATE = ["simulate", "--n", "8", "12", "--rate", "0.25", "--p", "0.05", "--trials", "200", "--seed", "11"]


def test_simulate_is_deterministic(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(SIMULATE + ["--out", str(first)]) == EXIT_OK
    assert main(SIMULATE + ["--out", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    rows = read_csv(first)
    assert rows[0][:4] == ["n", "m", "realized_rate", "p"]
    assert [r[0] for r in rows[1:]] == ["8", "12"]
    for row in rows[1:]:
        if row[7] == "0":
            assert row[11] == ""


def test_simulate_prints_seed_when_omitted(tmp_path, capsys):
    out = tmp_path / "s.csv"
    args = ["simulate", "--n", "8", "--rate", "0.25", "--p", "0.05", "--trials", "20", "--out", str(out)]
    assert main(args) == EXIT_OK
    assert "seed: " in capsys.readouterr().err


def test_simulate_bruteforce_accepts_m8(tmp_path):
    out = tmp_path / "bf.csv"
    args = ["simulate", "--decoder", "bruteforce", "--n", "12", "--rate", "0.25",
            "--p", "0.05", "--trials", "30", "--seed", "1", "--out", str(out)]
    assert main(args) == EXIT_OK
    assert read_csv(out)[1][1] == "8"


def test_simulate_rejects_trc_at_half_rate(capsys):
    args = ["simulate", "--ensemble", "TRC", "--n", "8", "--rate", "0.5", "--trials", "10", "--seed", "1"]
    assert main(args) == EXIT_USAGE


def test_simulate_rejects_trc_when_realized_rate_reaches_half(capsys):
    # n = 2 rounds m up to 2, a realized rate of 0.5
    args = ["simulate", "--ensemble", "TRC", "--n", "2", "--rate", "0.1", "--trials", "1", "--seed", "1"]
    assert main(args) == EXIT_USAGE
    assert "realized rate" in capsys.readouterr().err


def test_simulate_rejects_trc_epsilon_above_design_distance():
    args = ["simulate", "--ensemble", "TRC", "--n", "12", "--rate", "0.25", "--epsilon", "0.3",
            "--trials", "1", "--seed", "1"]
    assert main(args) == EXIT_USAGE


def test_simulate_oversized_codebook_fails_cleanly(capsys):
    args = ["simulate", "--n", "2000", "--rate", "0.6", "--trials", "1", "--seed", "1"]
    assert main(args) == EXIT_FAILED
    assert "cap" in capsys.readouterr().err


def test_simulate_rejects_unknown_decoder():
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--decoder", "magic", "--n", "8", "--rate", "0.25"])
    assert info.value.code == EXIT_USAGE


def test_simulate_tolerance_columns(tmp_path):
    out = tmp_path / "tol.csv"
    args = SIMULATE + ["--tolerance", "0.25", "--out", str(out)]
    assert main(args) == EXIT_OK
    assert read_csv(out)[0][-2:] == ["mean_misidentified_fraction", "tolerant_errors"]


# ==================== verify ====================

def test_verify_single_point_grid(capsys):
    assert main(["verify", "--grid", "0.25", "--rates", "20", "--oracle-instances", "10"]) == EXIT_OK
    assert "checks passed" in capsys.readouterr().out


def test_verify_detects_perturbation(capsys):
    args = ["verify", "--points", "50", "--rates", "10", "--oracle-instances", "5", "--r1-offset", "-0.01"]
    assert main(args) == EXIT_FAILED
    assert "FAIL" in capsys.readouterr().out


# ==================== codebook ====================

def test_codebook_generate_format(tmp_path):
    out = tmp_path / "cb.txt"
    assert main(["codebook", "generate", "--n", "16", "--m", "8", "--seed", "3", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().split("\n")
    assert lines[0] == "8 16"
    assert len(lines[1:-1]) == 8 and all(len(line) == 16 for line in lines[1:-1])


def test_codebook_inspect_trc(tmp_path, capsys):
    out = tmp_path / "trc.txt"
    assert main(["codebook", "generate", "--ensemble", "TRC", "--n", "64", "--m", "16",
                 "--seed", "4", "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    assert main(["codebook", "inspect", "--in", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "m = 16" in text
    assert ": inside" in text
    assert "greedy pair set = 4 pairs" in text
    assert load_codebook(out).m == 16


def test_codebook_generate_needs_size():
    assert main(["codebook", "generate", "--n", "16"]) == EXIT_USAGE


def test_codebook_inspect_missing_file(tmp_path):
    assert main(["codebook", "inspect", "--in", str(tmp_path / "nope.txt")]) == EXIT_FAILED
