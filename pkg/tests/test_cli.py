import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from oracles import laplace_spectrum
from mplobpcg import read_matrix_market
from mplobpcg.cli import BOUND_COLUMNS, CSV_COLUMNS, main, parse_gen


def run_cli(capsys, *argv):
    code = main(["run", *argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_laplace_end_to_end(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code, stdout, _ = run_cli(capsys, "--gen", "laplace2d:50x50", "--k", "10", "--variant", "mplobpcg-schol",
                              "--seed", "7", "--csv", str(out))
    assert code == 0
    rows = csv_rows(out)
    assert len(rows) == 10
    assert list(rows[0]) == CSV_COLUMNS
    lam = laplace_spectrum(50, 50)[:10]
    theta = np.array([float(r["theta"]) for r in rows])
    resid = np.array([float(r["resid"]) for r in rows])
    assert np.max(np.abs(theta - lam) / lam) <= 1e-10
    assert np.all(resid <= 1e-12 * (8.0 + theta))
    assert all(r["converged"] == "1" and r["m"] == "15" for r in rows)
    assert "mplobpcg-schol" in stdout


def test_variant_all_on_fixture(tmp_path, capsys, data_dir):
    out = tmp_path / "r.csv"
    code, stdout, _ = run_cli(capsys, "--matrix", str(data_dir / "banded30.mtx"), "--k", "3", "--variant", "all",
                              "--csv", str(out))
    assert code == 0
    rows = csv_rows(out)
    by_variant = {}
    for r in rows:
        by_variant.setdefault(r["variant"], []).append(float(r["theta"]))
    assert set(by_variant) == {"dlobpcg-dchol", "dlobpcg-schol", "mplobpcg-schol"}
    ref = np.array(by_variant["dlobpcg-dchol"])
    for vals in by_variant.values():
        assert np.max(np.abs(np.array(vals) - ref) / ref) <= 1e-10
    assert rows[0]["matrix"] == "banded30.mtx"
    assert "rel" in stdout


def test_unknown_flag_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--gen", "laplace2d:5x5", "--k", "1", "--frobnicate"])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_missing_required_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--gen", "laplace2d:5x5"])
    assert exc.value.code == 1


@pytest.mark.parametrize("spec", ["laplace2d:0x4", "laplace:4x4", "gaussian:", "cpoly:abc"])
def test_bad_generator_spec(capsys, spec):
    code, _, err = run_cli(capsys, "--gen", spec, "--k", "1")
    assert code == 1
    assert "error" in err


def test_bad_matrix_inputs(capsys, data_dir, tmp_path):
    assert run_cli(capsys, "--matrix", str(data_dir / "general2.mtx"), "--k", "1")[0] == 1
    assert run_cli(capsys, "--matrix", str(data_dir / "empty.mtx"), "--k", "1")[0] == 1
    assert run_cli(capsys, "--matrix", str(tmp_path / "missing.mtx"), "--k", "1")[0] == 1


def test_block_too_large(capsys):
    code, _, err = run_cli(capsys, "--gen", "laplace2d:3x3", "--k", "3")
    assert code == 1 and "block size" in err


def test_iteration_cap_exits_two(capsys):
    code, _, _ = run_cli(capsys, "--gen", "laplace2d:30x30", "--k", "4", "--maxit", "2",
                         "--variant", "dlobpcg-dchol")
    assert code == 2


def test_csv_columns_deterministic(tmp_path, capsys):
    paths = []
    for name in ("a.csv", "b.csv"):
        p = tmp_path / name
        assert run_cli(capsys, "--gen", "poly:60", "--k", "3", "--seed", "4", "--csv", str(p))[0] == 0
        paths.append(p)
    a, b = (csv_rows(p) for p in paths)
    stable = [c for c in CSV_COLUMNS if not c.startswith("t_")]
    assert [[r[c] for c in stable] for r in a] == [[r[c] for c in stable] for r in b]


def test_csv_to_stdout(capsys):
    code, stdout, _ = run_cli(capsys, "--gen", "cgaussian:40", "--k", "2", "--csv", "-")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(stdout.split("matrix cgaussian")[0])))
    assert len(rows) == 2


def test_dump_matrix_round_trip(tmp_path, capsys):
    dump = tmp_path / "lap.mtx"
    assert run_cli(capsys, "--gen", "laplace2d:6x5", "--k", "2", "--dump-matrix", str(dump))[0] == 0
    A = read_matrix_market(dump)
    B = parse_gen("laplace2d:6x5")[1]
    assert A.data.tobytes() == B.data.tobytes()
    np.testing.assert_array_equal(A.indices, B.indices)
    code, _, _ = run_cli(capsys, "--matrix", str(dump), "--k", "2")
    assert code == 0


def test_history_json(tmp_path, capsys):
    hist = tmp_path / "h.json"
    assert run_cli(capsys, "--gen", "laplace2d:12x12", "--k", "3", "--history", str(hist))[0] == 0
    data = json.loads(hist.read_text())
    rec = data["mplobpcg-schol"]
    its = rec["iterations"]
    assert {"stage", "iteration", "theta", "residuals", "n_c", "events"} <= set(its[0])
    assert its[0]["stage"] == "lower" and its[-1]["stage"] == "working"
    assert its[-1]["n_c"] >= 3
    assert all(v >= 0 for v in rec["timings"].values())


def test_bounds_columns(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert run_cli(capsys, "--gen", "gaussian:60", "--k", "2", "--bounds", "--csv", str(out))[0] == 0
    rows = csv_rows(out)
    assert list(rows[0]) == CSV_COLUMNS + BOUND_COLUMNS
    for c in BOUND_COLUMNS:
        assert float(rows[0][c]) >= 0


def test_bounds_skipped_for_large(capsys):
    code, _, err = run_cli(capsys, "--gen", "laplace2d:15x15", "--k", "2", "--bounds")
    assert code == 0 and "skipped" in err


def test_jobs_match_sequential(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["--gen", "laplace2d:10x10", "--k", "2", "--variant", "all"]
    assert run_cli(capsys, *base, "--csv", str(a))[0] == 0
    assert run_cli(capsys, *base, "--jobs", "3", "--csv", str(b))[0] == 0
    ra, rb = csv_rows(a), csv_rows(b)
    assert [(r["variant"], r["theta"]) for r in ra] == [(r["variant"], r["theta"]) for r in rb]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mplobpcg.cli", "run", "--gen", "laplace2d:4x4", "--k", "1",
                           "--variant", "pinvit"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "pinvit" in proc.stdout
