import csv
import io
import json
import math
import subprocess
import sys

import pytest

from stxfem.cli import UsageError, load_config, main, resolutions
from stxfem.quadrature import P3_ALPHA, P3_BETA


def run(argv, capsys):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


# ---------------------------------------------------------------- verify

@pytest.mark.parametrize("suite", ["geom", "decompose", "quadrature", "fem"])
def test_verify_suites_pass(suite, capsys):
    code, out, _ = run(["verify", suite], capsys)
    assert code == 0
    assert "FAIL" not in out
    assert out.strip().splitlines()[-1].endswith("checks passed")


def test_verify_seeded_is_deterministic(capsys):
    _, a, _ = run(["--seed", "42", "verify", "decompose"], capsys)
    _, b, _ = run(["--seed", "42", "verify", "decompose"], capsys)
    assert a == b


def test_unknown_suite_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "solver"])
    assert exc.value.code == 2


def test_console_script_exit_code():
    proc = subprocess.run([sys.executable, "-m", "stxfem.cli", "verify", "bogus"], capture_output=True)
    assert proc.returncode == 2


# ---------------------------------------------------------------- dump-rule

def test_dump_p3(capsys):
    code, out, _ = run(["dump-rule", "pentatope", "3"], capsys)
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 5
    for r in rows:
        assert float(r["weight"]) == pytest.approx(1 / 120, rel=1e-15)
        x = sorted(float(r[f"x{i}"]) for i in range(1, 5))
        lam5 = 1 - sum(x)
        coords = sorted(x + [lam5])
        assert coords[:4] == pytest.approx([P3_ALPHA] * 4, abs=1e-15)
        assert coords[4] == pytest.approx(P3_BETA, abs=1e-15)


def test_dump_gauss_jacobi_one_point(capsys):
    code, out, _ = run(["dump-rule", "gauss-jacobi", "1"], capsys)
    (row,) = rows_of(out)
    assert code == 0
    assert float(row["x1"]) == pytest.approx(0.2, abs=1e-16)
    assert float(row["weight"]) == pytest.approx(0.25, abs=1e-16)


@pytest.mark.parametrize("argv", [["dump-rule", "tet", "4"], ["dump-rule", "pentatope", "2"],
                                  ["dump-rule", "gauss-legendre", "0"]])
def test_dump_invalid_degree(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert "error" in err


def test_dump_to_file(tmp_path, capsys):
    path = tmp_path / "rule.csv"
    assert main(["--out", str(path), "dump-rule", "tet", "2"]) == 0
    assert len(rows_of(path.read_text())) == 4


# ---------------------------------------------------------------- integrate

def test_integrate_planar_exact(capsys):
    code, out, _ = run(["integrate", "--case", "moving_plane_planar", "--n-s", "8", "--n-t", "2",
                        "--m-s", "1", "2", "1", "--m-t", "1", "1", "2"], capsys)
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 3
    for r in rows:
        assert float(r["exact_volume_1"]) == pytest.approx(8 / 3, rel=1e-15)
        assert float(r["volume_error"]) < 1e-12
        assert float(r["volume_1"]) + float(r["volume_2"]) == pytest.approx(8.0, rel=1e-13)
        assert float(r["interface_nu_measure"]) == pytest.approx(8.0, rel=1e-12)


def test_integrate_sphere_second_order(capsys):
    code, out, _ = run(["integrate", "--case", "moving_sphere", "--n-s", "8", "16", "--n-t", "4", "8"], capsys)
    rows = rows_of(out)
    e = [float(r["volume_error"]) for r in rows]
    assert code == 0
    assert math.log2(e[0] / e[1]) > 1.8


# ---------------------------------------------------------------- converge

def test_converge_csv_and_orders(capsys):
    code, out, err = run(["converge", "--case", "moving_plane_planar", "--n-s", "2", "4", "--n-t", "2"], capsys)
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 2
    assert list(rows[0]) == ["n_s", "n_t", "m_s", "m_t", "h", "dt", "l2_error", "jump_error",
                             "iterations", "max_iterations", "n_dofs", "wall_time"]
    assert float(rows[1]["l2_error"]) < float(rows[0]["l2_error"])
    assert "observed orders (l2_error)" in err


def test_converge_from_config(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"case": "moving_plane_planar", "n_s": 2, "n_t": 2, "lambda": 10.0,
                                "rules": {"cut": "duffy5"}, "tolerances": {"gmres_rtol": 1e-8}}))
    code, out, _ = run(["--config", str(path), "converge"], capsys)
    assert code == 0
    assert len(rows_of(out)) == 1


# ---------------------------------------------------------------- config

def test_config_defaults_and_broadcast():
    cfg = load_config(overrides={"case": "moving_sphere", "n_s": [4, 8], "n_t": 2})
    assert cfg["m_s"] == 1 and cfg["lambda"] is None
    assert resolutions(cfg) == [(4, 2, 1, 1), (8, 2, 1, 1)]


@pytest.mark.parametrize(
    "cfg",
    [
        {},
        {"case": "vortex"},
        {"case": "moving_sphere", "m_s": 3},
        {"case": "moving_sphere", "n_s": 0},
        {"case": "moving_sphere", "lambda": -1},
        {"case": "moving_sphere", "colour": "red"},
        {"case": "moving_sphere", "rules": {"cut": "p7"}},
    ],
)
def test_config_validation(cfg):
    with pytest.raises(UsageError):
        load_config(overrides=cfg)


def test_mismatched_lists():
    cfg = load_config(overrides={"case": "moving_sphere", "n_s": [4, 8], "n_t": [1, 2, 3]})
    with pytest.raises(UsageError):
        resolutions(cfg)


def test_bad_config_file_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code, _, err = run(["--config", str(path), "integrate"], capsys)
    assert code == 2
    code, _, _ = run(["--config", str(tmp_path / "missing.json"), "integrate"], capsys)
    assert code == 2
