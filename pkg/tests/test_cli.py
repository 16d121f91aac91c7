import csv
import io
import json
import math

import pytest

from latticeforge.cli import COMMANDS, RunConfig, run
from latticeforge.errors import DomainError
from latticeforge.lattice import named_lattice
from latticeforge.potentials import PotentialSpec, value_sq
from latticeforge.sums import lattice_sum


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_conditions(capsys):
    code, out, _ = call(capsys, "conditions", "--alpha", "6", "--r0", "1")
    assert code == 0
    lo, hi = json.loads(out)["interval"]
    assert lo == pytest.approx(0.0139, abs=1e-3) and hi == pytest.approx(0.5034, abs=1e-3)


def test_energy_matches_oracle(capsys):
    code, out, _ = call(capsys, "energy", "--potential", "morse", "--alpha", "6", "--r0", "1",
                        "--lattice", "triangular", "--area", "1")
    assert code == 0
    L = named_lattice("triangular", 1.0)
    # brute-force oracle over a fixed ball well past the decay length
    from latticeforge.lattice import enumerate_arrays
    q = enumerate_arrays(L.basis, 12.0, sort=False)[2]
    oracle = math.fsum(value_sq(PotentialSpec.morse(6, 1), q)) + math.exp(6) - 2
    assert json.loads(out)["value"] == pytest.approx(oracle, rel=1e-10)


def test_energy_lj_and_json_lattice(capsys, tmp_path):
    path = tmp_path / "lat.json"
    path.write_text(json.dumps({"dim": 3, "basis": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}))
    code, out, _ = call(capsys, "energy", "--potential", "lj", "--lattice", str(path))
    assert code == 0
    expected = lattice_sum(named_lattice("cubic", 1.0), PotentialSpec.lennard_jones()).value
    assert json.loads(out)["value"] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("argv", [
    ["conditions", "--alpha", "-1"],
    ["nonsense"],
    [],
    ["energy", "--potential", "morse", "--alpha", "6", "--lattice", "rectangular", "--y", "0.5"],
    ["zeta", "--lattice", "square", "--exponent", "2"],
    ["energy", "--rel-tol", "0"],
    ["modbound", "--alpha", "6"],
    ["energy", "--potential", "modified_morse", "--alpha", "6", "--beta", "1", "--p", "2"],
])
def test_argument_errors_exit_2(capsys, argv):
    code, out, err = call(capsys, *argv)
    assert code == 2
    assert out == ""
    payload = json.loads(err)
    assert payload["exit_code"] == 2 and payload["message"]


def test_nonconvergence_exit_3(capsys):
    code, _, err = call(capsys, "energy", "--potential", "gaussian", "--alpha", "1e-7",
                        "--lattice", "square")
    assert code == 3
    assert json.loads(err)["error"] == "NonConvergenceError"


def test_theta_routes_agree(capsys):
    vals = []
    for route in ("direct", "dual"):
        code, out, _ = call(capsys, "theta", "--alpha", "0.5", "--lattice", "bcc", "--route", route)
        assert code == 0
        vals.append(json.loads(out)["value"])
    assert vals[0] == pytest.approx(vals[1], rel=1e-12)


def test_zeta_and_expsum(capsys):
    code, out, _ = call(capsys, "zeta", "--lattice", "square", "--exponent", "4")
    assert json.loads(out)["value"] == pytest.approx(6.02681204, rel=1e-8)
    code, out, _ = call(capsys, "expsum", "--alpha", "3", "--lattice", "fcc", "--volume", "1")
    assert code == 0 and json.loads(out)["value"] > 1


def test_corollary_and_modbound(capsys):
    _, out, _ = call(capsys, "corollary", "--alpha", "9")
    assert json.loads(out)["applicable"] is True
    _, out, _ = call(capsys, "modbound", "--alpha", "6", "--beta", str((10 * math.e) ** -6),
                     "--p", "100")
    assert json.loads(out)["A_max"] == pytest.approx(0.07056, abs=1e-5)


def test_hessian_and_eutaxy(capsys):
    _, out, _ = call(capsys, "hessian", "--lattice", "triangular", "--area", "0.8")
    assert json.loads(out)["classification"] == "local_min"
    _, out, _ = call(capsys, "eutaxy", "--lattice", "fcc")
    assert json.loads(out)["all_pass"] is True
    _, out, _ = call(capsys, "eutaxy", "--lattice", "rectangular", "--y", "2")
    assert json.loads(out)["all_pass"] is False


def test_stationarity_csv(capsys):
    code, out, _ = call(capsys, "stationarity", "--lattice", "square", "--a-min", "0.5",
                        "--a-max", "2", "--resolution", "4", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 4 and all(r["stationary"] == "True" for r in rows)
    assert list(rows[0]) == ["density", "gradient_norm", "eig_min", "eig_max", "classification",
                             "stationary"]


def test_scans_and_minimize(capsys):
    _, out, _ = call(capsys, "scan-rect", "--area", "1.2", "--resolution", "50")
    assert json.loads(out)["argmin"] == 1.0
    _, out, _ = call(capsys, "scan-rhombic", "--area", "1.0", "--resolution", "30",
                     "--format", "csv")
    assert out.splitlines()[0] == "theta_deg,energy" and len(out.splitlines()) == 31
    _, out, _ = call(capsys, "minimize2d", "--area", "0.8")
    assert json.loads(out)["shape"] == "triangular"


def test_dilate(capsys):
    _, out, _ = call(capsys, "dilate", "--structure", "hcp", "--alpha", "6")
    r = json.loads(out)
    assert r["value"] - (math.exp(6) - 2) < 0 and r["lambda"] > 0
    code, _, _ = call(capsys, "dilate", "--structure", "fcc", "--alpha", "2")
    assert code == 2


def test_compare3d_deterministic_across_threads(capsys, monkeypatch):
    argv = ["compare3d", "--alphas", "3.2", "6", "--format", "csv"]
    _, one, _ = call(capsys, *argv, "--threads", "1")
    _, two, _ = call(capsys, *argv, "--threads", "2")
    assert one == two
    lines = one.splitlines()
    assert lines[0] == "alpha,H,B,F,order"
    assert lines[1].endswith("F<H<B") and lines[2].endswith("H<F<B")
    monkeypatch.setenv("LATTICEFORGE_THREADS", "2")
    _, env, _ = call(capsys, *argv)
    assert env == one


def test_crossing(capsys):
    _, out, _ = call(capsys, "crossing", "--precision", "1e-6")
    assert json.loads(out)["alpha_star"] == pytest.approx(3.86, abs=0.02)


def test_output_file_and_dump_config(capsys, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = call(capsys, "conditions", "--alpha", "4", "--output", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["which"] == ["C2"]
    code, out, _ = call(capsys, "phase2d", "--potential", "lj", "--dump-config")
    cfg = json.loads(out)
    assert cfg["potential"] == {"kind": "lennard_jones"} and cfg["command"] == "phase2d"


def test_config_precedence(capsys, tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"resolution": 7, "a_min": 0.9,
                                "potential": {"kind": "morse", "alpha": 3, "r0": 3}}))
    _, out, _ = call(capsys, "phase2d", "--config", str(path), "--resolution", "9", "--dump-config")
    cfg = json.loads(out)
    assert cfg["resolution"] == 9 and cfg["a_min"] == 0.9
    assert cfg["potential"] == {"kind": "morse", "alpha": 3.0, "r0": 3.0}


def test_config_rejects_unknown_fields(capsys, tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"resolutoin": 7}))
    code, _, err = call(capsys, "phase2d", "--config", str(path))
    assert code == 2 and "resolutoin" in err
    with pytest.raises(DomainError):
        RunConfig.from_json({"bogus": 1})


def test_run_config_validation():
    with pytest.raises(DomainError):
        RunConfig(command="energy", resolution=1).validate()
    with pytest.raises(DomainError):
        RunConfig(command="energy", threads=0).validate()
    assert RunConfig(command="energy").validate().spec == PotentialSpec.morse(6, 1)
    assert len(COMMANDS) == 20


def test_reproduce_table1_csv(capsys):
    code, out, _ = call(capsys, "reproduce", "table1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and all(r["status"] == "PASS" for r in rows)
    assert list(rows[0]) == ["quantity", "computed", "expected", "tolerance", "status", "note"]
