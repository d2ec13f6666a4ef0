import csv
import json
import math
import subprocess
import sys

import pytest

from stableforms import __version__
from stableforms.cli import run
from stableforms.data import data_path
from stableforms.exterior import e
from stableforms.formats import write_form
from stableforms.hitchin import omega0

D = {name: str(data_path(name)) for name in ("omega0", "phi0", "sigma0", "psi0", "nilpotent", "su2su2", "nk_omega", "nk_phi", "nk_phihat")}
HALF_PI = repr(math.pi / 2)


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip() else None), out.err


def read_csv(path):
    lines = open(path).read().splitlines()
    return lines[0], list(csv.DictReader(lines[1:]))


def test_classify_phi0(capsys):
    code, rep, _ = call(capsys, "classify", D["phi0"])
    assert code == 0
    assert rep["class"] == "Positive3"
    assert rep["version"] == __version__
    assert rep["tolerances"]["tol"] == 1e-10
    assert rep["inputs"]["form"] == D["phi0"]
    assert all(set(c) >= {"name", "value", "threshold", "passed"} for c in rep["checks"])


@pytest.mark.parametrize("name,cls", [("omega0", "Symplectic2"), ("sigma0", "Stable4")])
def test_classify_other_degrees(capsys, name, cls):
    code, rep, _ = call(capsys, "classify", "--form", D[name])
    assert code == 0 and rep["class"] == cls


def test_classify_not_stable(capsys, tmp_path):
    write_form(tmp_path / "dec.json", e(6, 1, 2, 3))
    code, rep, _ = call(capsys, "classify", str(tmp_path / "dec.json"))
    assert code == 1 and rep["class"] == "NotStable"


def test_classify_unsupported_degree(capsys):
    code, rep, err = call(capsys, "classify", D["psi0"])
    assert code == 2 and "R^6" in err


def test_validate_standard_and_failure(capsys, tmp_path):
    code, rep, _ = call(capsys, "validate-su3", "--omega", D["omega0"], "--phi", D["phi0"])
    assert code == 0 and rep["passed"]
    write_form(tmp_path / "w2.json", 2 * omega0())
    code, rep, _ = call(capsys, "validate-su3", "--omega", str(tmp_path / "w2.json"), "--phi", D["phi0"])
    assert code == 1
    failed = [c for c in rep["checks"] if not c["passed"]]
    assert [c["name"] for c in failed] == ["condition III"]
    assert failed[0]["value"] == pytest.approx(7 / 8)


def test_degree_mismatch_names_form(capsys):
    code, rep, err = call(capsys, "validate-su3", "--omega", D["phi0"], "--phi", D["phi0"])
    assert code == 2
    assert D["phi0"] in err and "2-form" in err


def test_torsion(capsys):
    code, rep, _ = call(capsys, "torsion", "--algebra", D["su2su2"], "--omega", D["nk_omega"], "--phi", D["nk_phi"])
    assert code == 0 and rep["torsion"] == "NearlyKaehler"
    code, rep, _ = call(capsys, "torsion", "--algebra", D["su2su2"], "--omega", D["nk_omega"], "--phi", D["nk_phihat"])
    assert code == 0 and rep["torsion"] == "NearlyHalfFlat"
    assert rep["lambda_g2"] == pytest.approx(4.0) and rep["lambda_def"] == pytest.approx(2.0)
    code, rep, _ = call(capsys, "torsion", "--algebra", D["nilpotent"], "--omega", D["omega0"], "--phi", D["phi0"])
    assert code == 1 and rep["torsion"] == "Unclassified"


def test_evolve_negative_step_is_config_error(capsys):
    code, rep, err = call(
        capsys, "evolve", "--algebra", D["su2su2"], "--omega", D["nk_omega"], "--phi", D["nk_phihat"],
        "--lambda", "4", "--t1", "1", "--step", "-1",
    )
    assert code == 2 and "step" in rep["error"]


def test_missing_lambda_and_file(capsys, tmp_path):
    code, _, err = call(capsys, "evolve", "--algebra", D["su2su2"], "--omega", D["nk_omega"], "--phi", D["nk_phihat"], "--t1", "1")
    assert code == 2 and "--lambda" in err
    code, _, err = call(capsys, "classify", str(tmp_path / "none.json"))
    assert code == 2 and "cannot read" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        run(["evolve", "--step", "x"])
    assert info.value.code == 2
    capsys.readouterr()


def lift_verify_args(out, grid="5"):
    return [
        "lift-verify", "--algebra", D["su2su2"], "--omega", D["nk_omega"], "--phi", D["nk_phihat"],
        "--lambda", "4", "--t0", HALF_PI, "--t1", repr(math.pi / 2 + 0.2), "--grid", grid, "--out", str(out),
    ]


def test_lift_verify_csv(capsys, tmp_path):
    code, rep, _ = call(capsys, *lift_verify_args(tmp_path / "lv.csv"))
    assert code == 0 and rep["csv"] == str(tmp_path / "lv.csv")
    head, rows = read_csv(tmp_path / "lv.csv")
    assert head.startswith("# generated ")
    assert list(rows[0]) == ["t", "residual", "c1", "c2", "c3", "eps_phi", "eps_omega"]
    assert len(rows) == 5
    assert max(float(r["residual"]) for r in rows) <= 1e-8


def test_csv_deterministic_apart_from_timestamp(capsys, tmp_path):
    call(capsys, *lift_verify_args(tmp_path / "a.csv"))
    call(capsys, *lift_verify_args(tmp_path / "b.csv"))
    a = (tmp_path / "a.csv").read_text().splitlines()
    b = (tmp_path / "b.csv").read_text().splitlines()
    assert a[1:] == b[1:]


def test_lift_verify_wrong_lambda_fails(capsys, tmp_path):
    args = lift_verify_args(tmp_path / "x.csv")
    args[args.index("--lambda") + 1] = "3"
    code, rep, _ = call(capsys, *args)
    assert code == 1
    names = {c["name"]: c["passed"] for c in rep["checks"]}
    assert names["initial d phi + (lambda/2) omega^2"] is False


def test_evolve_csv(capsys, tmp_path):
    out = tmp_path / "ev.csv"
    code, rep, _ = call(
        capsys, "evolve", "--algebra", D["su2su2"], "--omega", D["nk_omega"], "--phi", D["nk_phihat"],
        "--lambda", "4", "--t0", HALF_PI, "--t1", repr(math.pi / 2 - 0.1), "--step", "1e-3", "--grid", "3",
        "--out", str(out),
    )
    assert code == 0 and rep["termination"] == "Completed"
    _, rows = read_csv(out)
    cols = list(rows[0])
    assert cols[0] == "t" and cols[1] == "phi_123" and cols[20] == "phi_456"
    assert cols[21:] == ["c1", "c2", "c3", "eps_phi", "H", "dH_dt"]
    assert len(rows) == 3 and float(rows[-1]["t"]) == pytest.approx(math.pi / 2 - 0.1)


def test_evolve_half_flat(capsys, tmp_path):
    code, rep, _ = call(
        capsys, "evolve", "--algebra", D["su2su2"], "--omega", D["nk_omega"], "--phi", D["nk_phi"],
        "--mode", "half-flat", "--t0", "1", "--t1", "1.2", "--step", "0.01", "--out", str(tmp_path / "hf.csv"),
    )
    assert code == 0
    _, rows = read_csv(tmp_path / "hf.csv")
    assert rows[0]["H"] == "nan"


@pytest.mark.parametrize("family", ["cone", "sine-cone"])
def test_exact_family(capsys, tmp_path, family):
    out = tmp_path / f"{family}.csv"
    code, rep, _ = call(capsys, "exact-family", "--family", family, "--out", str(out))
    assert code == 0
    _, rows = read_csv(out)
    assert len(rows) == 50
    assert list(rows[0]) == ["t", "residual", "d_star_psi", "omega_wedge_phi", "eps_omega", "eps_phi", "metric_scale"]
    if family == "sine-cone":
        assert rep["lambda"] == pytest.approx(4.0, abs=1e-8)


def test_exact_family_needs_nk_base(capsys):
    code, _, err = call(capsys, "exact-family", "--family", "cone", "--algebra", D["nilpotent"], "--omega", D["omega0"], "--phi", D["phi0"])
    assert code == 2 and "nearly-Kaehler" in err


def test_report_file(capsys, tmp_path):
    code = run(["classify", D["phi0"], "--report", str(tmp_path / "r.json")])
    assert code == 0 and capsys.readouterr().out == ""
    assert json.loads((tmp_path / "r.json").read_text())["class"] == "Positive3"


def test_help_formats_and_entry_point():
    res = subprocess.run([sys.executable, "-m", "stableforms.cli", "--help-formats"], capture_output=True, text=True)
    assert res.returncode == 0 and "exact-family" in res.stdout and "indices" in res.stdout
    res = subprocess.run([sys.executable, "-m", "stableforms.cli", "classify", D["phi0"]], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["class"] == "Positive3"
