import csv
import io
import json

import pytest

from frobkp.cli import _join_values, golden_outputs, run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_negative_values_joined():
    assert _join_values(["soliton", "--grid", "-5:5:21"]) == ["soliton", "--grid=-5:5:21"]


def test_algebra_text_and_json():
    code, out, _ = call("algebra", "--algebra", "zn:3:1")
    assert code == 0 and "frobenius: pass" in out
    code, out, _ = call("algebra", "--algebra", "z2:1:0:1", "--format", "json")
    data = json.loads(out)
    assert data["status"] == "pass" and data["algebra_data"]["dim"] == 2


def test_trace_override():
    code, out, _ = call("algebra", "--algebra", "zn:2:1", "--trace", "0", "--format", "json")
    assert json.loads(out)["algebra"] == "zn:2:0"


def test_config_errors():
    assert call("algebra", "--algebra", "nope")[0] == 2
    code, _, err = call("algebra", "--algebra", "zn:2:9", "--format", "json")
    assert code == 2 and json.loads(err)["error"] == "AlgebraError"
    assert call("soliton", "--params", "1,2,3")[0] == 2
    assert call("bracket", "--m", "3", "--matrices")[0] == 2
    assert call("frobnicate")[0] == 2


def test_derive_kp_and_ckdv():
    code, out, _ = call("derive", "kp", "--algebra", "z2:1:0:1")
    assert code == 0 and "check component_form: ok" in out
    code, out, _ = call("derive", "ckdv")
    assert code == 0 and out.splitlines()[0] == "dv/dt3 = 1/4*v''' + 3*v*v'"
    code, out, _ = call("derive", "ckdv", "--format", "latex")
    assert code == 0 and "\\frac{1}{4}" in out


def test_depth_auto_raise():
    code, _, err = call("derive", "zero-curvature", "--r", "2", "--l", "4", "--depth", "2")
    assert code == 0
    assert "depth raised" in err


@pytest.mark.parametrize(
    "target",
    ["bihamiltonian", "dirac", "zero-curvature", "kp", "kdv-pair", "walgebra", "frobenius", "dispersionless", "commutator-trace"],
)
def test_verify_targets(target):
    code, out, _ = call("verify", target, "--format", "json")
    assert code == 0, out
    rep = json.loads(out)
    assert rep["status"] == "pass"
    assert {"check", "algebra", "m", "r", "status", "mismatches"} <= set(rep)


def test_verify_failure_exit_code(monkeypatch):
    import frobkp.hamiltonian as hm

    def broken(*a, **k):
        return {"check": "bihamiltonian", "algebra": "x", "m": 2, "r": 3, "status": "fail",
                "mismatches": [{"expression": "forced"}]}

    monkeypatch.setattr(hm, "verify_bihamiltonian", broken)
    code, out, _ = call("verify", "bihamiltonian")
    assert code == 1 and "FAIL" in out


def test_bracket_matrices():
    code, out, _ = call("bracket", "--m", "2", "--matrices")
    assert code == 0 and "matrices match closed forms: True" in out
    code, out, _ = call("dkp", "bracket", "--m", "2", "--matrices")
    assert code == 0 and "d^3" not in out


def test_soliton_csv_default():
    code, out, _ = call("soliton", "--grid", "-1:1:3")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 9
    origin = [r for r in rows if float(r["x"]) == 0 and float(r["t"]) == 0][0]
    assert abs(float(origin["v"]) - 1) < 1e-12 and abs(float(origin["w"]) - 2) < 1e-12


def test_soliton_json():
    code, out, _ = call("soliton", "--format", "json")
    rep = json.loads(out)
    assert code == 0 and rep["status"] == "pass"
    assert max(rep["max_residual"]) <= 1e-9


def test_csv_only_for_soliton():
    assert call("walgebra", "--format", "csv")[0] == 2


def test_dkp_commands():
    for what in ("flow", "kp", "gd", "limit"):
        code, out, _ = call("dkp", what)
        assert code == 0, (what, out)


def test_selftest_and_goldens():
    code, out, _ = call("selftest", "--count", "2")
    assert code == 0, out
    assert out.count("PASS") == len(golden_outputs()) + 3


def test_goldens_are_stable():
    from importlib import resources

    d = resources.files("frobkp").joinpath("data", "golden")
    for name, text in golden_outputs().items():
        assert d.joinpath(name).read_text() == text
