import json

import pytest

import slabperc.renorm as renorm_mod
from slabperc.cli import (
    EXIT_BAD_PARAMS,
    EXIT_CHECK_FAILED,
    EXIT_OK,
    EXIT_RESOURCE,
    main,
    parse_event,
)
from slabperc.cluster import BlockReach, Connected, LeftRightCrossing, OriginToBoundary
from slabperc.errors import GeometryError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_bounds_json_values(capsys):
    code, out = run(capsys, "bounds", "--k", "1", "--p", "0.4")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["schema_version"] == 1
    assert doc["results"]["p_k"] == pytest.approx(0.2928932188134524, abs=1e-15)
    assert doc["results"]["s"] == pytest.approx(0.64, abs=1e-15)
    assert doc["results"]["q_star"] == pytest.approx(0.9842064936403382, abs=1e-7)
    assert doc["config"]["k"] == 1


def test_theta_csv_schema_and_determinism(capsys):
    args = ["theta", "--k", "0", "--n", "1", "--p", "0.5", "--q", "0.3",
            "--replicas", "20000", "--seed", "7", "--format", "csv"]
    code, out1 = run(capsys, *args)
    assert code == EXIT_OK
    assert out1.splitlines()[0] == "p,q,k,event,n,mean,stderr,replicas,seed"
    _, out2 = run(capsys, *args)
    assert out1 == out2


def test_jobs_flag_never_changes_output(capsys):
    base = ["theta", "--k", "0", "--n", "2", "--p", "0.4", "--q", "0.1",
            "--replicas", "30000", "--seed", "9"]
    _, out1 = run(capsys, *base, "--jobs", "1")
    _, out4 = run(capsys, *base, "--jobs", "4")
    assert out1 == out4


def test_oracle_subcommand_value(capsys):
    code, out = run(
        capsys, "oracle", "--k", "0", "--shape", "centered:1",
        "--p", "0.5", "--q", "0.3", "--event", "origin-to-boundary:1",
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["results"]["value"] == pytest.approx(0.9375, abs=1e-12)
    assert doc["results"]["enumeration_size"] == 4096


def test_tail_json_includes_fit(capsys):
    code, out = run(
        capsys, "tail", "--k", "1", "--p", "0.3", "--q", "0.02",
        "--radius", "20", "--sizes", "4,8,12,16", "--replicas", "3000",
        "--seed", "5", "--min-survivors", "30",
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["results"]["survival"][0] >= doc["results"]["survival"][-1]
    assert doc["results"]["fit"]["slope"] < 0


def test_russo_json_and_per_edge(capsys):
    code, out = run(
        capsys, "russo", "--k", "1", "--n", "2", "--p", "0.35", "--q", "0.35",
        "--replicas", "4000", "--seed", "3",
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["results"]["d_p"] > 0
    code, out = run(
        capsys, "russo", "--k", "0", "--n", "1", "--p", "0.5", "--q", "0.5",
        "--replicas", "500", "--seed", "3", "--per-edge",
    )
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "class,derivative,stderr"
    assert lines[2].startswith("axial,0.0,")


def test_curve_subcommand_small(capsys, tmp_path):
    csv_path = tmp_path / "points.csv"
    code, out = run(
        capsys, "curve", "--k", "1", "--pmin", "0.34", "--pmax", "0.46",
        "--points", "3", "--n", "8", "--tol", "5e-3",
        "--replicas", "800", "--seed", "2", "--csv", str(csv_path),
        "--no-two-scale",
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert len(doc["results"]["points"]) == 3
    assert "diagnostics" in doc["results"]
    assert "scale_drift" not in doc["results"]
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "p,q_est,ci,n,replicas"
    assert len(lines) == 4


def test_curve_two_scale_default_reports_drift(capsys):
    code, out = run(
        capsys, "curve", "--k", "1", "--pmin", "0.36", "--pmax", "0.46",
        "--points", "3", "--n", "6", "--tol", "5e-3",
        "--replicas", "400", "--seed", "4",
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert len(doc["results"]["scale_drift"]) == 3
    assert all(d >= 0 for d in doc["results"]["scale_drift"])
    assert doc["results"]["points_2n"][0]["n"] == 12


def test_curve_inverse_reports_closure(capsys):
    code, out = run(
        capsys, "curve", "--k", "1", "--pmin", "0.36", "--pmax", "0.46",
        "--points", "3", "--n", "6", "--tol", "5e-3",
        "--replicas", "400", "--seed", "6", "--no-two-scale", "--inverse",
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert len(doc["results"]["inverse_points"]) == 3
    assert doc["results"]["diagnostics"]["inverse_max_error"] is not None


def test_verify_collapse_with_mc(capsys):
    code, out = run(
        capsys, "verify", "collapse", "--k", "1", "--p", "0.35",
        "--n", "8", "--replicas", "4000", "--seed", "2",
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["results"]["mc_holds"]


def test_verify_lemma2_passes(capsys):
    code, out = run(capsys, "verify", "lemma2")
    assert code == EXIT_OK
    assert json.loads(out)["results"]["holds"]


def test_verify_collapse_exact_only(capsys):
    code, out = run(capsys, "verify", "collapse", "--k", "1", "--p", "0.35")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["results"]["exact_gap"] <= 1e-12


def test_verify_russo_exact_only(capsys):
    code, out = run(capsys, "verify", "russo")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["results"]["exact_holds"]


def test_verify_lemma1_small(capsys):
    code, out = run(
        capsys, "verify", "lemma1", "--p", "0.35", "--q", "0.05",
        "--k", "1", "--m", "4", "--replicas", "2000", "--seed", "1",
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["results"]["axial_bonds"] == 144
    assert doc["results"]["holds_within_4sigma"]


def test_exit_code_bad_params(capsys):
    code = main(["theta", "--k", "0", "--n", "1", "--p", "1.5", "--q", "0.3"])
    assert code == EXIT_BAD_PARAMS


def test_exit_code_resource_limit(capsys):
    code = main([
        "oracle", "--k", "1", "--shape", "centered:1", "--p", "0.5",
        "--q", "0.5", "--event", "origin-to-boundary:1",
    ])
    assert code == EXIT_RESOURCE


def test_exit_code_check_failed(capsys, monkeypatch):
    real = renorm_mod.layer_union_bound_report

    def rigged(*a, **kw):
        rep = real(*a, **kw)
        rep.holds_within_noise = False
        return rep

    monkeypatch.setattr(renorm_mod, "layer_union_bound_report", rigged)
    code = main([
        "verify", "lemma1", "--p", "0.35", "--q", "0.05", "--k", "0",
        "--m", "2", "--replicas", "50", "--seed", "1",
    ])
    assert code == EXIT_CHECK_FAILED


def test_out_flag_writes_file(capsys, tmp_path):
    target = tmp_path / "bounds.json"
    code = main(["bounds", "--k", "0", "--out", str(target)])
    assert code == EXIT_OK
    assert json.loads(target.read_text())["results"]["p_k"] == 0.5


def test_event_parser_roundtrip():
    assert parse_event("origin-to-boundary:3") == OriginToBoundary(3)
    assert parse_event("connected:0_0_0:1_2_1") == Connected((0, 0, 0), (1, 2, 1))
    assert parse_event("left-right") == LeftRightCrossing()
    assert parse_event("block-reach:-1_2:6") == BlockReach(-1, 2, 6)
    with pytest.raises(GeometryError):
        parse_event("no-such-event:1")
    with pytest.raises(GeometryError):
        parse_event("connected:0_0:1")
