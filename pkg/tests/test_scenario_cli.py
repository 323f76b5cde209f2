import copy
import csv
import json

import numpy as np
import pytest

from regimedyn import cli
from regimedyn import scenario as sc
from regimedyn.errors import ScenarioError

MINIMAL = {
    "dimension": 1,
    "regimes": [{"label": "A", "operator": {"type": "affine", "matrix": [[0.5]], "offset": [1.0]}}],
    "initial_state": [0.0],
    "signal": {"kind": "periodic", "word": ["A"]},
    "horizon": 3,
    "analyses": ["simulate"],
}


def bundled_dict(name="collateral"):
    return json.loads(sc.bundled_scenario(name).read_text())


def write(tmp_path, data, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data, indent=2))
    return p


# -- loading ------------------------------------------------------------------


def test_minimal_loads():
    s = sc.scenario_from_dict(copy.deepcopy(MINIMAL))
    assert s.dimension == 1 and s.horizon == 3 and s.analyses == ("simulate",)


def test_bundled_collateral_loads():
    s = sc.load_scenario(sc.bundled_scenario())
    assert s.system.size == 2 and s.dimension == 2 and s.system.labels == ("N", "C")
    op = s.system.operators[0]
    assert (op.alpha, op.beta, op.mu, op.nu, op.qbar, op.bbar) == (0.8, 0.8, 1.6, 1.6, 0.2, 0.2)


def test_probability_row_error_names_row():
    d = copy.deepcopy(MINIMAL)
    d["regimes"].append({"label": "B", "operator": {"type": "affine", "matrix": [[0.1]]}})
    d["signal"] = {"kind": "markov", "transition": [[1.0, 0.0], [0.6, 0.3]], "seed": 1}
    with pytest.raises(ScenarioError) as info:
        sc.scenario_from_dict(d)
    assert "transition[1]" in str(info.value) and "0.9" in str(info.value)
    d["signal"] = {"kind": "iid", "weights": [0.6, 0.3], "seed": 1}
    with pytest.raises(ScenarioError, match=r"weights.*0\.9"):
        sc.scenario_from_dict(d)


def test_unknown_field_suggestion():
    d = copy.deepcopy(MINIMAL)
    d["horizn"] = 4
    with pytest.raises(ScenarioError, match="did you mean 'horizon'"):
        sc.scenario_from_dict(d)
    d = copy.deepcopy(MINIMAL)
    d["regimes"][0]["operator"]["ofset"] = [1.0]
    with pytest.raises(ScenarioError, match=r"regimes\[0\]\.operator.*did you mean 'offset'"):
        sc.scenario_from_dict(d)


def test_dangling_label():
    d = copy.deepcopy(MINIMAL)
    d["signal"]["word"] = ["A", "Q"]
    with pytest.raises(ScenarioError, match="Q"):
        sc.scenario_from_dict(d)


@pytest.mark.parametrize("mutate, needle", [
    (lambda d: d.update(dimension=2), "2x2"),
    (lambda d: d["regimes"][0]["operator"].update(type="quadratic"), "type"),
    (lambda d: d["signal"].update(kind="iid"), "seed"),
    (lambda d: d.update(horizon=-1), "horizon"),
    (lambda d: d["regimes"].append(copy.deepcopy(d["regimes"][0])), "label"),
])
def test_schema_and_semantic_violations(mutate, needle):
    d = copy.deepcopy(MINIMAL)
    mutate(d)
    with pytest.raises(ScenarioError, match=needle):
        sc.scenario_from_dict(d)


def test_expression_error_has_file_line(tmp_path):
    d = {
        "dimension": 2,
        "regimes": [{"label": "E", "operator": {"type": "expression", "components": ["x0", "x1 +* 2"]}}],
    }
    p = write(tmp_path, d)
    with pytest.raises(ScenarioError) as info:
        sc.load_scenario(p)
    msg = str(info.value)
    line = next(i + 1 for i, l in enumerate(p.read_text().splitlines()) if "+*" in l)
    assert f"s.json:{line}" in msg and "offset 4" in msg


def test_bad_json(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{"dimension": 1,,}')
    with pytest.raises(ScenarioError, match="broken.json:1"):
        sc.load_scenario(p)


# -- running ------------------------------------------------------------------


def test_collateral_full_report():
    rep = sc.run_scenario(sc.load_scenario(sc.bundled_scenario()), timings=False)
    r = rep.results
    assert np.allclose(r["fixed-point"]["point"], [1, 1], atol=1e-10, rtol=0)
    assert abs(r["jsr"]["witness_spectral_radius"] - 1.0498) <= 5e-4
    assert r["jsr"]["verdict"]["status"] == "UnstableCertified"
    assert r["commute"]["verdict"]["status"] == "RuledOut"
    assert rep.timings is None


def test_zero_horizon_single_state():
    d = copy.deepcopy(MINIMAL)
    d["horizon"] = 0
    rep = sc.run_scenario(sc.scenario_from_dict(d))
    assert rep.to_dict()["results"]["simulate"]["states"] == [[0.0]]


def test_single_regime_jsr_collapses():
    d = {"dimension": 2, "regimes": [{"label": "A", "operator": {"type": "affine",
                                                                 "matrix": [[0.5, 1.0], [0.0, 0.3]]}}],
         "analyses": ["jsr"]}
    rep = sc.run_scenario(sc.scenario_from_dict(d))
    b = rep.results["jsr"]["bounds"]
    assert b["lower"] == pytest.approx(0.5, abs=1e-12) and b["witness_word"] == ["A"]
    # power-iteration oracle for rho(A)
    A = np.array([[0.5, 1.0], [0.0, 0.3]])
    v = np.ones(2)
    for _ in range(2000):
        v = A @ v
        v /= np.linalg.norm(v)
    assert b["lower"] == pytest.approx(float(v @ A @ v), abs=1e-9)


def test_partial_failure_kept_in_report():
    d = {"dimension": 1, "regimes": [{"label": "T", "operator": {"type": "affine", "matrix": [[1.0]],
                                                                 "offset": [1.0]}}],
         "initial_state": [0.0], "signal": {"kind": "periodic", "word": ["T"]}, "horizon": 2,
         "analyses": ["fixed-point", "simulate"]}
    rep = sc.run_scenario(sc.scenario_from_dict(d))
    assert "error" in rep.results["fixed-point"]
    assert rep.to_dict()["results"]["simulate"]["states"] == [[0.0], [1.0], [2.0]]


def test_all_failures_raise():
    d = {"dimension": 1, "regimes": [{"label": "T", "operator": {"type": "affine", "matrix": [[1.0]],
                                                                 "offset": [1.0]}}],
         "analyses": ["fixed-point"]}
    with pytest.raises(sc.AnalysisFailed):
        sc.run_scenario(sc.scenario_from_dict(d))


# -- emitting -------------------------------------------------------------------


def test_trajectory_csv_at_fixed_point(tmp_path):
    d = bundled_dict()
    d["initial_state"] = [1.0, 1.0]
    d["horizon"] = 2
    d["analyses"] = ["fixed-point", "simulate"]
    rep = sc.run_scenario(sc.scenario_from_dict(d), timings=False)
    sc.emit_report(rep, tmp_path)
    lines = (tmp_path / "trajectory.csv").read_bytes().split(b"\n")
    assert lines[0] == b"t,regime,x0,x1" and lines[1] == b"0,,1,1"
    assert lines[2].startswith(b"1,N,")
    assert b"\r" not in (tmp_path / "trajectory.csv").read_bytes()


def test_deviation_ratios_and_round_trip(tmp_path):
    rep = sc.run_scenario(sc.load_scenario(sc.bundled_scenario()), timings=False)
    sc.emit_report(rep, tmp_path)
    rows = list(csv.reader((tmp_path / "deviations.csv").open()))
    assert rows[0] == ["t", "deviation_inf"]
    dev = [float(r[1]) for r in rows[1:]]
    for k in range(6):
        assert abs(dev[2 * k + 2] / dev[2 * k] - 1.0498) <= 1e-3
    back = json.loads((tmp_path / "report.json").read_text())
    assert back == rep.to_dict()
    assert sc.AnalysisReport.from_dict(back).to_json() == rep.to_json()
    # 17 significant digits round-trip exactly
    traj = list(csv.reader((tmp_path / "trajectory.csv").open()))
    assert [float(v) for v in traj[5][2:]] == back["results"]["simulate"]["states"][4]


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rep = sc.run_scenario(sc.scenario_from_dict(copy.deepcopy(MINIMAL)))
    with pytest.raises(ScenarioError):
        sc.emit_report(rep, blocker / "sub")


# -- command line ---------------------------------------------------------------


def test_paper_example_exit_zero(capsys):
    assert cli.main(["paper-example"]) == 0
    out = capsys.readouterr().out
    for q in ("lambda_1", "lambda_2", "A_C A_N", "trace", "JSR verdict", "invariant-law"):
        assert q in out


def test_paper_example_breach_exits_one(monkeypatch, capsys):
    ref = dict(sc.REFERENCE_VALUES, lambda_1=1.2)
    monkeypatch.setattr(sc, "REFERENCE_VALUES", ref)
    assert cli.main(["paper-example"]) == 1
    assert "lambda_1" in capsys.readouterr().err


def test_exit_codes(tmp_path, capsys):
    good = str(sc.bundled_scenario())
    assert cli.main(["validate", "--scenario", good]) == 0
    assert cli.main(["frobnicate"]) == 2
    assert cli.main(["analyze"]) == 2
    assert cli.main(["jsr", "--scenario", good, "--seed", "-3"]) == 2
    bad = copy.deepcopy(MINIMAL)
    bad["horizn"] = 1
    assert cli.main(["validate", "--scenario", str(write(tmp_path, bad))]) == 3
    assert cli.main(["analyze", "--scenario", str(tmp_path / "missing.json")]) == 3
    sing = {"dimension": 1, "regimes": [{"label": "T", "operator": {"type": "affine", "matrix": [[1.0]],
                                                                    "offset": [1.0]}}],
            "analyses": ["fixed-point", "jsr"]}
    assert cli.main(["analyze", "--scenario", str(write(tmp_path, sing, "sing.json"))]) == 4


def test_flags_before_or_after_subcommand(tmp_path):
    good = str(sc.bundled_scenario())
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["--scenario", good, "jsr", "--depth", "3", "--out", str(a), "--no-timings"]) == 0
    assert cli.main(["jsr", "--scenario", good, "--depth", "3", "--out", str(b), "--no-timings"]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    rep = json.loads((a / "report.json").read_text())
    assert rep["results"]["jsr"]["bounds"]["depth"] <= 3 and "timings" not in rep


def test_seed_override_changes_stochastic_path(tmp_path):
    m = str(sc.bundled_scenario("collateral_markov"))
    for seed, d in ((1, "s1"), (2, "s2")):
        assert cli.main(["simulate", "--scenario", m, "--seed", str(seed), "--out", str(tmp_path / d),
                         "--no-timings"]) == 0
    r1 = json.loads((tmp_path / "s1" / "report.json").read_text())
    r2 = json.loads((tmp_path / "s2" / "report.json").read_text())
    assert r1["results"]["simulate"]["regimes"] != r2["results"]["simulate"]["regimes"]


def test_byte_identical_reports_across_threads(tmp_path):
    m = str(sc.bundled_scenario("collateral_markov"))
    outs = []
    for k, threads in enumerate((1, 1, 4)):
        d = tmp_path / f"run{k}"
        assert cli.main(["analyze", "--scenario", m, "--out", str(d), "--no-timings",
                         "--threads", str(threads)]) == 0
        outs.append((d / "report.json").read_bytes())
    assert outs[0] == outs[1] == outs[2]
