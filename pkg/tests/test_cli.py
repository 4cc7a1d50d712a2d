import json

import pytest
from typer.testing import CliRunner

from shock_stability.main import app

runner = CliRunner()


@pytest.fixture
def small_config(tmp_path):
    def write(**experiment):
        document = {
            "type": "isentropic",
            "gamma": 2.0,
            "sim": {"N": 300, "domain": [-2.0, 1.5], "t_end": 0.03, "snapshot_times": [0.01]},
            "experiment": {"base": [1.0, 0.0], "family": "one", "s": 1.0, "kind": "riemann", "eps": 0.05, **experiment},
        }
        path = tmp_path / "small.json"
        path.write_text(json.dumps(document))
        return str(path)

    return write


def test_check_system_preset(tmp_path):
    result = runner.invoke(app, ["check-system", "--config", "isentropic_g2", "--out", str(tmp_path), "-n", "30"])
    assert result.exit_code == 0, result.output
    audit = json.loads((tmp_path / "audit.json").read_text())
    assert audit["compatibility_ok"]
    assert audit["convex_ok"]
    assert audit["liu_convexity_ok"]


def test_check_system_full_euler_closed_form(tmp_path):
    result = runner.invoke(app, ["check-system", "-c", "full_euler_g14", "-o", str(tmp_path), "-n", "30"])
    assert result.exit_code == 0, result.output
    audit = json.loads((tmp_path / "audit.json").read_text())
    assert audit["closed_form_ok"]


def test_missing_config_exits_with_usage_error(tmp_path):
    result = runner.invoke(app, ["check-system", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "not found" in result.output


def test_invalid_config_exits_with_usage_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"type": "isentropic", "gamma": 2.0, "sim": {"N": -3}}')
    result = runner.invoke(app, ["check-system", "--config", str(path), "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "sim.N" in result.output


def test_shock_curve_csv(tmp_path):
    result = runner.invoke(
        app, ["shock-curve", "-c", "isentropic_g2", "-o", str(tmp_path), "--s-max", "1.0", "--n-points", "5"]
    )
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "curve.csv").read_text().splitlines()
    assert lines[0] == "s,rho,m,sigma,rh_residual,entropy_production"
    assert len(lines) == 6
    last = [float(v) for v in lines[-1].split(",")]
    assert last[0] == 1.0
    assert last[3] == pytest.approx(-6.0**0.5)


def test_shock_curve_rejects_bad_base(tmp_path):
    result = runner.invoke(app, ["shock-curve", "-c", "isentropic_g2", "-o", str(tmp_path), "--base", "1,2,3"])
    assert result.exit_code == 2


def test_verify_lemmas_passes_for_power_law(tmp_path):
    result = runner.invoke(
        app, ["verify-lemmas", "-c", "isentropic_g2", "-o", str(tmp_path), "--n-grid", "5"]
    )
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "lemmas.json").read_text())
    assert report["failures"] == []


def test_verify_lemmas_reports_liu_failure(tmp_path):
    result = runner.invoke(
        app, ["verify-lemmas", "-c", "nonconvex_cubic", "-o", str(tmp_path), "--s-max", "0.5", "--n-grid", "11"]
    )
    assert result.exit_code == 1
    assert "Liu failure interval" in result.output
    report = json.loads((tmp_path / "lemmas.json").read_text())
    assert report["hypotheses"]["liu_failure_intervals"]


def test_simulate_writes_snapshots(tmp_path, small_config):
    out = tmp_path / "sim"
    result = runner.invoke(app, ["simulate", "-c", small_config(), "-o", str(out)])
    assert result.exit_code == 0, result.output
    assert sorted(p.name for p in (out / "snapshots").iterdir()) == [
        "snapshot_000.csv", "snapshot_001.csv", "snapshot_002.csv",
    ]
    metadata = json.loads((out / "metadata.json").read_text())
    assert metadata["within_entropy_budget"]
    assert metadata["snapshot_times"] == pytest.approx([0.0, 0.01, 0.03])


def test_stability_report_outputs(tmp_path, small_config):
    out = tmp_path / "report"
    result = runner.invoke(app, ["stability-report", "-c", small_config(kind="perturbed_shock"), "-o", str(out), "--seed", "4"])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    assert report["seed"] == 4
    assert report["stability"]["fits_finite"]
    assert (out / "ledger.csv").exists()
    assert (out / "path.csv").exists()


def test_stability_report_refinement(tmp_path, small_config):
    out = tmp_path / "refined"
    result = runner.invoke(app, ["stability-report", "-c", small_config(kind="perturbed_shock"), "-o", str(out), "--refine"])
    assert result.exit_code == 0, result.output
    refinement = json.loads((out / "report.json").read_text())["refinement"]
    assert refinement["n_coarse"] == 300
    assert refinement["n_fine"] == 600
    assert refinement["rel_tol"] == 0.2
    assert len(refinement["right_growth_fit"]) == 2
    assert isinstance(refinement["stable"], bool)


def test_stability_report_n_shock(tmp_path, small_config):
    out = tmp_path / "nshock"
    config = small_config(family="n", s=0.8)
    document = json.loads(open(config).read())
    document["sim"]["domain"] = [-1.5, 2.0]
    with open(config, "w") as handle:
        json.dump(document, handle)
    result = runner.invoke(app, ["stability-report", "-c", config, "-o", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    assert report["family"] == "n"
    assert report["reflected"]
    assert report["sigma"] > 0.0
