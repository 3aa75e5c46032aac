import json

import pytest
from click.testing import CliRunner

from renvol.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, list(args), catch_exceptions=False)


class TestModelsList:
    def test_lists_defaults(self, runner):
        res = invoke(runner, "models", "list")
        assert res.exit_code == 0
        names = [m["name"] for m in json.loads(res.output)["models"]]
        assert "hyperbolic-n3" in names


class TestScenarioResolution:
    def test_builtin_name(self, runner):
        res = invoke(runner, "gb", "hyperbolic-n3")
        assert res.exit_code == 0
        assert json.loads(res.output)["chi_computed"] == pytest.approx(
            1.0, abs=1e-4)

    def test_adhoc_flags(self, runner):
        res = invoke(runner, "volume", "--n", "3", "--kappa", "0")
        assert res.exit_code == 0
        doc = json.loads(res.output)
        assert doc["series"]["V"] == pytest.approx(doc["fit"]["V"],
                                                   rel=1e-6)

    def test_config_scenario_with_flag_override(self, runner, tmp_path):
        cfg = tmp_path / "scn.toml"
        cfg.write_text('[scenario.mine]\nn = 3\nkappa = 1\n')
        res = invoke(runner, "--config", str(cfg), "volume", "mine",
                     "--kappa", "0")
        assert res.exit_code == 0
        # kappa 0 collar volume (unit flat boundary), not hyperbolic
        assert json.loads(res.output)["series"]["V"] == pytest.approx(
            -1.0 / 3.0, rel=1e-6)

    def test_unknown_scenario(self, runner):
        res = invoke(runner, "volume", "no-such-scenario")
        assert res.exit_code == 2

    def test_missing_n(self, runner):
        res = invoke(runner, "volume")
        assert res.exit_code == 2

    def test_invalid_field_exit_2(self, runner):
        res = invoke(runner, "vsolve", "--n", "3", "--kappa", "2")
        assert res.exit_code == 2
        assert "kappa" in res.output

    def test_missing_config_file(self, runner):
        res = invoke(runner, "--config", "/no/such/file.toml", "models",
                     "list")
        assert res.exit_code == 2


class TestScatterCommand:
    def test_value(self, runner):
        res = invoke(runner, "scatter", "--n", "2", "--s", "1.5")
        assert res.exit_code == 0
        assert json.loads(res.output)["S_value"] == pytest.approx(
            -0.5, abs=1e-8)


@pytest.fixture(scope="module")
def results_file(tmp_path_factory):
    runner = CliRunner()
    cfg = tmp_path_factory.mktemp("cfg") / "scn.toml"
    cfg.write_text(
        '[scenario.good]\nn = 3\neuler_char = 1\n'
        '[scenario.bad]\nn = 3\n'
        '[scenario.bad.tolerances]\nvolume_fit_vs_series = 1e-30\n')
    out = tmp_path_factory.mktemp("out") / "results.json"
    res = runner.invoke(main, ["--config", str(cfg), "--out", str(out),
                               "verify-all"])
    assert res.exit_code == 1  # the 'bad' scenario must fail
    return out


class TestVerifyAllAndReport:
    def test_results_document(self, results_file):
        doc = json.loads(results_file.read_text())
        assert doc["all_passed"] is False
        names = [s["name"] for s in doc["scenarios"]]
        assert names == ["good", "bad"]
        good = doc["scenarios"][0]["results"]
        assert all(r["passed"] for r in good)

    def test_verify_all_passing_exit_0(self, runner, tmp_path):
        cfg = tmp_path / "scn.toml"
        cfg.write_text('[scenario.good]\nn = 3\neuler_char = 1\n')
        res = runner.invoke(main, ["--config", str(cfg), "verify-all"])
        assert res.exit_code == 0
        assert json.loads(res.output)["all_passed"] is True

    def test_report_markdown(self, runner, results_file):
        res = invoke(runner, "report", str(results_file), "--format",
                     "markdown")
        assert res.exit_code == 0
        assert "paper_ref" in res.output.split("\n")[0]
        assert "FAIL" in res.output

    def test_report_csv_line_count(self, runner, results_file):
        doc = json.loads(results_file.read_text())
        total = sum(len(s["results"]) for s in doc["scenarios"])
        res = invoke(runner, "report", str(results_file), "--format", "csv")
        assert res.exit_code == 0
        assert len(res.output.strip().split("\n")) == total + 1

    def test_report_out_file(self, runner, results_file, tmp_path):
        target = tmp_path / "report.md"
        res = invoke(runner, "--out", str(target), "report",
                     str(results_file), "--format", "markdown")
        assert res.exit_code == 0
        assert "paper_ref" in target.read_text()

    def test_report_missing_file(self, runner):
        res = invoke(runner, "report", "/no/such/results.json")
        assert res.exit_code == 2

    def test_report_bad_format_exit_2(self, runner, results_file):
        res = runner.invoke(main, ["report", str(results_file),
                                   "--format", "yaml"])
        assert res.exit_code == 2
