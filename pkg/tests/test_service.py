import math
import warnings

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from starlette.testclient import TestClient

from renvol.service import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


class TestModels:
    def test_list(self, client):
        doc = client.get("/models").json()
        assert [m["n"] for m in doc["models"]] == [2, 3, 4, 5]
        h4 = doc["models"][1]
        assert h4["closes"] and h4["x_center"] == pytest.approx(2.0)


class TestVolume:
    def test_both_methods(self, client):
        doc = client.post("/volume", json={"n": 3}).json()
        want = 4 * math.pi ** 2 / 3
        assert doc["series"]["V"] == pytest.approx(want, rel=1e-6)
        assert doc["fit"]["V"] == pytest.approx(want, rel=1e-6)

    def test_methods_flag(self, client):
        doc = client.post("/volume", json={
            "n": 3, "methods": {"fit": False}}).json()
        assert "fit" not in doc and "series" in doc

    def test_invalid_scenario_field_path(self, client):
        resp = client.post("/volume", json={"n": 3, "kappa": 2.0})
        assert resp.status_code == 422
        assert resp.json()["detail"]["field"] == "kappa"

    def test_all_methods_disabled(self, client):
        resp = client.post("/volume", json={
            "n": 3, "methods": {"fit": False, "series": False}})
        assert resp.status_code == 400


class TestVSolve:
    def test_h4(self, client):
        doc = client.post("/vsolve", json={"n": 3}).json()
        assert doc["B0"] == pytest.approx(2.0 / 3.0, abs=1e-6)
        assert doc["Qn"] == pytest.approx(2.0, abs=1e-6)
        assert doc["kn"] == pytest.approx(3.0, rel=1e-12)

    def test_collar_rejected(self, client):
        resp = client.post("/vsolve", json={"n": 3, "kappa": 0.0})
        assert resp.status_code == 400


class TestGaussBonnet:
    def test_h4(self, client):
        doc = client.post("/gb", json={"n": 3, "euler_char": 1}).json()
        assert doc["chi_computed"] == pytest.approx(1.0, abs=1e-4)
        assert doc["chi_expected"] == 1

    def test_h6(self, client):
        doc = client.post("/gb", json={"n": 5}).json()
        assert doc["chi_computed"] == pytest.approx(1.0, abs=1e-4)

    def test_unsupported_dimension(self, client):
        resp = client.post("/gb", json={"n": 2})
        assert resp.status_code == 400


class TestScatter:
    def test_value(self, client):
        doc = client.post("/scatter", json={"n": 2, "s": 1.5}).json()
        assert doc["S_value"] == pytest.approx(-0.5, abs=1e-8)

    def test_odd_volume(self, client):
        doc = client.post("/scatter", json={"n": 3}).json()
        assert doc["V_scatter"] == pytest.approx(4 * math.pi ** 2 / 3,
                                                 rel=1e-5)

    def test_even_volume_report(self, client):
        doc = client.post("/scatter", json={"n": 2}).json()
        assert doc["V_scatter"] == pytest.approx(-2 * math.pi * math.log(2),
                                                 rel=1e-5)
        assert "terms" in doc

    def test_bad_s(self, client):
        resp = client.post("/scatter", json={"n": 2, "s": 0.5})
        assert resp.status_code == 400


@pytest.fixture(scope="module")
def verify_doc(client):
    return client.post("/verify-all", json={"scenarios": [
        {"name": "h4", "n": 3, "euler_char": 1}]}).json()


class TestVerifyAllAndReport:
    def test_all_passed(self, verify_doc):
        assert verify_doc["all_passed"] is True
        assert verify_doc["scenarios"][0]["name"] == "h4"
        assert len(verify_doc["scenarios"][0]["results"]) == 9

    def test_failing_scenario_flag(self, client):
        doc = client.post("/verify-all", json={"scenarios": [
            {"name": "h4", "n": 3,
             "tolerances": {"volume_fit_vs_series": 1e-30}}]}).json()
        assert doc["all_passed"] is False

    def test_report_formats(self, client, verify_doc):
        results = verify_doc["scenarios"][0]["results"]
        for fmt, probe in (("json", "check_id"), ("csv", "thm_1_1"),
                           ("markdown", "paper_ref")):
            doc = client.post("/report", json={
                "results": results, "format": fmt}).json()
            assert probe in doc["content"]

    def test_report_bad_format(self, client, verify_doc):
        resp = client.post("/report", json={
            "results": verify_doc["scenarios"][0]["results"],
            "format": "yaml"})
        assert resp.status_code == 422  # rejected by the request model

    def test_report_nonfinite_roundtrip(self, client):
        # solver failures arrive as nulls and render as failed rows
        row = {"check_id": "thm_1_1", "lhs": None, "rhs": None,
               "abs_err": None, "rel_err": None, "tolerance": 1e-6,
               "passed": False, "runtime_ms": 5}
        doc = client.post("/report", json={
            "results": [row], "format": "markdown"}).json()
        assert "FAIL" in doc["content"]
