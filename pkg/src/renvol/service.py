"""HTTP service exposing the verification toolkit.

Every computation endpoint takes a scenario description (the same shape as
the CLI/TOML scenario) and returns JSON.  Invalid scenarios produce a 422
with the offending field path; unsupported operations produce a 400.
"""

from __future__ import annotations

import math
from typing import Any, Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from renvol.checks import (
    CheckResult,
    ConfigError,
    Scenario,
    UsageError,
    default_scenarios,
    emit_report,
    run_scenario,
)

__all__ = ["app", "ScenarioIn", "scenario_from_payload"]

app = FastAPI(title="renvol", version="1.0.0",
              description="Renormalized-volume and Q-curvature "
                          "verification service for radial model "
                          "geometries.")


class ScenarioIn(BaseModel):
    name: str = "adhoc"
    n: int
    kappa: float = 1.0
    boundary_volume: float | Literal["default"] = "default"
    euler_char: int | None = None
    tolerances: dict[str, float] = Field(default_factory=dict)
    methods: dict[str, bool] = Field(default_factory=dict)


class ScatterRequest(ScenarioIn):
    s: float | None = None


class VerifyAllRequest(BaseModel):
    scenarios: list[ScenarioIn] | None = None


class CheckResultModel(BaseModel):
    check_id: str
    lhs: float | None  # None encodes a non-finite value (solver failure)
    rhs: float | None
    abs_err: float | None
    rel_err: float | None
    tolerance: float
    passed: bool
    runtime_ms: int

    def to_result(self) -> CheckResult:
        d = self.model_dump()
        for key in ("lhs", "rhs"):
            if d[key] is None:
                d[key] = math.nan
        for key in ("abs_err", "rel_err"):
            if d[key] is None:
                d[key] = math.inf
        return CheckResult(**d)


class ReportRequest(BaseModel):
    results: list[CheckResultModel]
    format: Literal["json", "csv", "markdown"] = "json"


def scenario_from_payload(payload: ScenarioIn) -> Scenario:
    try:
        return Scenario.from_dict(payload.model_dump(exclude={"s"}))
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail={
            "field": exc.field_path, "message": str(exc)})


def _clean(value: Any) -> Any:
    """JSON-safe copy: non-finite floats become None."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


@app.get("/models")
def list_models() -> dict:
    out = []
    for scn in default_scenarios():
        m = scn.model()
        out.append({
            "name": scn.name,
            "n": scn.n,
            "kappa": scn.kappa,
            "boundary_volume": m.boundary.total_volume,
            "euler_char": scn.euler_char,
            "x_center": m.x_center,
            "closes": m.closes,
        })
    return {"models": out}


@app.post("/volume")
def volume(payload: ScenarioIn) -> dict:
    from renvol.volume import volume_expansion_fit, volume_expansion_series

    scn = scenario_from_payload(payload)
    model = scn.model()
    out: dict = {"name": scn.name}
    if scn.method("series"):
        out["series"] = _clean(volume_expansion_series(model).to_dict())
    if scn.method("fit"):
        out["fit"] = _clean(volume_expansion_fit(model).to_dict())
    if not out.keys() - {"name"}:
        raise HTTPException(status_code=400,
                            detail="both volume methods disabled")
    return out


@app.post("/vsolve")
def vsolve(payload: ScenarioIn) -> dict:
    from renvol.vequation import VSolveError, solve_v

    scn = scenario_from_payload(payload)
    model = scn.model()
    try:
        sol = solve_v(model)
    except VSolveError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return {"name": scn.name, **_clean(sol.summary())}


@app.post("/gb")
def gauss_bonnet(payload: ScenarioIn) -> dict:
    from renvol.volume import GeometryError, anderson_check, gb6_check

    scn = scenario_from_payload(payload)
    model = scn.model()
    chi_expected = scn.euler_char
    try:
        if scn.n == 3:
            chi = anderson_check(model)
        elif scn.n == 5:
            chi = gb6_check(model)
        else:
            raise HTTPException(
                status_code=400,
                detail="Euler-characteristic identities implemented for "
                       "n = 3 and n = 5")
    except GeometryError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return {"name": scn.name, "chi_computed": _clean(chi),
            "chi_expected": chi_expected}


@app.post("/scatter")
def scatter(payload: ScatterRequest) -> dict:
    from renvol.scattering import (ScatteringError, scattering_value,
                                   volume_via_scattering_even,
                                   volume_via_scattering_odd)

    scn = scenario_from_payload(payload)
    model = scn.model()
    try:
        if payload.s is not None:
            return {"name": scn.name, "s": payload.s,
                    "S_value": _clean(scattering_value(model, payload.s))}
        if scn.n % 2:
            return {"name": scn.name,
                    "V_scatter": _clean(volume_via_scattering_odd(model))}
        rep = volume_via_scattering_even(model)
        return {"name": scn.name, **_clean(rep.to_dict())}
    except ScatteringError as exc:
        raise HTTPException(status_code=400, detail=str(exc))


@app.post("/verify-all")
def verify_all(payload: VerifyAllRequest) -> dict:
    scenarios = ([scenario_from_payload(p) for p in payload.scenarios]
                 if payload.scenarios else default_scenarios())
    out = []
    all_passed = True
    for scn in scenarios:
        results = run_scenario(scn)
        all_passed = all_passed and all(r.passed for r in results)
        out.append({"name": scn.name,
                    "results": [_clean(r.to_dict()) for r in results]})
    return {"scenarios": out, "all_passed": all_passed}


@app.post("/report")
def report(payload: ReportRequest) -> dict:
    results = [r.to_result() for r in payload.results]
    try:
        content = emit_report(results, format=payload.format)
    except UsageError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return {"format": payload.format, "content": content}
