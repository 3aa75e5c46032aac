"""Command-line front end.

The CLI is a thin HTTP client over the service in renvol.service: by
default it mounts the ASGI app in-process, and --server points it at a
running instance instead.  Scenarios come from a TOML config file
(--config) with [scenario.<name>] tables, from the built-in defaults, or
ad hoc via flags; individual flags override config values.

Exit codes: 0 success / all checks passed; 1 at least one check failed;
2 configuration or usage error.
"""

from __future__ import annotations

import json
import sys

import click
import httpx

try:
    import tomllib as tomli
except ModuleNotFoundError:
    import tomli

from renvol.checks import ConfigError, Scenario, default_scenarios

EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


class CliError(click.ClickException):
    """Configuration/usage error; exits with code 2 per the contract."""

    exit_code = EXIT_USAGE


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # in-process: drive the ASGI app synchronously through the
    # starlette-provided httpx.Client subclass
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

        from renvol.service import app
        return TestClient(app, base_url="http://renvol.internal")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}")
    except tomli.TOMLDecodeError as exc:
        raise CliError(f"invalid config file {path}: {exc}")


def _scenario_payload(config: dict, name: str | None, n: int | None,
                      kappa: float | None, boundary_volume: str | None,
                      euler_char: int | None) -> dict:
    """Assemble the scenario dict: config table (if any) with flag
    overrides; built-in defaults fill in a known name with no config."""
    tables = config.get("scenario", {})
    payload: dict = {}
    if name is not None and name in tables:
        payload = dict(tables[name])
        payload["name"] = name
    elif name is not None:
        for scn in default_scenarios():
            if scn.name == name:
                payload = {"name": scn.name, "n": scn.n,
                           "kappa": scn.kappa,
                           "boundary_volume": scn.boundary_volume,
                           "euler_char": scn.euler_char}
                break
        else:
            if n is None:
                raise CliError(
                    f"unknown scenario {name!r}: not in the config file or "
                    "the built-in defaults, and no --n given")
            payload = {"name": name}
    else:
        payload = {"name": "adhoc"}
    if n is not None:
        payload["n"] = n
    if kappa is not None:
        payload["kappa"] = kappa
    if boundary_volume is not None:
        payload["boundary_volume"] = (
            boundary_volume if boundary_volume == "default"
            else float(boundary_volume))
    if euler_char is not None:
        payload["euler_char"] = euler_char
    if "n" not in payload:
        raise CliError("scenario needs n: pass --n or name a "
                                   "configured scenario")
    try:
        Scenario.from_dict(payload)  # validate before shipping
    except ConfigError as exc:
        raise CliError(str(exc))
    return payload


def _emit(doc: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(doc if doc.endswith("\n") else doc + "\n")
    else:
        click.echo(doc)


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise CliError(f"{path} failed ({resp.status_code}): "
                                   f"{detail}")
    return resp.json()


_scenario_options = [
    click.argument("scenario", required=False),
    click.option("--n", type=int, default=None,
                 help="boundary dimension (>= 2)"),
    click.option("--kappa", type=float, default=None,
                 help="boundary curvature: -1, 0, or 1"),
    click.option("--boundary-volume", "boundary_volume", default=None,
                 help="total boundary volume, or 'default'"),
    click.option("--euler-char", "euler_char", type=int, default=None,
                 help="expected Euler characteristic"),
]


def _with_scenario_options(fn):
    for opt in reversed(_scenario_options):
        fn = opt(fn)
    return fn


@click.group()
@click.option("--config", "config_path", default=None,
              help="TOML config file with [scenario.<name>] tables")
@click.option("--server", default=None,
              help="base URL of a running service (default: in-process)")
@click.option("--out", default=None, help="write output to a file")
@click.pass_context
def main(ctx, config_path, server, out):
    """Renormalized-volume and Q-curvature verification toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["config"] = _load_config(config_path)
    ctx.obj["server"] = server
    ctx.obj["out"] = out


@main.group()
def models():
    """Model-geometry catalogue."""


@models.command("list")
@click.pass_context
def models_list(ctx):
    """List the built-in model geometries."""
    with _client(ctx.obj["server"]) as client:
        resp = client.get("/models")
        resp.raise_for_status()
        _emit(json.dumps(resp.json(), indent=2), ctx.obj["out"])


def _run_scenario_endpoint(ctx, path, scenario, n, kappa, boundary_volume,
                           euler_char, extra=None):
    payload = _scenario_payload(ctx.obj["config"], scenario, n, kappa,
                                boundary_volume, euler_char)
    if extra:
        payload.update(extra)
    with _client(ctx.obj["server"]) as client:
        doc = _post(client, path, payload)
    _emit(json.dumps(doc, indent=2), ctx.obj["out"])


@main.command()
@_with_scenario_options
@click.pass_context
def volume(ctx, scenario, n, kappa, boundary_volume, euler_char):
    """Renormalized volume by series and by truncated-volume fit."""
    _run_scenario_endpoint(ctx, "/volume", scenario, n, kappa,
                           boundary_volume, euler_char)


@main.command()
@_with_scenario_options
@click.pass_context
def vsolve(ctx, scenario, n, kappa, boundary_volume, euler_char):
    """Solve -Delta v = n and report the renormalized coefficients."""
    _run_scenario_endpoint(ctx, "/vsolve", scenario, n, kappa,
                           boundary_volume, euler_char)


@main.command()
@_with_scenario_options
@click.pass_context
def gb(ctx, scenario, n, kappa, boundary_volume, euler_char):
    """Euler characteristic via the volume/curvature identities."""
    _run_scenario_endpoint(ctx, "/gb", scenario, n, kappa,
                           boundary_volume, euler_char)


@main.command()
@_with_scenario_options
@click.option("--s", "s_value", type=float, default=None,
              help="spectral parameter; omit for the volume pipeline")
@click.pass_context
def scatter(ctx, scenario, n, kappa, boundary_volume, euler_char, s_value):
    """Scattering value S(s)1, or the scattering volume pipeline."""
    _run_scenario_endpoint(ctx, "/scatter", scenario, n, kappa,
                           boundary_volume, euler_char,
                           extra={"s": s_value})


@main.command("verify-all")
@click.pass_context
def verify_all(ctx):
    """Run every check on all configured (or default) scenarios."""
    tables = ctx.obj["config"].get("scenario", {})
    payload: dict = {"scenarios": None}
    if tables:
        scenarios = []
        for name, table in tables.items():
            d = dict(table)
            d["name"] = name
            try:
                Scenario.from_dict(d)
            except ConfigError as exc:
                raise CliError(f"scenario.{name}: {exc}")
            scenarios.append(d)
        payload["scenarios"] = scenarios
    with _client(ctx.obj["server"]) as client:
        doc = _post(client, "/verify-all", payload)
    _emit(json.dumps(doc, indent=2), ctx.obj["out"])
    if not doc["all_passed"]:
        sys.exit(EXIT_CHECK_FAILED)


@main.command()
@click.argument("results_file")
@click.option("--format", "fmt", default="json",
              type=click.Choice(["json", "csv", "markdown"]),
              help="output format")
@click.pass_context
def report(ctx, results_file, fmt):
    """Render a saved verify-all JSON file as json, csv, or markdown."""
    try:
        with open(results_file) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise CliError(f"results file not found: "
                                   f"{results_file}")
    except json.JSONDecodeError as exc:
        raise CliError(f"invalid results file: {exc}")
    if isinstance(doc, dict) and "scenarios" in doc:
        results = [r for scn in doc["scenarios"] for r in scn["results"]]
    elif isinstance(doc, list):
        results = doc
    else:
        raise CliError(
            "results file must be a verify-all document or a JSON array "
            "of check results")
    if not results:
        raise CliError("results file contains no checks")
    with _client(ctx.obj["server"]) as client:
        out_doc = _post(client, "/report",
                        {"results": results, "format": fmt})
    _emit(out_doc["content"].rstrip("\n"), ctx.obj["out"])


if __name__ == "__main__":
    main()
