"""Command-line front end.

Each stage subcommand reads/writes the documented artifacts under the
output directory so stages can run independently and be cached. `run`
executes the whole pipeline with warm-start chaining across budgets;
`run --server URL` submits the run to a gridharden service instead of
executing locally. Set GRIDHARDEN_BACKEND to a backend JSON file to
override the solver backend.
"""

from __future__ import annotations

import json
import os
import time
from pathlib import Path

import click

from . import __version__
from .backends import BackendConfig
from .network import has_errors, load_network, validate_network
from .pipeline import BACKEND_ENV_VAR, ConfigError, Pipeline, RunConfig


def _load_config(config_path: str) -> RunConfig:
    try:
        return RunConfig.load(config_path)
    except FileNotFoundError as exc:
        raise click.ClickException(f"config file not found: {exc.filename}")
    except (ConfigError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise click.ClickException(f"{config_path}: {exc}")


def _backend_override() -> BackendConfig | None:
    path = os.environ.get(BACKEND_ENV_VAR)
    if not path:
        return None
    try:
        return BackendConfig.load(path)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise click.ClickException(f"bad backend config {path}: {exc}")


def _pipeline(config: str, out_dir: str, jobs: int = 1, oracle: bool = False,
              emit_only: bool = False) -> Pipeline:
    return Pipeline(_load_config(config), out_dir, jobs=jobs, force_oracle=oracle,
                    emit_only=emit_only, backend_override=_backend_override())


@click.group()
@click.version_option(__version__)
def main():
    """Wildfire shutoff / undergrounding scenario planner."""


config_opt = click.option("--config", "-c", required=True,
                          type=click.Path(exists=True, dir_okay=False),
                          help="run configuration (JSON or TOML)")
out_opt = click.option("--out-dir", "-o", default="out", show_default=True,
                       help="artifact directory")


@main.command()
@click.option("--network", "network_path", type=click.Path(exists=True, dir_okay=False),
              help="network JSON (alternative to --config)")
@click.option("--config", "-c", type=click.Path(exists=True, dir_okay=False))
def validate(network_path, config):
    """Check structural invariants of the network input."""
    if not network_path and not config:
        raise click.ClickException("provide --network or --config")
    if not network_path:
        network_path = str(_load_config(config).network)
    try:
        net = load_network(network_path)
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"{network_path}: invalid JSON at line {exc.lineno}, "
                                   f"column {exc.colno}: {exc.msg}")
    except KeyError as exc:
        raise click.ClickException(f"{network_path}: missing required field {exc}")
    except (TypeError, ValueError) as exc:
        raise click.ClickException(f"{network_path}: {exc}")
    violations = validate_network(net)
    for v in violations:
        click.echo(str(v))
    if has_errors(violations):
        raise click.exceptions.Exit(1)
    click.echo(f"ok: {len(net.buses)} buses, {len(net.lines)} lines, "
               f"{len(net.generators)} generators"
               + (f" ({len(violations)} warning(s))" if violations else ""))


@main.command()
@config_opt
@out_opt
def risk(config, out_dir):
    """Derive the per-line per-day risk profile from the raster."""
    pipe = _pipeline(config, out_dir)
    profile = pipe.stage_risk()
    trigger = sorted(d for d in profile.days
                     if profile.day_total[d] >= profile.thresholds.r_psps)
    click.echo(f"risk profile written to {pipe.out / 'risk_profile.json'}")
    click.echo(f"harden candidates: {len(profile.harden)}; trigger days: {trigger}")


@main.command()
@config_opt
@out_opt
def assign(config, out_dir):
    """Assign census tracts to load buses and derive bus demographics."""
    pipe = _pipeline(config, out_dir)
    demo = pipe.stage_assign()
    click.echo(f"demographics for {len(demo.population)} buses "
               f"({len(demo.groups)} groups) written under {pipe.out}")


@main.command()
@config_opt
@out_opt
@click.option("--emit-only", is_flag=True,
              help="write only the MPS files, no tag sidecars or stamps")
def build(config, out_dir, emit_only):
    """Build scenario models and write them as MPS files."""
    pipe = _pipeline(config, out_dir)
    risk_profile = pipe.stage_risk()
    demo = pipe.stage_assign()
    baseline = None
    if pipe._needs_reference():
        ref = pipe._solve_one(pipe._spec("BL-M0", 0.0), risk_profile, demo, None, None)
        if ref.solution is None or not ref.solution.feasible:
            raise click.ClickException(
                f"no-budget reference solve failed ({ref.status}); cannot build "
                f"load-shed-reduction models")
        from .builder import baseline_reference
        baseline = baseline_reference(pipe.net, demo, ref.solution.values,
                                      pipe.config.required_indices())
    written = pipe.stage_build(risk_profile, demo, baseline, tags=not emit_only)
    for path in written:
        click.echo(str(path))


@main.command()
@config_opt
@out_opt
@click.option("--jobs", "-j", default=1, show_default=True)
@click.option("--oracle", is_flag=True,
              help="solve with the exhaustive verifier when within its cap")
def solve(config, out_dir, jobs, oracle):
    """Solve every (model, budget) scenario and store the solutions."""
    pipe = _pipeline(config, out_dir, jobs=jobs, oracle=oracle)
    risk_profile = pipe.stage_risk()
    demo = pipe.stage_assign()
    outcomes = pipe.stage_solve(risk_profile, demo)
    pipe.write_solutions(outcomes)
    errors = 0
    for o in outcomes:
        obj = "" if o.objective is None else f" obj={o.objective:.6g}"
        click.echo(f"{o.model_id} B={o.budget:g}: {o.status}{obj}")
        errors += o.status == "error"
    if errors:
        raise click.exceptions.Exit(1)


@main.command()
@config_opt
@out_opt
@click.option("--curves", is_flag=True, help="also emit per-group budget curves")
def report(config, out_dir, curves):
    """Compute group metrics from stored solutions and write report files."""
    pipe = _pipeline(config, out_dir)
    if curves:
        pipe.config.curves = True
    risk_profile = pipe.stage_risk()
    demo = pipe.stage_assign()
    outcomes = pipe.load_outcomes()
    paths = pipe.stage_report(risk_profile, demo, outcomes)
    for key in ("csv", "json"):
        click.echo(str(paths[key]))


@main.command()
@config_opt
@out_opt
@click.option("--jobs", "-j", default=1, show_default=True)
@click.option("--emit-only", is_flag=True, help="stop after writing model files")
@click.option("--oracle", is_flag=True,
              help="solve with the exhaustive verifier when within its cap")
@click.option("--server", default=None, metavar="URL",
              help="submit the run to a gridharden service instead of running locally")
def run(config, out_dir, jobs, emit_only, oracle, server):
    """Run the full pipeline: validate, risk, assign, solve, report."""
    if server:
        _run_remote(server, config, out_dir, jobs, emit_only, oracle)
        return
    pipe = _pipeline(config, out_dir, jobs=jobs, oracle=oracle, emit_only=emit_only)
    manifest, code = pipe.run()
    for record in manifest.get("scenarios", []):
        obj = record.get("objective")
        obj_s = "" if obj is None else f" obj={obj:.6g}"
        click.echo(f"{record['model_id']} B={record['budget']:g}: "
                   f"{record['status']}{obj_s}")
    click.echo(f"status: {manifest['status']} (manifest: {pipe.out / 'manifest.json'})")
    if code:
        raise click.exceptions.Exit(code)


def _run_remote(server, config, out_dir, jobs, emit_only, oracle):
    import httpx

    payload = {"config_path": str(Path(config).resolve()),
               "out_dir": str(Path(out_dir).resolve()),
               "jobs": jobs, "emit_only": emit_only, "oracle": oracle}
    with httpx.Client(base_url=server, timeout=30.0) as client:
        resp = client.post("/runs", json=payload)
        if resp.status_code != 200:
            raise click.ClickException(f"service rejected run: {resp.text}")
        run_id = resp.json()["run_id"]
        click.echo(f"submitted run {run_id}")
        while True:
            time.sleep(0.5)
            info = client.get(f"/runs/{run_id}").json()
            if info["state"] in ("done", "failed"):
                click.echo(f"run {run_id}: {info['state']} "
                           f"(exit {info.get('exit_code')})")
                if info.get("error"):
                    click.echo(info["error"])
                if info["state"] == "failed" or info.get("exit_code"):
                    raise click.exceptions.Exit(info.get("exit_code") or 1)
                return


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8787, show_default=True)
def serve(host, port):
    """Start the HTTP service wrapping the pipeline."""
    import uvicorn

    from .service.app import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
