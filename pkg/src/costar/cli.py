"""Command line interface.

Exit codes: 0 when every trial succeeded, 1 when any trial failed,
2 for validation or syntax errors.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click

from .btree import validate as validate_tree
from .calibration import CalibrationError, calibrate_world, pose_error
from .components import build_workcell
from .plan_dsl import PlanSyntaxError, parse
from .runner import ValidationFailedError, override_noise, run_batch, run_plan
from .world import load_scene


def _load_plan(path: str):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise click.ClickException(str(e))
    try:
        return parse(text, name=Path(path).stem)
    except PlanSyntaxError as e:
        click.echo(f"syntax error in {path}: {e}", err=True)
        sys.exit(2)


def _load_scene_ref(ref: str):
    path = Path(ref)
    if not path.exists():
        for suffix in (".yaml", ".yml", ".json"):
            candidate = Path("scenes") / f"{ref}{suffix}"
            if candidate.exists():
                path = candidate
                break
    if not path.exists():
        raise click.ClickException(f"scene not found: {ref}")
    return load_scene(path)


def _apply_calibration(scene, calibration_path):
    if calibration_path is None:
        return scene
    import dataclasses

    from .calibration import load_calibration
    return dataclasses.replace(scene, camera=load_calibration(calibration_path).x)


def _finish(report):
    click.echo(json.dumps(report.to_json(), indent=2, sort_keys=True))
    sys.exit(0 if report.all_succeeded else 1)


@click.group()
def main():
    """Task orchestration for a simulated robot workcell."""


@main.command()
@click.argument("plan", type=click.Path(exists=True))
@click.option("--scene", required=True, help="Scene file or name under ./scenes.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--noise-pos", default=None, type=float, help="Override position noise sigma (m).")
@click.option("--noise-rot", default=None, type=float, help="Override rotation noise sigma (rad).")
@click.option("--dropout", default=None, type=float, help="Override detection dropout probability.")
@click.option("--calibration", default=None, type=click.Path(exists=True),
              help="Calibration JSON whose camera pose replaces the scene's.")
@click.option("--tick-budget", default=10000, show_default=True, type=int)
def run(plan, scene, seed, noise_pos, noise_rot, dropout, calibration, tick_budget):
    """Run a plan once against a scene."""
    doc = _load_plan(plan)
    scn = _apply_calibration(_load_scene_ref(scene), calibration)
    noise = override_noise(scn, noise_pos, noise_rot, dropout)
    try:
        report = run_plan(doc, scn, seed=seed, noise=noise, tick_budget=tick_budget)
    except ValidationFailedError as e:
        click.echo(f"validation failed: {e}", err=True)
        sys.exit(2)
    _finish(report)


@main.command()
@click.argument("plan", type=click.Path(exists=True))
@click.option("--scene", required=True)
@click.option("--trials", default=10, show_default=True, type=int)
@click.option("--seed-base", default=100, show_default=True, type=int)
@click.option("--noise-pos", default=None, type=float)
@click.option("--noise-rot", default=None, type=float)
@click.option("--dropout", default=None, type=float)
@click.option("--calibration", default=None, type=click.Path(exists=True),
              help="Calibration JSON whose camera pose replaces the scene's.")
@click.option("--tick-budget", default=10000, show_default=True, type=int)
def batch(plan, scene, trials, seed_base, noise_pos, noise_rot, dropout, calibration,
          tick_budget):
    """Run repeated independent trials and report the success rate."""
    doc = _load_plan(plan)
    scn = _apply_calibration(_load_scene_ref(scene), calibration)
    noise = override_noise(scn, noise_pos, noise_rot, dropout)
    try:
        report = run_batch(doc, scn, trials, seed_base=seed_base, noise=noise,
                           tick_budget=tick_budget)
    except ValidationFailedError as e:
        click.echo(f"validation failed: {e}", err=True)
        sys.exit(2)
    _finish(report)


@main.command(name="validate")
@click.argument("plan", type=click.Path(exists=True))
@click.option("--scene", default=None,
              help="Scene to resolve component bindings against (optional).")
def validate_cmd(plan, scene):
    """Parse a plan and report structural diagnostics."""
    doc = _load_plan(plan)
    known = None
    if scene is not None:
        cell = build_workcell(_load_scene_ref(scene))
        known = cell.registry.known_operations()
    diagnostics = validate_tree(doc.to_engine_tree(), known)
    for d in diagnostics:
        click.echo(str(d))
    if diagnostics:
        sys.exit(2)
    click.echo("ok")


@main.command()
@click.option("--scene", default=None,
              help="Scene file or name; the default workcell when omitted.")
@click.option("--stations", default=11, show_default=True, type=int)
@click.option("--noise-rot", default=0.0, show_default=True, type=float,
              help="Marker rotation noise sigma in degrees.")
@click.option("--noise-pos", default=0.0, show_default=True, type=float,
              help="Marker position noise sigma in meters.")
@click.option("--seed", default=7, show_default=True, type=int)
@click.option("--out", default=None, type=click.Path(),
              help="Write the calibration JSON here.")
def calibrate(scene, stations, noise_rot, noise_pos, seed, out):
    """Collect simulated stations and solve the hand-eye problem."""
    from .world import Scene
    scn = _load_scene_ref(scene) if scene else Scene()
    cell = build_workcell(scn)
    try:
        result = calibrate_world(cell.world, stations=stations,
                                 rot_noise=math.radians(noise_rot),
                                 pos_noise=noise_pos, seed=seed)
    except CalibrationError as e:
        click.echo(f"calibration failed: {e}", err=True)
        sys.exit(2)
    pos_err, rot_err = pose_error(result.x, scn.camera)
    payload = result.to_json()
    payload["groundTruthError"] = {"position": pos_err, "rotation": rot_err}
    click.echo(json.dumps(payload, indent=2, sort_keys=True))
    if out:
        result.save(out)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True, type=int)
@click.option("--data", default="data", show_default=True, type=click.Path())
@click.option("--scenes", "scene_dir", default="scenes", show_default=True, type=click.Path())
@click.option("--default-scene", default=None)
def serve(host, port, data, scene_dir, default_scene):
    """Serve the HTTP API and event stream."""
    import uvicorn

    from .server import create_app

    app = create_app(data_dir=data, scene_dir=scene_dir, default_scene=default_scene)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
