"""Command-line entry point.

Exit codes: 0 ok, 1 runtime failure, 2 invalid configuration, 3 output
exists (pass ``--force``), 4 missing or corrupt run data.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import shutil
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .active_learning import ConfigError, LearningConfig, config_hash, load_snapshot, run_loop
from .environments import Environment, GridWorld, WateringWorld, WaterAction, WaterState
from .environments.gridworld import ACTIONS
from .evaluation import EvalConfig, SuiteConfig, evaluate_run, rows_to_csv, run_experiment
from .gp_core import GpError
from .mde import MdeDataset, Transition

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_EXISTS, EXIT_CORRUPT = 0, 1, 2, 3, 4

logger = logging.getLogger("active_mde")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_json(path: str | Path, what: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise CliError(EXIT_CONFIG, f"{what}: file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_CONFIG, f"{what}: invalid JSON in {path}: {exc}") from exc


def _prepare_out(path: Path, force: bool) -> None:
    """Create an empty output directory; refuse to touch an existing one without force."""
    if path.exists() and (path.is_file() or any(path.iterdir())):
        if not force:
            raise CliError(EXIT_EXISTS, f"{path} already exists; pass --force to overwrite")
        if path.is_dir():
            shutil.rmtree(path)
        else:
            path.unlink()
    path.mkdir(parents=True, exist_ok=True)


def _check_output_file(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise CliError(EXIT_EXISTS, f"{path} already exists; pass --force to overwrite")


def _parse_iterations(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        its = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, f"iterations: expected comma-separated integers, got {text!r}") from exc
    if not its or min(its) < 0:
        raise CliError(EXIT_CONFIG, "iterations: expected non-negative integers")
    return its


def _load_run(run_dir: Path) -> tuple[LearningConfig, dict[str, Any]]:
    """Validate manifest and config of a run directory."""
    manifest_path = run_dir / "manifest.json"
    config_path = run_dir / "config.json"
    for p in (manifest_path, config_path):
        if not p.is_file():
            raise CliError(EXIT_CORRUPT, f"missing {p}")
    try:
        manifest = json.loads(manifest_path.read_text())
        raw = json.loads(config_path.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_CORRUPT, f"corrupt run metadata in {run_dir}: {exc}") from exc
    if not isinstance(manifest, dict) or "config_hash" not in manifest or "iterations" not in manifest:
        raise CliError(EXIT_CORRUPT, f"corrupt {manifest_path}")
    try:
        cfg = LearningConfig.from_dict(raw)
    except ConfigError as exc:
        raise CliError(EXIT_CORRUPT, f"{config_path}: {exc}") from exc
    if config_hash(cfg.to_dict()) != manifest["config_hash"]:
        raise CliError(EXIT_CORRUPT, f"{manifest_path}: config hash does not match {config_path}")
    return cfg, manifest


def _check_snapshots(run_dir: Path, env: Environment, iterations: Sequence[int]) -> None:
    for it in iterations:
        path = run_dir / "snapshots" / f"mde_{it:03d}.json"
        if not path.is_file():
            raise CliError(EXIT_CORRUPT, f"missing snapshot {path}")
        try:
            load_snapshot(env, path)
        except (ValueError, KeyError, TypeError, GpError) as exc:
            raise CliError(EXIT_CORRUPT, f"corrupt snapshot {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    raw = _read_json(args.config, "config")
    if args.seed is not None:
        if not isinstance(raw, dict):
            raise CliError(EXIT_CONFIG, "config: must be a JSON object")
        raw = dict(raw, seed=args.seed)
    cfg = LearningConfig.from_dict(raw)
    cfg.make_environment()
    out = Path(args.out)
    _prepare_out(out, args.force)
    result = run_loop(cfg, out)
    print(f"wrote {len(result.records)} iterations to {out}")
    return EXIT_OK


def _eval_config(path: str | None) -> EvalConfig:
    if path is None:
        return EvalConfig()
    raw = _read_json(path, "eval config")
    if not isinstance(raw, dict):
        raise CliError(EXIT_CONFIG, "eval config: must be a JSON object")
    suite = SuiteConfig.from_dict({"environments": {}, "strategies": [], "seeds": [], "eval": raw})
    return suite.eval


def cmd_eval(args) -> int:
    run_dir = Path(args.run_dir)
    cfg, manifest = _load_run(run_dir)
    env = cfg.make_environment()
    eval_cfg = _eval_config(args.config)
    n_iter = int(manifest["iterations"])
    its = _parse_iterations(args.iterations) or list(range(1, n_iter + 1))
    bad = [i for i in its if i > n_iter]
    if bad:
        raise CliError(EXIT_CONFIG, f"iterations: {bad} beyond the {n_iter} recorded in {run_dir}")
    _check_snapshots(run_dir, env, its)
    pool: list[Transition] = []
    for other in args.cv_run or []:
        ocfg, _ = _load_run(Path(other))
        if ocfg.seed == cfg.seed:
            raise CliError(EXIT_CONFIG, f"cv-run: {other} shares seed {cfg.seed} with the evaluated run")
        try:
            pool.extend(MdeDataset.load(env, Path(other) / "dataset.jsonl").transitions)
        except (OSError, ValueError, KeyError) as exc:
            raise CliError(EXIT_CORRUPT, f"cv-run: cannot read {other}/dataset.jsonl: {exc}") from exc
    out = Path(args.out) if args.out else run_dir / "metrics.csv"
    _check_output_file(out, args.force)
    rows = evaluate_run(run_dir, eval_cfg, its, pool or None)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(rows_to_csv(rows))
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_suite(args) -> int:
    raw = _read_json(args.config, "suite")
    if args.seed is not None and isinstance(raw, dict):
        raw = dict(raw, seeds=[args.seed])
    suite = SuiteConfig.from_dict(raw)
    for name, env_cfg in suite.environments.items():
        try:
            LearningConfig.from_dict(dict(suite.learning, environment=env_cfg)).make_environment()
        except ConfigError as exc:
            raise ConfigError(f"environments.{name}", str(exc)) from exc
    its = _parse_iterations(args.iterations)
    if its is not None:
        suite = replace(suite, iterations=tuple(its))
    out = Path(args.out)
    _prepare_out(out, args.force)
    rows, agg = run_experiment(suite, out, jobs=args.jobs)
    print(f"wrote {len(rows)} rows and {len(agg)} aggregate rows to {out}")
    return EXIT_OK


def _grid_slice(env: GridWorld, mde, action: str):
    if action not in ACTIONS:
        raise CliError(EXIT_CONFIG, f"action: must be one of {ACTIONS} for a gridworld slice")
    coords, feats = [], []
    for y in range(env.height):
        for x in range(env.width):
            coords.append((x, y))
            feats.append(env.featurize((x, y), action))
    return ("x", "y"), coords, np.array(feats)


def _water_slice(env: WateringWorld, mde, mode: str, theta: float, resolution: int):
    """Destination (y, z) grid at fixed angle ``theta``.

    ``rotation`` rotates in place from ``theta - rotation_step``; ``translation``
    moves down by one translation step from ``z + translation_step``.
    """
    if mode not in ("rotation", "translation"):
        raise CliError(EXIT_CONFIG, "action: must be 'rotation' or 'translation' for a watering slice")
    if resolution < 2:
        raise CliError(EXIT_CONFIG, "resolution: must be >= 2")
    grid = np.linspace(0.0, 1.0, resolution)
    coords, feats = [], []
    for z in grid:
        for y in grid:
            if mode == "rotation":
                s = WaterState(float(y), float(z), theta - env.rotation_step, env.initial_source_volume)
            else:
                s = WaterState(float(y), float(z) + env.translation_step, theta, env.initial_source_volume)
            a = WaterAction(float(y), float(z), theta)
            coords.append((float(y), float(z)))
            feats.append(env.featurize(s, a))
    return ("y_d", "z_d"), coords, np.array(feats)


GRID_DIMS = {("x", "y")}
WATER_DIMS = {("y", "z"), ("y_d", "z_d")}


def cmd_export_precond_grid(args) -> int:
    run_dir = Path(args.run_dir)
    cfg, manifest = _load_run(run_dir)
    env = cfg.make_environment()
    if args.iteration < 0 or args.iteration > int(manifest["iterations"]):
        raise CliError(EXIT_CONFIG, f"iteration: {args.iteration} not in [0, {manifest['iterations']}]")
    dims = tuple(d.strip() for d in args.dims.split(",")) if args.dims else None
    if dims is not None and len(dims) != 2:
        raise CliError(EXIT_CONFIG, f"dims: a slice needs exactly two dimensions, got {args.dims!r}")
    _check_snapshots(run_dir, env, [args.iteration])
    mde = load_snapshot(env, run_dir / "snapshots" / f"mde_{args.iteration:03d}.json")
    if isinstance(env, GridWorld):
        if dims is not None and dims not in GRID_DIMS:
            raise CliError(EXIT_CONFIG, f"dims: gridworld slices are over x,y, got {args.dims!r}")
        names, coords, feats = _grid_slice(env, mde, args.action or "right")
    elif isinstance(env, WateringWorld):
        if dims is not None and dims not in WATER_DIMS:
            raise CliError(EXIT_CONFIG, f"dims: watering slices are over y_d,z_d, got {args.dims!r}")
        theta = env.pour_threshold - env.rotation_step if args.theta is None else args.theta
        names, coords, feats = _water_slice(env, mde, args.action or "rotation", theta, args.resolution)
    else:
        raise CliError(EXIT_CONFIG, f"environment: no slice defined for {env.env_id!r}")
    mu, sigma = mde.predict_features(feats)
    ucb = mu + args.beta * sigma
    out = Path(args.out) if args.out else run_dir / f"precond_{args.iteration:03d}.csv"
    _check_output_file(out, args.force)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*names, "mu", "sigma", "ucb", "in_precondition"])
    for c, m, s, u in zip(coords, mu, sigma, ucb):
        w.writerow([*(repr(v) if isinstance(v, float) else v for v in c), repr(float(m)), repr(float(s)), repr(float(u)), int(u < args.d_max)])
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(buf.getvalue())
    print(f"wrote {len(coords)} rows to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="active-mde", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run one active learning loop")
    t.add_argument("--config", required=True, help="learning config JSON")
    t.add_argument("--out", required=True, help="run directory to create")
    t.add_argument("--seed", type=int, help="override the config seed")
    t.add_argument("--force", action="store_true")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate the snapshots of a run directory")
    e.add_argument("run_dir")
    e.add_argument("--config", help="eval config JSON (EvalConfig fields)")
    e.add_argument("--out", help="metrics CSV (default RUN_DIR/metrics.csv)")
    e.add_argument("--iterations", help="comma-separated snapshot indices, e.g. 5,10,20")
    e.add_argument("--cv-run", action="append", help="run directory of another seed for TPR/TNR; repeatable")
    e.add_argument("--force", action="store_true")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("suite", help="train and evaluate a full factorial suite")
    s.add_argument("--config", required=True, help="suite JSON")
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--iterations", help="comma-separated snapshot indices to evaluate")
    s.add_argument("--seed", type=int, help="run the suite for this single seed")
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_suite)

    x = sub.add_parser("export-precond-grid", help="MDE and precondition over a 2-D slice")
    x.add_argument("run_dir")
    x.add_argument("--iteration", type=int, required=True, help="snapshot index; 0 is the prior")
    x.add_argument("--dims", help="slice dimensions: x,y (gridworld) or y_d,z_d (watering)")
    x.add_argument("--action", help="gridworld action, or watering mode rotation|translation")
    x.add_argument("--theta", type=float, help="watering: fixed destination angle in degrees")
    x.add_argument("--resolution", type=int, default=21, help="watering: points per axis")
    x.add_argument("--beta", type=float, default=2.0)
    x.add_argument("--d-max", type=float, default=0.1)
    x.add_argument("--out", help="CSV path (default RUN_DIR/precond_XXX.csv)")
    x.add_argument("--force", action="store_true")
    x.set_defaults(func=cmd_export_precond_grid)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    if getattr(args, "jobs", 1) is not None and getattr(args, "jobs", 1) < 1:
        print("error: jobs: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GpError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
