"""Test-time evaluation of MDE snapshots and full factorial experiment suites."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .active_learning import STRATEGIES, ConfigError, LearningConfig, execute_trajectory, load_snapshot, run_loop
from .environments import Environment, environment_from_config
from .mde import Mde, MdeDataset, PreconditionParams, Transition, in_precondition
from .planner import PlannerConfig, rrt_plan
from .rng import stream

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "environment",
    "strategy",
    "seed",
    "iteration",
    "tpr",
    "tnr",
    "plan_found_rate",
    "goal_success_rate_conditioned",
    "goal_success_rate_overall",
    "n_cv_points",
)
METRICS = CSV_COLUMNS[4:9]


@dataclass(frozen=True)
class EvalConfig:
    beta_test: float = 2.0
    d_max: float = 0.1
    n_test_problems: int = 20
    max_expansions: int = 5000
    seed: int = 2024
    seeds: tuple[int, ...] = ()

    def __post_init__(self):
        if self.n_test_problems < 1:
            raise ValueError("n_test_problems must be >= 1")
        if not self.d_max > 0:
            raise ValueError("d_max must be > 0")

    @property
    def params(self) -> PreconditionParams:
        return PreconditionParams(self.d_max, self.beta_test)


@dataclass
class MetricsRow:
    environment: str
    strategy: str
    seed: int
    iteration: int
    tpr: float = math.nan
    tnr: float = math.nan
    plan_found_rate: float = math.nan
    goal_success_rate_conditioned: float = math.nan
    goal_success_rate_overall: float = math.nan
    n_cv_points: int = 0

    @property
    def goal_success_rate(self) -> float:
        """Success among problems that got a plan; NaN when none did."""
        return self.goal_success_rate_conditioned

    def undefined(self) -> list[str]:
        return [m for m in METRICS if math.isnan(getattr(self, m))]


def classify_point(mde: Mde, transition: Transition, params: PreconditionParams) -> tuple[bool, bool]:
    predicted = in_precondition(mde, transition.state, transition.action, params)
    return predicted, transition.deviation < params.d_max


def confusion_counts(mde: Mde, cv: Sequence[Transition], params: PreconditionParams) -> dict[str, int]:
    env = mde.env
    x = np.stack([env.featurize(t.state, t.action) for t in cv])
    mu, sigma = mde.predict_features(x)
    pred = mu + params.beta * sigma < params.d_max
    actual = np.array([t.deviation < params.d_max for t in cv])
    return {
        "tp": int(np.sum(pred & actual)),
        "fn": int(np.sum(~pred & actual)),
        "tn": int(np.sum(~pred & ~actual)),
        "fp": int(np.sum(pred & ~actual)),
    }


def rates_from_counts(c: dict[str, int]) -> tuple[float, float]:
    pos, neg = c["tp"] + c["fn"], c["tn"] + c["fp"]
    tpr = c["tp"] / pos if pos else math.nan
    tnr = c["tn"] / neg if neg else math.nan
    return tpr, tnr


def confusion_rates(mde: Mde, cv_dataset: MdeDataset | Sequence[Transition], params: PreconditionParams):
    """(TPR, TNR) of the precondition as a classifier of ``deviation < d_max``.

    A rate whose denominator is empty comes back as NaN.
    """
    cv = cv_dataset.transitions if isinstance(cv_dataset, MdeDataset) else list(cv_dataset)
    if not cv:
        raise ValueError("cross-validation dataset is empty")
    return rates_from_counts(confusion_counts(mde, cv, params))


def eval_problems(env: Environment, config: EvalConfig):
    return [env.sample_problem(stream(config.seed, "eval", "problem", k)) for k in range(config.n_test_problems)]


def plan_and_execute(env: Environment, mde: Mde | None, config: EvalConfig, problems=None) -> list[dict[str, Any]]:
    """Plan each test problem under the test precondition and execute found plans."""
    problems = eval_problems(env, config) if problems is None else problems
    planner = PlannerConfig(max_expansions=config.max_expansions, training_timeout=None)
    params = config.params if mde is not None else None
    out = []
    for k, problem in enumerate(problems):
        plan = rrt_plan(env, mde, params, problem, planner, stream(config.seed, "eval", "planner", k))
        if plan is None:
            out.append({"found": False, "success": False})
            continue
        executed, _ = execute_trajectory(env, plan)
        final = executed.executed_states[-1]
        complete = len(executed.executed_states) == len(plan.states)
        out.append({"found": True, "success": bool(complete and problem.goal(final))})
    return out


def eval_snapshot(
    env: Environment,
    mde: Mde | None,
    config: EvalConfig = EvalConfig(),
    *,
    cv_dataset: Sequence[Transition] | None = None,
    problems=None,
    environment: str | None = None,
    strategy: str = "",
    seed: int = 0,
    iteration: int = 0,
) -> MetricsRow:
    """Plan-found and goal-success rates on fixed test problems plus cross-seed TPR/TNR."""
    outcomes = plan_and_execute(env, mde, config, problems)
    found = sum(o["found"] for o in outcomes)
    success = sum(o["success"] for o in outcomes)
    row = MetricsRow(environment or env.env_id, strategy, seed, iteration)
    row.plan_found_rate = found / len(outcomes)
    row.goal_success_rate_overall = success / len(outcomes)
    row.goal_success_rate_conditioned = success / found if found else math.nan
    if cv_dataset and mde is not None:
        row.tpr, row.tnr = confusion_rates(mde, cv_dataset, config.params)
        row.n_cv_points = len(cv_dataset)
    return row


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def rows_to_csv(rows: Sequence[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[MetricsRow]:
    out = []
    for d in csv.DictReader(io.StringIO(text)):
        out.append(
            MetricsRow(
                d["environment"],
                d["strategy"],
                int(d["seed"]),
                int(d["iteration"]),
                *(float(d[m]) for m in METRICS),
                int(d["n_cv_points"]),
            )
        )
    return out


AGG_COLUMNS = ("environment", "strategy", "iteration", "n_seeds") + tuple(
    f"{m}_{s}" for m in METRICS for s in ("mean", "stderr", "n")
)


def aggregate_rows(rows: Sequence[MetricsRow]) -> list[dict[str, Any]]:
    """Mean and standard error per (environment, strategy, iteration); NaNs are skipped and counted."""
    groups: dict[tuple, list[MetricsRow]] = {}
    for r in rows:
        groups.setdefault((r.environment, r.strategy, r.iteration), []).append(r)
    out = []
    for key in sorted(groups):
        g = groups[key]
        d: dict[str, Any] = {"environment": key[0], "strategy": key[1], "iteration": key[2], "n_seeds": len(g)}
        for m in METRICS:
            vals = np.array([getattr(r, m) for r in g], dtype=float)
            vals = vals[~np.isnan(vals)]
            d[f"{m}_n"] = int(vals.size)
            d[f"{m}_mean"] = float(vals.mean()) if vals.size else math.nan
            d[f"{m}_stderr"] = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else (0.0 if vals.size else math.nan)
        out.append(d)
    return out


def aggregate_to_csv(agg: Sequence[dict[str, Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGG_COLUMNS)
    for d in agg:
        w.writerow([_fmt(d[c]) for c in AGG_COLUMNS])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuiteConfig:
    name: str
    environments: dict[str, Any]
    strategies: tuple[str, ...]
    seeds: tuple[int, ...]
    learning: dict[str, Any] = field(default_factory=dict)
    eval: EvalConfig = EvalConfig()
    iterations: tuple[int, ...] | None = None
    stop_after: int | None = None

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SuiteConfig:
        if not isinstance(d, dict):
            raise ConfigError("suite", "must be a JSON object")
        for k in ("strategies", "seeds", "environments"):
            if k not in d:
                raise ConfigError(k, "missing")
        envs = d["environments"]
        if isinstance(envs, list):
            envs = {(e if isinstance(e, str) else e.get("env_id", f"env{i}")): e for i, e in enumerate(envs)}
        for s in d["strategies"]:
            if s not in STRATEGIES:
                raise ConfigError("strategies", f"unknown strategy {s!r}")
        ev = dict(d.get("eval", {}))
        unknown = set(ev) - {f.name for f in fields(EvalConfig)}
        if unknown:
            raise ConfigError(f"eval.{sorted(unknown)[0]}", "unknown field")
        if "seeds" in ev:
            ev["seeds"] = tuple(ev["seeds"])
        try:
            eval_cfg = EvalConfig(**ev)
        except ValueError as exc:
            raise ConfigError("eval", str(exc)) from exc
        learning = dict(d.get("learning", {}))
        for k in ("environment", "strategy", "seed"):
            if k in learning:
                raise ConfigError(f"learning.{k}", "set per cell by the suite")
        LearningConfig.from_dict(learning)  # validate early
        its = d.get("iterations")
        return cls(
            d.get("name", "suite"),
            envs,
            tuple(d["strategies"]),
            tuple(int(s) for s in d["seeds"]),
            learning,
            eval_cfg,
            None if its is None else tuple(int(i) for i in its),
            d.get("stop_after"),
        )

    def cell_config(self, env_name: str, strategy: str, seed: int) -> LearningConfig:
        return LearningConfig.from_dict(dict(self.learning, environment=self.environments[env_name], strategy=strategy, seed=seed))


def cell_dir(root: Path, env_name: str, strategy: str, seed: int) -> Path:
    return root / "runs" / env_name / strategy / f"seed_{seed}"


def _train_cell(args) -> tuple[tuple, str | None]:
    suite, root, env_name, strategy, seed = args
    key = (env_name, strategy, seed)
    try:
        run_loop(suite.cell_config(env_name, strategy, seed), cell_dir(root, env_name, strategy, seed), stop_after=suite.stop_after)
    except Exception as exc:  # recorded and excluded by the caller
        return key, f"{type(exc).__name__}: {exc}"
    return key, None


def evaluate_run(
    run_dir: Path,
    eval_config: EvalConfig,
    iterations: Sequence[int] | None = None,
    cv_pool: Sequence[Transition] | None = None,
    env_name: str | None = None,
) -> list[MetricsRow]:
    """Evaluate the snapshots of one run directory."""
    cfg = LearningConfig.from_dict(json.loads((run_dir / "config.json").read_text()))
    env = cfg.make_environment()
    manifest = json.loads((run_dir / "manifest.json").read_text())
    n_iter = int(manifest["iterations"])
    its = list(range(1, n_iter + 1)) if iterations is None else list(iterations)
    problems = eval_problems(env, eval_config)
    rows = []
    for it in its:
        path = run_dir / "snapshots" / f"mde_{it:03d}.json"
        mde = load_snapshot(env, path)
        rows.append(
            eval_snapshot(
                env, mde, eval_config,
                cv_dataset=cv_pool, problems=problems,
                environment=env_name or env.env_id, strategy=cfg.strategy, seed=cfg.seed, iteration=it,
            )
        )
    return rows


def _eval_cell(args) -> list[MetricsRow]:
    suite, root, env_name, strategy, seed, pool_seeds = args
    env = environment_from_config(suite.environments[env_name])
    pool: list[Transition] = []
    for s in pool_seeds:
        if s == seed:
            raise AssertionError("cross-validation pool includes the evaluated seed")
        pool.extend(MdeDataset.load(env, cell_dir(root, env_name, strategy, s) / "dataset.jsonl").transitions)
    return evaluate_run(cell_dir(root, env_name, strategy, seed), suite.eval, suite.iterations, pool, env_name)


def run_experiment(suite: SuiteConfig, out_dir: str | Path, jobs: int = 1) -> tuple[list[MetricsRow], list[dict[str, Any]]]:
    """Train every (environment, strategy, seed) cell, evaluate, and write CSVs.

    Cells that fail are logged with a warning and left out of both CSVs.
    """
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    cells = [(e, s, seed) for e in suite.environments for s in suite.strategies for seed in suite.seeds]
    train_args = [(suite, root, *c) for c in cells]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_train_cell, train_args))
    else:
        results = [_train_cell(a) for a in train_args]
    failed = {key: err for key, err in results if err is not None}
    for key, err in failed.items():
        warnings.warn(f"cell {key} failed and is excluded: {err}", RuntimeWarning, stacklevel=2)
        logger.warning("cell %s failed: %s", key, err)
    ok = [c for c in cells if c not in failed]

    eval_args = []
    for e, s, seed in ok:
        pool_seeds = [o for (oe, os_, o) in ok if oe == e and os_ == s and o != seed]
        eval_args.append((suite, root, e, s, seed, pool_seeds))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            per_cell = list(ex.map(_eval_cell, eval_args))
    else:
        per_cell = [_eval_cell(a) for a in eval_args]
    rows = [r for cell_rows in per_cell for r in cell_rows]
    rows.sort(key=lambda r: (r.environment, r.strategy, r.seed, r.iteration))
    agg = aggregate_rows(rows)
    (root / f"{suite.name}.csv").write_text(rows_to_csv(rows))
    (root / f"{suite.name}_aggregate.csv").write_text(aggregate_to_csv(agg))
    if failed:
        (root / "failures.json").write_text(json.dumps({"/".join(map(str, k)): v for k, v in sorted(failed.items())}, indent=1))
    return rows, agg


__all__ = [
    "CSV_COLUMNS",
    "EvalConfig",
    "MetricsRow",
    "SuiteConfig",
    "aggregate_rows",
    "classify_point",
    "confusion_rates",
    "eval_snapshot",
    "evaluate_run",
    "plan_and_execute",
    "rows_from_csv",
    "rows_to_csv",
    "run_experiment",
    "eval_problems",
]
