"""Outer loop: sample problems, pick trajectories, execute, retrain the MDE.

Run directory layout written by :func:`run_loop`::

    config.json              the exact learning config
    manifest.json            config hash, seed, environment, file inventory
    records/iter_XXX.json    one IterationRecord per iteration (0-based)
    snapshots/mde_XXX.json   MDE after XXX iterations (000 is the prior)
    dataset.jsonl            final transition dataset
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any


from . import __version__
from .acquisition import AcquisitionConfig, ScheduleConfig, beta_schedule, select_trajectory
from .environments import Environment, WateringWorld, classify_trajectory, environment_from_config
from .gp_core import GpConfig
from .mde import Mde, MdeDataset, PreconditionParams, Transition, label_transition, prior_mde, train_mde
from .planner import PlannerConfig, Trajectory, generate_candidates, random_rollout, rrt_plan
from .rng import stream

logger = logging.getLogger(__name__)

STRATEGIES = ("active_goal_conditioned", "goal_conditioned", "random")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _sub_config(cls, data: dict[str, Any] | None, name: str, **extra):
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    for k in data:
        if k not in known:
            raise ConfigError(f"{name}.{k}", "unknown field")
    for k, v in extra.items():
        data.setdefault(k, v)
    for k, v in list(data.items()):
        if isinstance(v, list):
            data[k] = tuple(v)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, str(exc)) from exc


@dataclass(frozen=True)
class LearningConfig:
    environment: Any = "gridworld"
    J: int = 20
    M: int = 5
    strategy: str = "active_goal_conditioned"
    acquisition: AcquisitionConfig = AcquisitionConfig()
    schedule: ScheduleConfig = ScheduleConfig()
    planner: PlannerConfig = PlannerConfig()
    gp: GpConfig = GpConfig()
    n_candidates: int = 10
    seed: int = 0
    d_max: float = 0.1
    cap: int = 300
    use_bins: bool = True
    random_length_samples: int = 20

    def __post_init__(self):
        if not isinstance(self.J, int) or self.J < 0:
            raise ConfigError("J", "must be an integer >= 0")
        if not isinstance(self.M, int) or self.M < 1:
            raise ConfigError("M", "must be an integer >= 1")
        if self.strategy not in STRATEGIES:
            raise ConfigError("strategy", f"must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.n_candidates < 1:
            raise ConfigError("n_candidates", "must be >= 1")
        if not self.d_max > 0:
            raise ConfigError("d_max", "must be > 0")
        if self.cap < 1:
            raise ConfigError("cap", "must be >= 1")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> LearningConfig:
        if not isinstance(d, dict):
            raise ConfigError("config", "must be a JSON object")
        d = dict(d)
        d.pop("version", None)
        known = {f.name for f in fields(cls)}
        for k in d:
            if k not in known:
                raise ConfigError(k, "unknown field")
        J = d.get("J", 20)
        if not isinstance(J, int):
            raise ConfigError("J", "must be an integer")
        sub = {
            "acquisition": _sub_config(AcquisitionConfig, d.get("acquisition"), "acquisition"),
            "schedule": _sub_config(ScheduleConfig, d.get("schedule"), "schedule", J=max(J, 1)),
            "planner": _sub_config(PlannerConfig, d.get("planner"), "planner"),
            "gp": _sub_config(GpConfig, d.get("gp"), "gp"),
        }
        d.update(sub)
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError("config", str(exc)) from exc

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["version"] = 1
        return json.loads(json.dumps(out))

    def make_environment(self) -> Environment:
        try:
            return environment_from_config(self.environment)
        except (OSError, KeyError, ValueError, TypeError) as exc:
            raise ConfigError("environment", str(exc)) from exc


def config_hash(cfg: dict[str, Any]) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


@dataclass
class IterationRecord:
    iteration: int
    beta_used: float
    problems: list[dict[str, Any]]
    trajectories: list[dict[str, Any]]
    n_new_transitions: int
    failures: list[int]
    mde_snapshot: str
    trajectory_types: dict[str, int] = field(default_factory=dict)
    dataset_size: int = 0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> IterationRecord:
        return cls(**d)


@dataclass
class LearnerState:
    env: Environment
    config: LearningConfig
    dataset: MdeDataset
    mde: Mde
    random_lengths: list[int] | None = None


@dataclass
class LoopResult:
    records: list[IterationRecord]
    snapshots: list[Mde]
    dataset: MdeDataset


def execute_trajectory(env: Environment, trajectory: Trajectory) -> tuple[Trajectory, list[Transition]]:
    """Open-loop execution of ``trajectory.actions`` in the true environment.

    Stops at the first action that is inadmissible from the observed state.
    """
    s = trajectory.states[0]
    observed = [s]
    transitions = []
    truncated = False
    for a in trajectory.actions:
        if not env.is_valid_action(s, a):
            truncated = True
            break
        s_next = env.true_step(s, a)
        transitions.append(label_transition(env, s, a, s_next))
        observed.append(s_next)
        s = s_next
    executed = Trajectory(
        list(trajectory.states),
        list(trajectory.actions),
        observed,
        trajectory.planned_mu,
        trajectory.planned_sigma,
        trajectory.index,
        dict(trajectory.meta, truncated=truncated),
    )
    return executed, transitions


def _random_lengths(env: Environment, config: LearningConfig) -> list[int]:
    lengths = []
    for k in range(config.random_length_samples):
        problem = env.sample_problem(stream(config.seed, "random_lengths", "problem", k))
        plan = rrt_plan(env, None, None, problem, config.planner, stream(config.seed, "random_lengths", "planner", k))
        if plan is not None and plan.n_actions:
            lengths.append(plan.n_actions)
    return lengths or [10]


def _choose(state: LearnerState, problem, j: int, m: int, params: PreconditionParams):
    """Trajectory for one problem under the configured strategy, or None."""
    env, cfg = state.env, state.config
    strat = cfg.strategy
    if strat == "random":
        rng = stream(cfg.seed, strat, "rollout", j, m)
        length = int(rng.choice(state.random_lengths))
        traj = random_rollout(env, state.mde, params, problem.start, length, rng)
        return traj if traj.n_actions else None
    cands = generate_candidates(
        env,
        state.mde,
        params,
        problem,
        cfg.n_candidates,
        cfg.planner,
        stream(cfg.seed, strat, "candidates", j, m),
        use_bins=cfg.use_bins,
        timeout=cfg.planner.training_timeout,
    )
    cands = [c for c in cands if c.n_actions]
    if not cands:
        return None
    if strat == "active_goal_conditioned":
        traj = select_trajectory(state.mde, cands, cfg.acquisition)
    else:
        pick = stream(cfg.seed, strat, "select", j, m).integers(len(cands))
        traj = cands[int(pick)]
    traj.meta["n_candidates"] = len(cands)
    return traj


def run_iteration(state: LearnerState, j: int) -> IterationRecord:
    """One batch of M problems followed by a full MDE refit. Mutates ``state``."""
    env, cfg = state.env, state.config
    beta = beta_schedule(j, cfg.schedule)
    params = PreconditionParams(cfg.d_max, beta)
    problems, trajs, failures = [], [], []
    new: list[Transition] = []
    types: Counter = Counter()
    for m in range(cfg.M):
        problem = env.sample_problem(stream(cfg.seed, "problems", j, m))
        problems.append(problem.to_dict(env))
        traj = _choose(state, problem, j, m, params)
        if traj is None:
            failures.append(m)
            continue
        executed, transitions = execute_trajectory(env, traj)
        entry = {
            "problem": m,
            "trajectory": executed.to_dict(env),
            "deviations": [t.deviation for t in transitions],
            "n_transitions": len(transitions),
        }
        if isinstance(env, WateringWorld):
            label = classify_trajectory(env, executed)
            entry["label"] = label
            types[label] += 1
        trajs.append(entry)
        new.extend(transitions)
    state.dataset.extend(new)
    state.mde = train_mde(env, state.dataset, cfg.cap, stream(cfg.seed, "subsample", j), config=cfg.gp)
    return IterationRecord(
        iteration=j,
        beta_used=beta,
        problems=problems,
        trajectories=trajs,
        n_new_transitions=len(new),
        failures=failures,
        mde_snapshot=f"snapshots/mde_{j + 1:03d}.json",
        trajectory_types=dict(sorted(types.items())),
        dataset_size=len(state.dataset),
    )


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def run_loop(
    config: LearningConfig,
    out_dir: str | Path | None = None,
    *,
    stop_after: int | None = None,
) -> LoopResult:
    """Run ``config.J`` iterations (or ``stop_after`` of them) from the prior MDE."""
    env = config.make_environment()
    state = LearnerState(env, config, MdeDataset(env.env_id), prior_mde(env, config.gp))
    if config.strategy == "random":
        state.random_lengths = _random_lengths(env, config)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "records").mkdir(parents=True, exist_ok=True)
        (out / "snapshots").mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(_dump(config.to_dict()))
        (out / "snapshots" / "mde_000.json").write_text(_dump(state.mde.to_dict()))
    n_iter = config.J if stop_after is None else min(config.J, stop_after)
    records, snapshots = [], [state.mde]
    started = time.time()
    for j in range(n_iter):
        rec = run_iteration(state, j)
        logger.info(
            "iter %d beta=%.3f new=%d dataset=%d failures=%s",
            j, rec.beta_used, rec.n_new_transitions, rec.dataset_size, rec.failures,
        )
        records.append(rec)
        snapshots.append(state.mde)
        if out is not None:
            (out / "records" / f"iter_{j:03d}.json").write_text(_dump(rec.to_dict()))
            (out / rec.mde_snapshot).write_text(_dump(state.mde.to_dict()))
    if out is not None:
        state.dataset.save(env, out / "dataset.jsonl")
        write_manifest(out, config, started)
    return LoopResult(records, snapshots, state.dataset)


def write_manifest(out: Path, config: LearningConfig, started: float) -> None:
    cfg = config.to_dict()
    inventory = sorted(str(p.relative_to(out)) for p in out.rglob("*") if p.is_file() and p.name != "manifest.json")
    manifest = {
        "config_hash": config_hash(cfg),
        "tool_version": __version__,
        "seed": config.seed,
        "environment": config.make_environment().env_id,
        "strategy": config.strategy,
        "iterations": len(list((out / "records").glob("iter_*.json"))),
        "started": started,
        "finished": time.time(),
        "files": inventory,
    }
    (out / "manifest.json").write_text(_dump(manifest))


def load_snapshot(env: Environment, path: str | Path) -> Mde:
    return Mde.from_dict(env, json.loads(Path(path).read_text()))


def dataset_prefix(result: LoopResult, iteration: int) -> list[Transition]:
    """Transitions collected by the end of 0-based ``iteration``."""
    n = result.records[iteration].dataset_size
    return result.dataset.transitions[:n]


__all__ = [
    "STRATEGIES",
    "ConfigError",
    "IterationRecord",
    "LearnerState",
    "LearningConfig",
    "LoopResult",
    "config_hash",
    "dataset_prefix",
    "execute_trajectory",
    "load_snapshot",
    "run_iteration",
    "run_loop",
]
