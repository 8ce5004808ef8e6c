"""RRT over environment states, forward-predicting with the inaccurate model.

An edge ``(s, a) -> s'`` enters the tree only if ``a`` is admissible from
``s``, the predicted ``s'`` is collision-free, and, when an MDE is given,
``(s, a)`` lies inside the model precondition.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .environments import Environment, PlanningProblem
from .mde import Mde, PreconditionParams, in_precondition


@dataclass
class Trajectory:
    states: list
    actions: list
    executed_states: list | None = None
    planned_mu: list[float] | None = None
    planned_sigma: list[float] | None = None
    index: int = 0
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.states) != len(self.actions) + 1:
            raise ValueError("a trajectory needs exactly one more state than actions")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def pairs(self):
        return zip(self.states[:-1], self.actions)

    def to_dict(self, env: Environment) -> dict[str, Any]:
        return {
            "index": self.index,
            "states": [env.state_to_json(s) for s in self.states],
            "actions": [env.action_to_json(a) for a in self.actions],
            "executed_states": None
            if self.executed_states is None
            else [env.state_to_json(s) for s in self.executed_states],
            "planned_mu": self.planned_mu,
            "planned_sigma": self.planned_sigma,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, env: Environment, d: dict[str, Any]) -> Trajectory:
        ex = d.get("executed_states")
        return cls(
            [env.state_from_json(s) for s in d["states"]],
            [env.action_from_json(a) for a in d["actions"]],
            None if ex is None else [env.state_from_json(s) for s in ex],
            d.get("planned_mu"),
            d.get("planned_sigma"),
            d.get("index", 0),
            d.get("meta", {}),
        )


@dataclass(frozen=True)
class PlannerConfig:
    max_expansions: int = 5000
    training_timeout: float | None = 30.0
    goal_bias: float = 0.1
    retry_factor: int = 3

    def __post_init__(self):
        if self.max_expansions < 1:
            raise ValueError("max_expansions must be >= 1")
        if not 0.0 <= self.goal_bias <= 1.0:
            raise ValueError("goal_bias must be a probability")


def edge_allowed(env: Environment, mde: Mde | None, params: PreconditionParams | None, s, a) -> Any:
    """Predicted next state if ``(s, a)`` passes every planning constraint, else ``None``."""
    if not env.is_valid_action(s, a):
        return None
    s_next = env.model_step(s, a)
    if not env.is_valid_state(s_next):
        return None
    if mde is not None and not in_precondition(mde, s, a, params):
        return None
    return s_next


def _annotate(traj: Trajectory, mde: Mde | None) -> Trajectory:
    if mde is not None:
        preds = [mde.predict(s, a) for s, a in traj.pairs()]
        traj.planned_mu = [p[0] for p in preds]
        traj.planned_sigma = [p[1] for p in preds]
    return traj


class _Tree:
    def __init__(self, env: Environment, root):
        self.env = env
        self.states = [root]
        self.parent = [-1]
        self.action: list[Any] = [None]
        self.keys = {env.state_key(root)}
        self.manhattan = env.nn_metric() == "manhattan"
        self._vecs = np.empty((64, len(env.state_vector(root))))
        self._vecs[0] = env.state_vector(root)

    def __len__(self):
        return len(self.states)

    def nearest(self, target) -> int:
        v = self.env.state_vector(target)
        diff = self._vecs[: len(self)] - v
        d = np.abs(diff).sum(1) if self.manhattan else np.einsum("ij,ij->i", diff, diff)
        return int(np.argmin(d))

    def add(self, s, parent: int, a) -> int:
        n = len(self)
        if n == self._vecs.shape[0]:
            self._vecs = np.concatenate([self._vecs, np.empty_like(self._vecs)])
        self._vecs[n] = self.env.state_vector(s)
        self.states.append(s)
        self.parent.append(parent)
        self.action.append(a)
        self.keys.add(self.env.state_key(s))
        return n

    def path(self, i: int) -> Trajectory:
        states, actions = [], []
        while i >= 0:
            states.append(self.states[i])
            if self.parent[i] >= 0:
                actions.append(self.action[i])
            i = self.parent[i]
        return Trajectory(states[::-1], actions[::-1])


def rrt_plan(
    env: Environment,
    mde: Mde | None,
    params: PreconditionParams | None,
    problem: PlanningProblem,
    config: PlannerConfig = PlannerConfig(),
    rng=None,
    *,
    timeout: float | None = None,
) -> Trajectory | None:
    """Grow a tree from ``problem.start`` until a predicted state satisfies the goal.

    Returns ``None`` when ``config.max_expansions`` (or ``timeout`` seconds of
    wall clock, if given) run out.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if mde is not None and params is None:
        raise ValueError("an MDE needs precondition params")
    start = problem.start
    if not env.is_valid_state(start):
        raise ValueError("start state violates the environment constraints")
    tree = _Tree(env, start)
    if problem.goal(start):
        return _annotate(tree.path(0), mde)
    deadline = None if timeout is None else time.monotonic() + timeout
    expansions = 0
    while expansions < config.max_expansions:
        if deadline is not None and time.monotonic() > deadline:
            break
        expansions += 1
        if rng.random() < config.goal_bias:
            target = env.sample_goal_state(problem, rng)
        else:
            target = env.sample_state(rng)
        near = tree.nearest(target)
        s = tree.states[near]
        for a in env.steer(s, target, rng):
            s_next = edge_allowed(env, mde, params, s, a)
            if s_next is None or env.state_key(s_next) in tree.keys:
                continue
            i = tree.add(s_next, near, a)
            if problem.goal(s_next):
                traj = tree.path(i)
                traj.meta["expansions"] = expansions
                return _annotate(traj, mde)
            break
    return None


def diversity_key(env: Environment, trajectory: Trajectory) -> int:
    if not trajectory.states:
        raise ValueError("empty trajectory")
    return env.diversity_key(trajectory)


def generate_candidates(
    env: Environment,
    mde: Mde | None,
    params: PreconditionParams | None,
    problem: PlanningProblem,
    n_candidates: int,
    config: PlannerConfig = PlannerConfig(),
    rng=None,
    *,
    use_bins: bool = True,
    timeout: float | None = None,
) -> list[Trajectory]:
    """Independent RRT searches until ``n_candidates`` plans or the retry budget is spent.

    With binning on (and more than one bin), at most ``ceil(n / n_bins)``
    plans are kept per ``diversity_key`` bin.
    """
    if n_candidates < 1:
        raise ValueError("n_candidates must be >= 1")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    n_bins = env.n_diversity_bins if use_bins else 1
    per_bin = math.ceil(n_candidates / n_bins)
    counts: dict[int, int] = {}
    out: list[Trajectory] = []
    seeds = rng.integers(0, 2**63 - 1, size=config.retry_factor * n_candidates)
    for attempt, seed in enumerate(seeds):
        if len(out) >= n_candidates:
            break
        traj = rrt_plan(env, mde, params, problem, config, np.random.default_rng(int(seed)), timeout=timeout)
        if traj is None:
            continue
        if n_bins > 1:
            b = diversity_key(env, traj)
            if counts.get(b, 0) >= per_bin:
                continue
            counts[b] = counts.get(b, 0) + 1
            traj.meta["bin"] = b
        traj.index = len(out)
        traj.meta["attempt"] = attempt
        out.append(traj)
    return out


def random_rollout(
    env: Environment,
    mde: Mde | None,
    params: PreconditionParams | None,
    start,
    length: int,
    rng,
    max_tries: int = 20,
) -> Trajectory:
    """Chain of planner-style extensions toward random samples, with no goal.

    Each step samples a state, steers toward it from the current predicted
    state and keeps the first admissible action; after ``max_tries`` failed
    samples the rollout stops early.
    """
    states, actions = [start], []
    s = start
    for _ in range(length):
        for _ in range(max_tries):
            target = env.sample_state(rng)
            chosen = None
            for a in env.steer(s, target, rng):
                s_next = edge_allowed(env, mde, params, s, a)
                if s_next is not None and env.state_key(s_next) != env.state_key(s):
                    chosen = (a, s_next)
                    break
            if chosen is not None:
                break
        if chosen is None:
            break
        actions.append(chosen[0])
        states.append(chosen[1])
        s = chosen[1]
    return _annotate(Trajectory(states, actions), mde)
