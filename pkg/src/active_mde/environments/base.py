"""Environment protocol shared by the gridworld and the watering surrogate.

An environment bundles the ground-truth dynamics, the deliberately
inaccurate model, a distance metric, the feature map used by the MDE, and
the samplers and steering function the planner needs.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Sequence

import numpy as np


@dataclass(frozen=True)
class PlanningProblem:
    start: Any
    goal: Callable[[Any], bool]
    env_id: str

    def to_dict(self, env: "Environment") -> dict[str, Any]:
        return {"env_id": self.env_id, "start": env.state_to_json(self.start), "goal": self.goal.to_dict()}


class Environment(abc.ABC):
    env_id: str
    feature_dim: int
    n_diversity_bins: int = 1

    # dynamics -------------------------------------------------------------
    @abc.abstractmethod
    def true_step(self, s, a): ...

    @abc.abstractmethod
    def model_step(self, s, a): ...

    @abc.abstractmethod
    def distance(self, s1, s2) -> float: ...

    # constraints ----------------------------------------------------------
    def is_valid_state(self, s) -> bool:
        return True

    def is_valid_action(self, s, a) -> bool:
        return True

    # MDE features ---------------------------------------------------------
    @abc.abstractmethod
    def featurize(self, s, a) -> np.ndarray: ...

    # problems and planner hooks ------------------------------------------
    @abc.abstractmethod
    def sample_problem(self, rng: np.random.Generator) -> PlanningProblem: ...

    @abc.abstractmethod
    def sample_state(self, rng: np.random.Generator): ...

    @abc.abstractmethod
    def sample_goal_state(self, problem: PlanningProblem, rng: np.random.Generator): ...

    @abc.abstractmethod
    def steer(self, s, target, rng: np.random.Generator) -> Sequence[Any]:
        """Candidate actions from ``s`` toward ``target``, most preferred first."""

    @abc.abstractmethod
    def state_vector(self, s) -> np.ndarray:
        """Coordinates used for nearest-neighbour search in the planner."""

    def state_key(self, s) -> Hashable:
        return s

    def diversity_key(self, trajectory) -> int:
        return 0

    # serialization -------------------------------------------------------
    @abc.abstractmethod
    def state_to_json(self, s) -> Any: ...

    @abc.abstractmethod
    def state_from_json(self, d): ...

    @abc.abstractmethod
    def action_to_json(self, a) -> Any: ...

    @abc.abstractmethod
    def action_from_json(self, d): ...

    @abc.abstractmethod
    def goal_from_json(self, d) -> Callable[[Any], bool]: ...

    @abc.abstractmethod
    def to_config(self) -> dict[str, Any]: ...
