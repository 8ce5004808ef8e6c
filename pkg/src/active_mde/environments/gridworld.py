"""Icy gridworld: left/right moves onto ice slip backwards.

States are integer cells ``(x, y)``; actions are ``"up"``, ``"down"``,
``"left"``, ``"right"``. Maps are written top row first, so the first string
of ``map`` is ``y = height - 1``. Legend: ``.`` free, ``I`` ice, ``#`` wall.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

import numpy as np

from .base import Environment, PlanningProblem

ACTIONS = ("up", "down", "left", "right")
DELTAS = {"up": (0, 1), "down": (0, -1), "left": (-1, 0), "right": (1, 0)}
HORIZONTAL = frozenset({"left", "right"})


@dataclass(frozen=True)
class CellGoal:
    cell: tuple[int, int]

    def __call__(self, s) -> bool:
        return tuple(s) == self.cell

    def to_dict(self) -> dict[str, Any]:
        return {"type": "cell", "cell": list(self.cell)}


@dataclass(frozen=True)
class GridWorld(Environment):
    width: int
    height: int
    ice_cells: frozenset = frozenset()
    obstacle_cells: frozenset = frozenset()
    slip_magnitude: int = 2
    model_knows_obstacles: bool = True
    env_id: str = "gridworld"

    feature_dim = 6

    def __post_init__(self):
        ice = frozenset((int(x), int(y)) for x, y in self.ice_cells)
        obs = frozenset((int(x), int(y)) for x, y in self.obstacle_cells)
        object.__setattr__(self, "ice_cells", ice)
        object.__setattr__(self, "obstacle_cells", obs)
        if self.width < 1 or self.height < 1:
            raise ValueError("grid must be at least 1x1")
        if ice & obs:
            raise ValueError("ice and obstacle cells overlap")
        for c in ice | obs:
            if not self.in_bounds(c):
                raise ValueError(f"cell {c} out of bounds")
        if self.slip_magnitude < 0:
            raise ValueError("slip_magnitude must be >= 0")
        free = tuple((x, y) for y in range(self.height) for x in range(self.width) if (x, y) not in obs)
        object.__setattr__(self, "_free", free)

    # geometry ----------------------------------------------------------------
    def in_bounds(self, c) -> bool:
        return 0 <= c[0] < self.width and 0 <= c[1] < self.height

    def is_free(self, c) -> bool:
        return self.in_bounds(c) and c not in self.obstacle_cells

    def free_cells(self) -> tuple[tuple[int, int], ...]:
        return self._free

    def is_valid_state(self, s) -> bool:
        return self.is_free(tuple(s))

    # dynamics ----------------------------------------------------------------
    def model_step(self, s, a):
        return grid_model_step(self, s, a)

    def true_step(self, s, a):
        return grid_true_step(self, s, a)

    def distance(self, s1, s2) -> float:
        return grid_distance(self, s1, s2)

    def slips(self, s, a) -> bool:
        """Whether the ice rule fires for ``(s, a)``: a horizontal move whose destination is ice."""
        if a not in HORIZONTAL:
            return False
        dx, dy = DELTAS[a]
        dest = (s[0] + dx, s[1] + dy)
        return self.is_free(dest) and dest in self.ice_cells

    # features ----------------------------------------------------------------
    def featurize(self, s, a) -> np.ndarray:
        f = np.zeros(6)
        f[0] = s[0] / self.width
        f[1] = s[1] / self.height
        f[2 + ACTIONS.index(a)] = 1.0
        return f

    # problems / planner hooks --------------------------------------------------
    def sample_problem(self, rng: np.random.Generator) -> PlanningProblem:
        cells = self.free_cells()
        if len(cells) < 2:
            raise ValueError("need two free cells to sample a problem")
        i, j = rng.choice(len(cells), size=2, replace=False)
        return PlanningProblem(cells[i], CellGoal(cells[j]), self.env_id)

    def sample_state(self, rng: np.random.Generator):
        cells = self.free_cells()
        return cells[int(rng.integers(len(cells)))]

    def sample_goal_state(self, problem: PlanningProblem, rng: np.random.Generator):
        return problem.goal.cell

    def steer(self, s, target, rng=None) -> list[str]:
        # actions that reduce Manhattan distance, in fixed order
        out = []
        for a in ACTIONS:
            dx, dy = DELTAS[a]
            before = abs(target[0] - s[0]) + abs(target[1] - s[1])
            after = abs(target[0] - s[0] - dx) + abs(target[1] - s[1] - dy)
            if after < before:
                out.append(a)
        return out

    def random_actions(self, s, rng: np.random.Generator) -> list[str]:
        return [ACTIONS[i] for i in rng.permutation(4)]

    def state_vector(self, s) -> np.ndarray:
        return np.asarray(s, dtype=float)

    def nn_metric(self) -> str:
        return "manhattan"

    # serialization -------------------------------------------------------------
    def state_to_json(self, s):
        return [int(s[0]), int(s[1])]

    def state_from_json(self, d):
        return (int(d[0]), int(d[1]))

    def action_to_json(self, a):
        return a

    def action_from_json(self, d):
        if d not in DELTAS:
            raise ValueError(f"unknown action {d!r}")
        return d

    def goal_from_json(self, d):
        return CellGoal(tuple(d["cell"]))

    def to_config(self) -> dict[str, Any]:
        rows = []
        for y in range(self.height - 1, -1, -1):
            row = []
            for x in range(self.width):
                c = (x, y)
                row.append("#" if c in self.obstacle_cells else "I" if c in self.ice_cells else ".")
            rows.append("".join(row))
        return {
            "type": "gridworld",
            "env_id": self.env_id,
            "map": rows,
            "slip_magnitude": self.slip_magnitude,
            "model_knows_obstacles": self.model_knows_obstacles,
        }

    @classmethod
    def from_config(cls, cfg: dict[str, Any]) -> GridWorld:
        rows = cfg["map"]
        height = len(rows)
        width = len(rows[0]) if rows else 0
        ice, obs = set(), set()
        for r, row in enumerate(rows):
            if len(row) != width:
                raise ValueError("map rows must all have the same length")
            y = height - 1 - r
            for x, ch in enumerate(row):
                if ch == "I":
                    ice.add((x, y))
                elif ch == "#":
                    obs.add((x, y))
                elif ch != ".":
                    raise ValueError(f"unknown map symbol {ch!r}")
        return cls(
            width,
            height,
            frozenset(ice),
            frozenset(obs),
            int(cfg.get("slip_magnitude", 2)),
            bool(cfg.get("model_knows_obstacles", True)),
            cfg.get("env_id", "gridworld"),
        )


def _move(world: GridWorld, s, a, respect_obstacles: bool = True):
    dx, dy = DELTAS[a]
    dest = (s[0] + dx, s[1] + dy)
    if not world.in_bounds(dest) or (respect_obstacles and dest in world.obstacle_cells):
        return tuple(s)
    return dest


def grid_model_step(world: GridWorld, s, a):
    if a not in DELTAS:
        raise ValueError(f"unknown action {a!r}")
    return _move(world, s, a, world.model_knows_obstacles)


def grid_true_step(world: GridWorld, s, a):
    """Cardinal move; a left/right move onto ice lands ``slip_magnitude`` cells behind ``s``."""
    if a not in DELTAS:
        raise ValueError(f"unknown action {a!r}")
    dest = _move(world, s, a)
    if not world.slips(s, a):
        return dest
    back = -DELTAS[a][0]
    x, y = s
    for _ in range(world.slip_magnitude):
        nxt = (x + back, y)
        if not world.is_free(nxt):
            break
        x = nxt[0]
    return (x, y)


def grid_distance(world: GridWorld, s1, s2) -> float:
    dx = (s1[0] - s2[0]) / world.width
    dy = (s1[1] - s2[1]) / world.height
    return float(np.hypot(dx, dy))


def ice_trigger_set(world: GridWorld) -> set[tuple[tuple[int, int], str]]:
    return {(c, a) for c in world.free_cells() for a in HORIZONTAL if world.slips(c, a)}


def all_pairs(world: GridWorld) -> Iterable[tuple[tuple[int, int], str]]:
    for c in world.free_cells():
        for a in ACTIONS:
            yield c, a
