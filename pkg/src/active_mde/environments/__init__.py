"""Ground-truth environments paired with inaccurate dynamics models."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any

from .base import Environment, PlanningProblem
from .gridworld import CellGoal, GridWorld, grid_distance, grid_model_step, grid_true_step
from .watering import (
    LABELS,
    Leaf,
    VolumeGoal,
    WaterAction,
    WateringWorld,
    WaterState,
    classify_trajectory,
    water_distance,
    water_model_step,
    water_true_step,
)

BUILTIN = {"gridworld": "gridworld_default.json", "watering": "watering_default.json"}


def builtin_config(name: str) -> dict[str, Any]:
    text = resources.files("active_mde.configs").joinpath(BUILTIN[name]).read_text()
    return json.loads(text)


def environment_from_config(cfg: dict[str, Any] | str | Path) -> Environment:
    """Build an environment from a config dict, a JSON path, or a builtin name."""
    if isinstance(cfg, (str, Path)):
        if str(cfg) in BUILTIN:
            cfg = builtin_config(str(cfg))
        else:
            cfg = json.loads(Path(cfg).read_text())
    kind = cfg.get("type")
    if kind == "gridworld":
        return GridWorld.from_config(cfg)
    if kind == "watering":
        return WateringWorld.from_config(cfg)
    raise ValueError(f"unknown environment type {kind!r}")


def sample_problem(env: Environment, rng) -> PlanningProblem:
    return env.sample_problem(rng)


__all__ = [
    "LABELS",
    "CellGoal",
    "Environment",
    "GridWorld",
    "Leaf",
    "PlanningProblem",
    "VolumeGoal",
    "WaterAction",
    "WaterState",
    "WateringWorld",
    "builtin_config",
    "classify_trajectory",
    "environment_from_config",
    "grid_distance",
    "grid_model_step",
    "grid_true_step",
    "sample_problem",
    "water_distance",
    "water_model_step",
    "water_true_step",
]
