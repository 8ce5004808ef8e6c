"""Trajectory-level acquisition and the training risk-tolerance schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .mde import Mde
from .planner import Trajectory

MODES = ("max", "sum")
SCHEDULES = ("sigmoid_full", "sigmoid_capped", "fixed_low", "fixed_high")


@dataclass(frozen=True)
class AcquisitionConfig:
    c: float = 1.0
    gamma: float = 0.9
    mode: str = "max"

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("c must be >= 0")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


@dataclass(frozen=True)
class ScheduleConfig:
    k1: float = 2.0
    k2: float = 0.5
    J: int = 20
    variant: str = "sigmoid_full"

    def __post_init__(self):
        if self.J < 1:
            raise ValueError("J must be >= 1")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be > 0")
        if self.variant not in SCHEDULES:
            raise ValueError(f"variant must be one of {SCHEDULES}")


def alpha_step(mu: float, sigma: float, c: float) -> float:
    """Lower-confidence-bound style utility; lower is more attractive."""
    return mu - c * sigma


def aggregate(values: Sequence[float], gamma: float, mode: str) -> float:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot aggregate an empty sequence")
    disc = v * gamma ** np.arange(v.size)
    if mode == "max":
        return float(disc.max())
    if mode == "sum":
        return float(disc.sum())
    raise ValueError(f"unknown mode {mode!r}")


def step_utilities(mde: Mde, trajectory: Trajectory, c: float) -> list[float]:
    return [alpha_step(*mde.predict(s, a), c) for s, a in trajectory.pairs()]


def alpha_trajectory(mde: Mde, trajectory: Trajectory, config: AcquisitionConfig) -> float:
    if trajectory.n_actions < 1:
        raise ValueError("trajectory has no actions")
    return aggregate(step_utilities(mde, trajectory, config.c), config.gamma, config.mode)


def select_trajectory(mde: Mde, candidates: Sequence[Trajectory], config: AcquisitionConfig) -> Trajectory:
    """Argmin of ``alpha_trajectory``; ties go to the earliest candidate."""
    if not candidates:
        raise ValueError("no candidates to select from")
    best, best_val = None, math.inf
    for traj in candidates:
        val = alpha_trajectory(mde, traj, config) if traj.n_actions else math.inf
        traj.meta["alpha"] = val
        if best is None or val < best_val:
            best, best_val = traj, val
    return best


def beta_schedule(j: float, config: ScheduleConfig) -> float:
    if j < 0:
        raise ValueError("iteration index must be >= 0")
    k1, k2, J = config.k1, config.k2, config.J
    if config.variant == "fixed_low":
        return -k1
    if config.variant == "fixed_high":
        return 1.0
    beta = 2.0 * k1 / (1.0 + math.exp(-k2 * (j - J / 2.0))) - k1
    if config.variant == "sigmoid_capped":
        beta = min(beta, 1.0)
    return beta
