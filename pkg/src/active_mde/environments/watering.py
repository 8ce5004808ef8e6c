"""Geometric plant-watering surrogate in the (y, z) plane.

A point-like source container at pose ``(y, z, theta)`` pours one unit of
water each time ``theta`` is rotated up through ``pour_threshold``. Water
drops straight down from the spout. Leaves are horizontal segments: their
solid parts catch water (a spill) and their whole span blocks the
container. The model ignores leaves entirely, so it is wrong about pours
above the plant and about motions through it.

Coordinates are normalized to the unit square; angles are in degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Sequence

import numpy as np

from .base import Environment, PlanningProblem

LABELS = ("below_success", "below_spill", "above_success", "above_spill")
_TOL = 1e-12


@dataclass(frozen=True)
class WaterState:
    y: float
    z: float
    theta: float
    source_volume: int
    target_volume: int = 0
    spilled: int = 0

    @property
    def total_volume(self) -> int:
        return self.source_volume + self.target_volume + self.spilled


@dataclass(frozen=True)
class WaterAction:
    """Desired source pose. Exactly one of position or angle may change."""

    y: float
    z: float
    theta: float


@dataclass(frozen=True)
class Leaf:
    y_lo: float
    y_hi: float
    z: float
    holes: tuple[tuple[float, float], ...] = ()

    def spans(self, y: float) -> bool:
        return self.y_lo <= y <= self.y_hi

    def is_solid(self, y: float) -> bool:
        return self.spans(y) and not any(lo < y < hi for lo, hi in self.holes)

    def to_dict(self) -> dict[str, Any]:
        return {"y_lo": self.y_lo, "y_hi": self.y_hi, "z": self.z, "holes": [list(h) for h in self.holes]}

    @classmethod
    def from_dict(cls, d) -> Leaf:
        return cls(float(d["y_lo"]), float(d["y_hi"]), float(d["z"]), tuple(tuple(map(float, h)) for h in d.get("holes", ())))


@dataclass(frozen=True)
class VolumeGoal:
    min_target: int = 1
    max_spill: int = 0

    def __call__(self, s: WaterState) -> bool:
        return s.target_volume >= self.min_target and s.spilled <= self.max_spill

    def to_dict(self) -> dict[str, Any]:
        return {"type": "volume", "min_target": self.min_target, "max_spill": self.max_spill}


@dataclass(frozen=True)
class WateringWorld(Environment):
    target_opening: tuple[float, float] = (0.55, 0.75)
    z_top: float = 0.25
    leaves: tuple[Leaf, ...] = ()
    pour_threshold: float = 130.0
    initial_source_volume: int = 3
    start_y: tuple[float, float] = (0.05, 0.4)
    start_z: tuple[float, float] = (0.3, 0.9)
    goal_volume: int = 1
    max_spill: int = 0
    translation_step: float = 0.05
    rotation_step: float = 15.0
    pour_angle: float = 140.0
    height_bins: tuple[float, ...] = (0.5, 0.75)
    clearance: float = 0.02
    contact_margin: float = 1e-3
    action_only_features: bool = False
    env_id: str = "watering"

    def __post_init__(self):
        object.__setattr__(self, "leaves", tuple(self.leaves))
        object.__setattr__(self, "height_bins", tuple(float(b) for b in self.height_bins))
        lo, hi = self.target_opening
        if not 0 <= lo < hi <= 1:
            raise ValueError("target_opening must be an increasing interval inside [0, 1]")
        if self.start_y[1] >= lo:
            raise ValueError("start region must lie left of the target opening")
        if list(self.height_bins) != sorted(self.height_bins):
            raise ValueError("height_bins must be increasing")

    @property
    def feature_dim(self) -> int:
        return 3 if self.action_only_features else 6

    @property
    def n_diversity_bins(self) -> int:
        return len(self.height_bins) + 1

    # geometry ----------------------------------------------------------------
    def _in_box(self, y: float, z: float) -> bool:
        lo, hi = self.target_opening
        c = self.clearance
        return lo - c <= y <= hi + c and z <= self.z_top + c

    def _segment_hits_box(self, y0, z0, y1, z1) -> bool:
        # Liang-Barsky clip against the inflated container box
        lo, hi = self.target_opening
        c = self.clearance
        xmin, xmax, zmin, zmax = lo - c, hi + c, -1.0, self.z_top + c
        dy, dz = y1 - y0, z1 - z0
        t0, t1 = 0.0, 1.0
        for p, q in ((-dy, y0 - xmin), (dy, xmax - y0), (-dz, z0 - zmin), (dz, zmax - z0)):
            if abs(p) < _TOL:
                if q < 0:
                    return False
                continue
            t = q / p
            if p < 0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
            if t0 > t1:
                return False
        return True

    def lowest_leaf_over_opening(self) -> float:
        lo, hi = self.target_opening
        zs = [lf.z for lf in self.leaves if lf.y_lo <= hi and lf.y_hi >= lo]
        return min(zs) if zs else math.inf

    def is_valid_state(self, s: WaterState) -> bool:
        return 0.0 <= s.y <= 1.0 and 0.0 <= s.z <= 1.0 and 0.0 <= s.theta <= 180.0 and not self._in_box(s.y, s.z)

    @staticmethod
    def action_kind(s: WaterState, a: WaterAction) -> str:
        moved = abs(a.y - s.y) > _TOL or abs(a.z - s.z) > _TOL
        turned = abs(a.theta - s.theta) > _TOL
        if moved and turned:
            raise ValueError("action must either translate or rotate, not both")
        return "translate" if moved else "rotate"

    def is_valid_action(self, s: WaterState, a: WaterAction) -> bool:
        try:
            kind = self.action_kind(s, a)
        except ValueError:
            return False
        target = replace(s, y=a.y, z=a.z, theta=a.theta)
        if not self.is_valid_state(target):
            return False
        if kind == "translate":
            if s.theta >= self.pour_threshold:
                return False
            return not self._segment_hits_box(s.y, s.z, a.y, a.z)
        return True

    # dynamics ----------------------------------------------------------------
    def true_step(self, s, a):
        return water_true_step(self, s, a)

    def model_step(self, s, a):
        return water_model_step(self, s, a)

    def distance(self, s1, s2) -> float:
        return water_distance(self, s1, s2)

    # features ----------------------------------------------------------------
    def featurize(self, s: WaterState, a: WaterAction) -> np.ndarray:
        if self.action_only_features:
            return np.array([a.y, a.z, a.theta / 180.0])
        ts, rs = self.translation_step, self.rotation_step
        f = np.array(
            [
                s.y,
                s.z,
                s.theta / 180.0,
                (a.y - s.y) / (2 * ts) + 0.5,
                (a.z - s.z) / (2 * ts) + 0.5,
                (a.theta - s.theta) / (2 * rs) + 0.5,
            ]
        )
        return np.clip(f, 0.0, 1.0)

    # problems / planner hooks --------------------------------------------------
    def sample_problem(self, rng: np.random.Generator) -> PlanningProblem:
        y = float(rng.uniform(*self.start_y))
        z = float(rng.uniform(*self.start_z))
        start = WaterState(y, z, 0.0, self.initial_source_volume)
        return PlanningProblem(start, VolumeGoal(self.goal_volume, self.max_spill), self.env_id)

    def sample_state(self, rng: np.random.Generator) -> WaterState:
        y, z = rng.uniform(0.0, 1.0, size=2)
        theta = rng.uniform(0.0, 180.0)
        return WaterState(float(y), float(z), float(theta), 0)

    def sample_goal_state(self, problem: PlanningProblem, rng: np.random.Generator) -> WaterState:
        lo, hi = self.target_opening
        y = rng.uniform(lo, hi)
        z = rng.uniform(self.z_top + 2 * self.clearance, 1.0)
        return WaterState(float(y), float(z), self.pour_angle, 0)

    def _translate_toward(self, s: WaterState, target) -> WaterAction | None:
        dy, dz = target.y - s.y, target.z - s.z
        dist = math.hypot(dy, dz)
        if dist <= _TOL:
            return None
        k = min(1.0, self.translation_step / dist)
        return WaterAction(s.y + k * dy, s.z + k * dz, s.theta)

    def _rotate_toward(self, s: WaterState, target) -> WaterAction | None:
        dth = target.theta - s.theta
        if abs(dth) <= _TOL:
            return None
        step = math.copysign(min(abs(dth), self.rotation_step), dth)
        return WaterAction(s.y, s.z, s.theta + step)

    def steer(self, s: WaterState, target, rng: np.random.Generator) -> list[WaterAction]:
        options = [self._translate_toward(s, target), self._rotate_toward(s, target)]
        if rng.random() < 0.5:
            options.reverse()
        return [a for a in options if a is not None]

    def random_actions(self, s: WaterState, rng: np.random.Generator) -> list[WaterAction]:
        return self.steer(s, self.sample_state(rng), rng)

    def state_vector(self, s: WaterState) -> np.ndarray:
        return np.array([s.y, s.z, s.theta / 180.0])

    def nn_metric(self) -> str:
        return "euclidean"

    def state_key(self, s: WaterState):
        return (round(s.y, 9), round(s.z, 9), round(s.theta, 6), s.source_volume, s.target_volume, s.spilled)

    def pour_height(self, states: Sequence[WaterState]) -> float:
        """Height of the first pour in a state sequence, else of the last state."""
        for prev, nxt in zip(states, states[1:]):
            if prev.theta < self.pour_threshold <= nxt.theta and nxt.source_volume < prev.source_volume:
                return prev.z
        return states[-1].z

    def height_bin(self, z: float) -> int:
        return int(np.searchsorted(self.height_bins, z, side="right"))

    def diversity_key(self, trajectory) -> int:
        return self.height_bin(self.pour_height(trajectory.states))

    # serialization -------------------------------------------------------------
    def state_to_json(self, s: WaterState):
        return {
            "y": s.y,
            "z": s.z,
            "theta": s.theta,
            "source_volume": s.source_volume,
            "target_volume": s.target_volume,
            "spilled": s.spilled,
        }

    def state_from_json(self, d) -> WaterState:
        return WaterState(
            float(d["y"]), float(d["z"]), float(d["theta"]), int(d["source_volume"]), int(d["target_volume"]), int(d["spilled"])
        )

    def action_to_json(self, a: WaterAction):
        return {"y": a.y, "z": a.z, "theta": a.theta}

    def action_from_json(self, d) -> WaterAction:
        return WaterAction(float(d["y"]), float(d["z"]), float(d["theta"]))

    def goal_from_json(self, d) -> VolumeGoal:
        return VolumeGoal(int(d["min_target"]), int(d["max_spill"]))

    def to_config(self) -> dict[str, Any]:
        return {
            "type": "watering",
            "env_id": self.env_id,
            "target_opening": list(self.target_opening),
            "z_top": self.z_top,
            "leaves": [lf.to_dict() for lf in self.leaves],
            "pour_threshold": self.pour_threshold,
            "initial_source_volume": self.initial_source_volume,
            "start_y": list(self.start_y),
            "start_z": list(self.start_z),
            "goal_volume": self.goal_volume,
            "max_spill": self.max_spill,
            "translation_step": self.translation_step,
            "rotation_step": self.rotation_step,
            "pour_angle": self.pour_angle,
            "height_bins": list(self.height_bins),
            "clearance": self.clearance,
            "contact_margin": self.contact_margin,
            "action_only_features": self.action_only_features,
        }

    @classmethod
    def from_config(cls, cfg: dict[str, Any]) -> WateringWorld:
        kw = {k: v for k, v in cfg.items() if k != "type"}
        for k in ("target_opening", "start_y", "start_z"):
            if k in kw:
                kw[k] = tuple(float(v) for v in kw[k])
        if "height_bins" in kw:
            kw["height_bins"] = tuple(kw["height_bins"])
        kw["leaves"] = tuple(Leaf.from_dict(d) for d in kw.get("leaves", ()))
        return cls(**kw)


def _dispense(world: WateringWorld, s: WaterState, see_leaves: bool) -> WaterState:
    """One unit leaves the spout at ``(s.y, s.z)`` and falls straight down."""
    if see_leaves:
        below = [lf for lf in world.leaves if lf.z < s.z and lf.spans(s.y)]
        if below:
            top = max(below, key=lambda lf: lf.z)
            if top.is_solid(s.y):
                return replace(s, source_volume=s.source_volume - 1, spilled=s.spilled + 1)
    lo, hi = world.target_opening
    if lo <= s.y <= hi and s.z > world.z_top:
        return replace(s, source_volume=s.source_volume - 1, target_volume=s.target_volume + 1)
    return replace(s, source_volume=s.source_volume - 1, spilled=s.spilled + 1)


def _rotate(world: WateringWorld, s: WaterState, theta_d: float, see_leaves: bool) -> WaterState:
    out = replace(s, theta=theta_d)
    if s.theta < world.pour_threshold <= theta_d and s.source_volume >= 1:
        out = _dispense(world, out, see_leaves)
    return out


def _leaf_contact(world: WateringWorld, s: WaterState, a: WaterAction) -> float:
    """Fraction of the segment travelled before the container meets a leaf (1 if never)."""
    t_hit = 1.0
    dz = a.z - s.z
    for lf in world.leaves:
        if abs(dz) <= _TOL or abs(s.z - lf.z) <= _TOL:
            continue
        t = (lf.z - s.z) / dz
        if 0.0 < t <= 1.0:
            y = s.y + t * (a.y - s.y)
            if lf.spans(y):
                t_hit = min(t_hit, t)
    return t_hit


def water_true_step(world: WateringWorld, s: WaterState, a: WaterAction) -> WaterState:
    kind = WateringWorld.action_kind(s, a)
    if kind == "rotate":
        return _rotate(world, s, a.theta, see_leaves=True)
    t = _leaf_contact(world, s, a)
    if t < 1.0:
        length = math.hypot(a.y - s.y, a.z - s.z)
        t = max(0.0, t - world.contact_margin / length)
    return replace(s, y=s.y + t * (a.y - s.y), z=s.z + t * (a.z - s.z))


def water_model_step(world: WateringWorld, s: WaterState, a: WaterAction) -> WaterState:
    kind = WateringWorld.action_kind(s, a)
    if kind == "rotate":
        return _rotate(world, s, a.theta, see_leaves=False)
    return replace(s, y=a.y, z=a.z)


def water_distance(world: WateringWorld, s1: WaterState, s2: WaterState) -> float:
    pose = math.sqrt((s1.y - s2.y) ** 2 + (s1.z - s2.z) ** 2 + ((s1.theta - s2.theta) / 180.0) ** 2)
    vol = (abs(s1.source_volume - s2.source_volume) + abs(s1.target_volume - s2.target_volume)) / 2.0
    return pose + vol


def classify_trajectory(world: WateringWorld, trajectory) -> str:
    """Label an executed watering trajectory as below/above leaves and success/spill.

    Success means at least one unit was dispensed and every dispensed unit
    reached the target. A trajectory that never pours counts as a spill.
    """
    if not isinstance(world, WateringWorld):
        raise ValueError("classify_trajectory needs a watering world")
    states = trajectory.executed_states
    if not states or not isinstance(states[0], WaterState):
        raise ValueError("trajectory has no executed watering states")
    first, last = states[0], states[-1]
    dispensed = first.source_volume - last.source_volume
    gained = last.target_volume - first.target_volume
    success = dispensed > 0 and gained == dispensed
    below = world.pour_height(states) < world.lowest_leaf_over_opening()
    return f"{'below' if below else 'above'}_{'success' if success else 'spill'}"


def default_leaves() -> tuple[Leaf, ...]:
    return (
        Leaf(0.45, 0.85, 0.5, ((0.62, 0.66),)),
        Leaf(0.6, 0.95, 0.75, ((0.70, 0.73),)),
    )
