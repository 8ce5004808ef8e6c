"""Model Deviation Estimator: a heteroscedastic GP over featurized (s, a)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np
from scipy.stats import norm

from .environments import Environment
from .gp_core import (
    GpConfig,
    GpDataset,
    HeteroGpModel,
    build_hom_model,
    fit_heteroscedastic,
    prior_hetero_model,
    subsample,
)
from .rng import stream

DEFAULT_CAP = 300


@dataclass(frozen=True)
class Transition:
    state: Any
    action: Any
    observed_next: Any
    predicted_next: Any
    deviation: float

    def to_dict(self, env: Environment) -> dict[str, Any]:
        return {
            "env_id": env.env_id,
            "features": env.featurize(self.state, self.action).tolist(),
            "state": env.state_to_json(self.state),
            "action": env.action_to_json(self.action),
            "observed_next": env.state_to_json(self.observed_next),
            "predicted_next": env.state_to_json(self.predicted_next),
            "deviation": self.deviation,
        }

    @classmethod
    def from_dict(cls, env: Environment, d: dict[str, Any]) -> Transition:
        return cls(
            env.state_from_json(d["state"]),
            env.action_from_json(d["action"]),
            env.state_from_json(d["observed_next"]),
            env.state_from_json(d["predicted_next"]),
            float(d["deviation"]),
        )


@dataclass
class MdeDataset:
    env_id: str
    transitions: list[Transition] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.transitions)

    def extend(self, items: Iterable[Transition]) -> None:
        self.transitions.extend(items)

    def to_gp_dataset(self, env: Environment) -> GpDataset:
        if env.env_id != self.env_id:
            raise ValueError(f"dataset is for {self.env_id!r}, not {env.env_id!r}")
        if not self.transitions:
            return GpDataset(np.zeros((0, env.feature_dim)), np.zeros(0))
        x = np.stack([env.featurize(t.state, t.action) for t in self.transitions])
        y = np.array([t.deviation for t in self.transitions])
        return GpDataset(x, y)

    def dumps(self, env: Environment) -> str:
        return "".join(json.dumps(t.to_dict(env), sort_keys=True) + "\n" for t in self.transitions)

    def save(self, env: Environment, path: str | Path) -> None:
        Path(path).write_text(self.dumps(env))

    @classmethod
    def loads(cls, env: Environment, text: str) -> MdeDataset:
        out = cls(env.env_id)
        for line in text.splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            if d["env_id"] != env.env_id:
                raise ValueError(f"transition for {d['env_id']!r} in a {env.env_id!r} dataset")
            out.transitions.append(Transition.from_dict(env, d))
        return out

    @classmethod
    def load(cls, env: Environment, path: str | Path) -> MdeDataset:
        return cls.loads(env, Path(path).read_text())


@dataclass(frozen=True)
class PreconditionParams:
    d_max: float = 0.1
    beta: float = 2.0

    def __post_init__(self):
        if not self.d_max > 0:
            raise ValueError("d_max must be > 0")


class Mde:
    """Immutable wrapper that featurizes (s, a) and queries the GP.

    Predictions are memoized on the feature bytes; the GP never changes after
    construction so the cache is always valid.
    """

    def __init__(self, env: Environment, gp: HeteroGpModel, n_train: int = 0):
        self.env = env
        self.gp = gp
        self.n_train = n_train
        self._cache: dict[bytes, tuple[float, float]] = {}

    @property
    def is_prior(self) -> bool:
        return self.gp.n == 0

    def predict_features(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mu, sigma = self.gp.predict(np.atleast_2d(x))
        return np.maximum(mu, 0.0), sigma

    def raw_predict(self, s, a) -> tuple[float, float]:
        x = self.env.featurize(s, a)
        key = x.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            mu, sigma = self.gp.predict(x[None, :])
            hit = (float(mu[0]), float(sigma[0]))
            self._cache[key] = hit
        return hit

    def predict(self, s, a) -> tuple[float, float]:
        mu, sigma = self.raw_predict(s, a)
        return max(0.0, mu), sigma

    def to_dict(self) -> dict[str, Any]:
        return {"env_id": self.env.env_id, "n_train": self.n_train, "gp": self.gp.to_dict()}

    @classmethod
    def from_dict(cls, env: Environment, d: dict[str, Any]) -> Mde:
        if d["env_id"] != env.env_id:
            raise ValueError(f"snapshot is for {d['env_id']!r}, not {env.env_id!r}")
        return cls(env, HeteroGpModel.from_dict(d["gp"]), int(d.get("n_train", 0)))


def label_transition(env: Environment, s, a, s_next) -> Transition:
    predicted = env.model_step(s, a)
    return Transition(s, a, s_next, predicted, float(env.distance(predicted, s_next)))


def prior_mde(env: Environment, config: GpConfig = GpConfig()) -> Mde:
    return Mde(env, prior_hetero_model(env.feature_dim, config))


def train_mde(
    env: Environment,
    dataset: MdeDataset,
    cap: int = DEFAULT_CAP,
    rng=None,
    *,
    config: GpConfig = GpConfig(),
) -> Mde:
    """Fit the MDE on at most ``cap`` uniformly subsampled transitions.

    An empty dataset yields the zero-mean prior. With fewer than four points
    the heteroscedastic fit is not identifiable, so the prior hyperparameters
    are conditioned on the data instead.
    """
    if rng is None:
        rng = stream(0, "train_mde")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if len(dataset) == 0:
        return prior_mde(env, config)
    data = subsample(dataset.to_gp_dataset(env), cap, rng)
    if data.n < 4:
        prior = prior_hetero_model(env.feature_dim, config)
        mean_gp = build_hom_model(data, prior.mean_gp.params, config.prior_noise_variance)
        return Mde(env, HeteroGpModel(mean_gp, prior.noise_gp), data.n)
    gp = fit_heteroscedastic(data, config.rounds, rng, config=config)
    return Mde(env, gp, data.n)


def mde_predict(mde: Mde, s, a) -> tuple[float, float]:
    return mde.predict(s, a)


def in_precondition(mde: Mde, s, a, params: PreconditionParams) -> bool:
    mu, sigma = mde.predict(s, a)
    return mu + params.beta * sigma < params.d_max


def beta_from_delta(delta: float) -> float:
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return float(norm.isf(delta))


__all__ = [
    "DEFAULT_CAP",
    "Mde",
    "MdeDataset",
    "PreconditionParams",
    "Transition",
    "beta_from_delta",
    "in_precondition",
    "label_transition",
    "mde_predict",
    "prior_mde",
    "train_mde",
]
