"""Exact GP regression with a Matern-5/2 ARD kernel and heteroscedastic noise.

The homoscedastic model is the usual Cholesky-based exact GP. The
heteroscedastic model couples two of them: a noise GP fitted to log squared
cross-validation residuals, and a mean GP whose diagonal noise at each
training input is ``exp(noise GP mean)``.

Hyperparameters live in log space during optimization, ordered as
``[log signal_variance, log lengthscale_1..d, log noise_variance]``; the
noise entry is absent when the dataset carries fixed per-point noise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import linalg, optimize

logger = logging.getLogger(__name__)

SQRT5 = math.sqrt(5.0)
LOG_2PI = math.log(2.0 * math.pi)
JITTERS = (1e-8, 1e-6, 1e-4)


class GpError(Exception):
    """Base class for GP failures."""


class InsufficientDataError(GpError, ValueError):
    pass


class NumericalError(GpError, ArithmeticError):
    """Covariance could not be factorized even after jitter retries."""


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# ---------------------------------------------------------------------------
# Data containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelParams:
    signal_variance: float
    lengthscales: np.ndarray
    lengthscale_bounds: tuple[float, float] = (0.05, 5.0)

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float)).copy()
        ls.setflags(write=False)
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        lo, hi = (float(b) for b in self.lengthscale_bounds)
        object.__setattr__(self, "lengthscale_bounds", (lo, hi))
        if not self.signal_variance > 0:
            raise ValueError("signal_variance must be > 0")
        if not 0 < lo <= hi:
            raise ValueError("lengthscale bounds must satisfy 0 < lower <= upper")
        if np.any(ls < lo) or np.any(ls > hi):
            raise ValueError(f"lengthscales {ls} outside bounds {(lo, hi)}")

    @property
    def dim(self) -> int:
        return len(self.lengthscales)

    def to_dict(self) -> dict[str, Any]:
        return {
            "signal_variance": self.signal_variance,
            "lengthscales": self.lengthscales.tolist(),
            "lengthscale_bounds": list(self.lengthscale_bounds),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> KernelParams:
        return cls(d["signal_variance"], np.asarray(d["lengthscales"]), tuple(d["lengthscale_bounds"]))


@dataclass(frozen=True)
class GpDataset:
    inputs: np.ndarray
    targets: np.ndarray
    per_point_noise_variance: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if x.size else x.reshape(0, 1)
        y = np.asarray(self.targets, dtype=float).reshape(-1)
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise ValueError(f"inputs {x.shape} and targets {y.shape} disagree")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", y)
        if self.per_point_noise_variance is not None:
            v = np.asarray(self.per_point_noise_variance, dtype=float).reshape(-1)
            if v.shape != y.shape or np.any(~(v > 0)):
                raise ValueError("per_point_noise_variance must have length n and be > 0")
            object.__setattr__(self, "per_point_noise_variance", v)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def take(self, idx) -> GpDataset:
        noise = None if self.per_point_noise_variance is None else self.per_point_noise_variance[idx]
        return GpDataset(self.inputs[idx], self.targets[idx], noise)

    def with_noise(self, noise: np.ndarray | None) -> GpDataset:
        return GpDataset(self.inputs, self.targets, noise)

    def to_dict(self) -> dict[str, Any]:
        return {
            "inputs": self.inputs.tolist(),
            "targets": self.targets.tolist(),
            "per_point_noise_variance": None
            if self.per_point_noise_variance is None
            else self.per_point_noise_variance.tolist(),
            "dim": self.dim,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> GpDataset:
        x = np.asarray(d["inputs"], dtype=float).reshape(-1, d["dim"])
        return cls(x, np.asarray(d["targets"], dtype=float), d.get("per_point_noise_variance"))


@dataclass(frozen=True)
class GpConfig:
    """Fitting knobs. Bounds apply in the original (not log) parameter space."""

    restarts: int = 3
    rounds: int = 5
    max_iter: int = 50
    folds: int = 5
    cv_restarts: int = 1
    cv_rounds: int = 1
    lengthscale_bounds: tuple[float, float] = (0.05, 5.0)
    signal_variance_bounds: tuple[float, float] = (1e-4, 1e2)
    noise_variance_bounds: tuple[float, float] = (1e-6, 1e1)
    eps_floor: float = 1e-6
    # prior used by empty models
    prior_signal_variance: float = 0.1
    prior_noise_variance: float = 1e-2

    def __post_init__(self):
        if self.restarts < 1 or self.rounds < 1 or self.max_iter < 1:
            raise ValueError("restarts, rounds and max_iter must be >= 1")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> GpConfig:
        d = dict(d)
        for k in ("lengthscale_bounds", "signal_variance_bounds", "noise_variance_bounds"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


# ---------------------------------------------------------------------------
# Kernel
# ---------------------------------------------------------------------------


def _matern_from_r(r: np.ndarray, signal_variance: float) -> np.ndarray:
    return signal_variance * (1.0 + SQRT5 * r + (5.0 / 3.0) * r * r) * np.exp(-SQRT5 * r)


def matern_gram(x1: np.ndarray, x2: np.ndarray, params: KernelParams) -> np.ndarray:
    """Kernel matrix between the rows of ``x1`` and ``x2``."""
    a = np.atleast_2d(np.asarray(x1, dtype=float)) / params.lengthscales
    b = np.atleast_2d(np.asarray(x2, dtype=float)) / params.lengthscales
    r2 = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    r = np.sqrt(np.maximum(r2, 0.0))
    return _matern_from_r(r, params.signal_variance)


def matern_kernel(x1, x2, params: KernelParams) -> float:
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x1.shape != (params.dim,) or x2.shape != (params.dim,):
        raise ValueError(f"expected vectors of dimension {params.dim}, got {x1.shape} and {x2.shape}")
    r = float(np.linalg.norm((x1 - x2) / params.lengthscales))
    return float(_matern_from_r(np.float64(r), params.signal_variance))


# ---------------------------------------------------------------------------
# Homoscedastic model
# ---------------------------------------------------------------------------


def _cholesky_with_jitter(cov: np.ndarray) -> tuple[np.ndarray, float]:
    try:
        return linalg.cholesky(cov, lower=True, check_finite=False), 0.0
    except linalg.LinAlgError:
        pass
    scale = max(1.0, float(np.mean(np.diag(cov))))
    for jitter in JITTERS:
        try:
            c = cov + (jitter * scale) * np.eye(cov.shape[0])
            return linalg.cholesky(c, lower=True, check_finite=False), jitter * scale
        except linalg.LinAlgError:
            continue
    raise NumericalError("covariance not positive definite after jitter retries")


@dataclass(frozen=True, eq=False)
class HomGpModel:
    """Exact GP posterior with a cached Cholesky factor.

    The diagonal noise is ``per_point_noise_variance`` when the dataset has
    it, otherwise ``noise_variance`` on every point. ``mean_offset`` is the
    constant prior mean (zero for deviation models).
    """

    dataset: GpDataset
    params: KernelParams
    noise_variance: float
    chol: np.ndarray
    alpha: np.ndarray
    mean_offset: float = 0.0
    jitter: float = 0.0

    @property
    def n(self) -> int:
        return self.dataset.n

    @property
    def dim(self) -> int:
        return self.params.dim

    def noise_diag(self) -> np.ndarray:
        if self.dataset.per_point_noise_variance is not None:
            return self.dataset.per_point_noise_variance
        return np.full(self.n, self.noise_variance)

    def predict(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Latent posterior mean and variance at the rows of ``x``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            raise ValueError(f"query dimension {x.shape[1]} != model dimension {self.dim}")
        if self.n == 0:
            m = x.shape[0]
            return np.full(m, self.mean_offset), np.full(m, self.params.signal_variance)
        ks = matern_gram(self.dataset.inputs, x, self.params)
        mu = self.mean_offset + ks.T @ self.alpha
        v = linalg.solve_triangular(self.chol, ks, lower=True, check_finite=False)
        var = self.params.signal_variance - np.einsum("ij,ij->j", v, v)
        return mu, np.maximum(var, 0.0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "dataset": self.dataset.to_dict(),
            "params": self.params.to_dict(),
            "noise_variance": self.noise_variance,
            "mean_offset": self.mean_offset,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> HomGpModel:
        return build_hom_model(
            GpDataset.from_dict(d["dataset"]),
            KernelParams.from_dict(d["params"]),
            d["noise_variance"],
            d.get("mean_offset", 0.0),
        )


def build_hom_model(
    dataset: GpDataset, params: KernelParams, noise_variance: float, mean_offset: float = 0.0
) -> HomGpModel:
    """Factorize ``K + noise`` for fixed hyperparameters."""
    if dataset.n and dataset.dim != params.dim:
        raise ValueError("dataset and kernel dimensions differ")
    if not noise_variance > 0:
        raise ValueError("noise_variance must be > 0")
    n = dataset.n
    if n == 0:
        return HomGpModel(dataset, params, float(noise_variance), np.zeros((0, 0)), np.zeros(0), float(mean_offset))
    noise = dataset.per_point_noise_variance if dataset.per_point_noise_variance is not None else noise_variance
    cov = matern_gram(dataset.inputs, dataset.inputs, params)
    cov[np.diag_indices(n)] += noise
    chol, jitter = _cholesky_with_jitter(cov)
    alpha = linalg.cho_solve((chol, True), dataset.targets - mean_offset, check_finite=False)
    return HomGpModel(dataset, params, float(noise_variance), chol, alpha, float(mean_offset), jitter)


def empty_hom_model(dim: int, config: GpConfig = GpConfig(), mean_offset: float = 0.0) -> HomGpModel:
    lo, hi = config.lengthscale_bounds
    ls = np.full(dim, min(max(1.0, lo), hi))
    params = KernelParams(config.prior_signal_variance, ls, config.lengthscale_bounds)
    return build_hom_model(GpDataset(np.zeros((0, dim)), np.zeros(0)), params, config.prior_noise_variance, mean_offset)


def log_marginal_likelihood(model: HomGpModel) -> float:
    n = model.n
    if n == 0:
        return 0.0
    y = model.dataset.targets - model.mean_offset
    return float(-0.5 * y @ model.alpha - np.log(np.diag(model.chol)).sum() - 0.5 * n * LOG_2PI)


def predict_hom(model: HomGpModel, x) -> tuple[float, float]:
    mu, var = model.predict(np.asarray(x, dtype=float).reshape(1, -1))
    return float(mu[0]), float(var[0])


# ---------------------------------------------------------------------------
# LML and analytic gradient in log-parameter space
# ---------------------------------------------------------------------------


class _LmlObjective:
    """Negative LML and its gradient for one dataset, with cached distances."""

    def __init__(self, dataset: GpDataset, mean_offset: float):
        self.x = dataset.inputs
        self.y = dataset.targets - mean_offset
        self.fixed_noise = dataset.per_point_noise_variance
        self.n, self.d = self.x.shape
        diff = self.x[:, None, :] - self.x[None, :, :]
        self.sqdiff = np.ascontiguousarray(np.moveaxis(diff * diff, 2, 0))  # (d, n, n)
        self.n_params = 1 + self.d + (0 if self.fixed_noise is not None else 1)

    def lml_grad(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        sf2 = math.exp(theta[0])
        ls2 = np.exp(2.0 * theta[1 : 1 + self.d])
        r2 = np.tensordot(1.0 / ls2, self.sqdiff, axes=1)
        r = np.sqrt(r2)
        e = np.exp(-SQRT5 * r)
        k = sf2 * (1.0 + SQRT5 * r + (5.0 / 3.0) * r2) * e
        cov = k.copy()
        if self.fixed_noise is not None:
            cov[np.diag_indices(self.n)] += self.fixed_noise
        else:
            sn2 = math.exp(theta[1 + self.d])
            cov[np.diag_indices(self.n)] += sn2
        chol, _ = _cholesky_with_jitter(cov)
        alpha = linalg.cho_solve((chol, True), self.y, check_finite=False)
        lml = -0.5 * self.y @ alpha - np.log(np.diag(chol)).sum() - 0.5 * self.n * LOG_2PI
        cinv, info = linalg.lapack.dpotri(chol, lower=1)
        if info != 0:
            raise NumericalError(f"dpotri failed with info={info}")
        cinv = np.tril(cinv) + np.tril(cinv, -1).T
        w = np.outer(alpha, alpha) - cinv
        grad = np.empty(self.n_params)
        grad[0] = 0.5 * np.einsum("ij,ij->", w, k)
        g = (5.0 / 3.0) * sf2 * (1.0 + SQRT5 * r) * e
        grad[1 : 1 + self.d] = 0.5 * np.einsum("ij,dij->d", w * g, self.sqdiff) / ls2
        if self.fixed_noise is None:
            grad[1 + self.d] = 0.5 * np.trace(w) * sn2
        return float(lml), grad


def lml_gradient(model: HomGpModel) -> tuple[float, np.ndarray]:
    """LML and its gradient w.r.t. the model's log hyperparameters."""
    obj = _LmlObjective(model.dataset, model.mean_offset)
    return obj.lml_grad(_pack(model.params, model.noise_variance, obj.fixed_noise is None))


def _pack(params: KernelParams, noise_variance: float, with_noise: bool) -> np.ndarray:
    parts = [math.log(params.signal_variance), *np.log(params.lengthscales)]
    if with_noise:
        parts.append(math.log(noise_variance))
    return np.asarray(parts, dtype=float)


def _log_bounds(config: GpConfig, d: int, with_noise: bool) -> np.ndarray:
    b = [np.log(config.signal_variance_bounds)] + [np.log(config.lengthscale_bounds)] * d
    if with_noise:
        b.append(np.log(config.noise_variance_bounds))
    return np.asarray(b, dtype=float)


def _optimize_block(obj: _LmlObjective, theta: np.ndarray, block: np.ndarray, bounds: np.ndarray, max_iter: int):
    def f(sub):
        full = theta.copy()
        full[block] = sub
        try:
            lml, g = obj.lml_grad(full)
        except NumericalError:
            return 1e25, np.zeros(len(sub))
        return -lml, -g[block]

    res = optimize.minimize(
        f, theta[block], jac=True, method="L-BFGS-B", bounds=bounds[block], options={"maxiter": max_iter}
    )
    out = theta.copy()
    out[block] = np.clip(res.x, bounds[block, 0], bounds[block, 1])
    return out


def _initial_theta(dataset: GpDataset, mean_offset: float, bounds: np.ndarray, with_noise: bool) -> np.ndarray:
    y = dataset.targets - mean_offset
    sf2 = max(float(np.mean(y * y)), 1e-3)
    theta = [math.log(sf2)] + [math.log(0.5)] * dataset.dim
    if with_noise:
        theta.append(math.log(0.1 * sf2))
    return np.clip(np.asarray(theta), bounds[:, 0], bounds[:, 1])


def fit_homoscedastic(
    dataset: GpDataset,
    restarts: int = 3,
    rounds: int = 5,
    rng=None,
    *,
    config: GpConfig = GpConfig(),
    constant_mean: bool = False,
    init: HomGpModel | None = None,
) -> HomGpModel:
    """Maximize the LML by multi-start alternating optimization.

    Each round optimizes the kernel block (signal variance, lengthscales)
    with the noise fixed, then the noise with the kernel fixed. Restart 0
    starts from a data-driven guess (or ``init``), the rest from points drawn
    log-uniformly inside the bounds. With ``constant_mean`` the prior mean is
    the empirical target mean instead of zero.
    """
    if dataset.n < 2:
        raise InsufficientDataError(f"need at least 2 points, got {dataset.n}")
    if not np.all(np.isfinite(dataset.targets)):
        raise ValueError("targets must be finite")
    rng = _as_rng(rng)
    mean_offset = float(np.mean(dataset.targets)) if constant_mean else 0.0
    with_noise = dataset.per_point_noise_variance is None
    obj = _LmlObjective(dataset, mean_offset)
    bounds = _log_bounds(config, dataset.dim, with_noise)
    kernel_block = np.arange(1 + dataset.dim)
    noise_block = np.array([1 + dataset.dim]) if with_noise else None

    starts = []
    if init is not None:
        starts.append(np.clip(_pack(init.params, init.noise_variance, with_noise), bounds[:, 0], bounds[:, 1]))
    else:
        starts.append(_initial_theta(dataset, mean_offset, bounds, with_noise))
    for _ in range(restarts - 1):
        starts.append(rng.uniform(bounds[:, 0], bounds[:, 1]))

    best_theta, best_lml = None, -np.inf
    for theta in starts:
        for _ in range(rounds):
            theta = _optimize_block(obj, theta, kernel_block, bounds, config.max_iter)
            if noise_block is not None:
                theta = _optimize_block(obj, theta, noise_block, bounds, config.max_iter)
        try:
            lml, _ = obj.lml_grad(theta)
        except NumericalError:
            continue
        if lml > best_lml:
            best_theta, best_lml = theta, lml
    if best_theta is None:
        raise NumericalError("every restart failed to factorize")

    d = dataset.dim
    params = KernelParams(
        math.exp(best_theta[0]),
        np.clip(np.exp(best_theta[1 : 1 + d]), *config.lengthscale_bounds),
        config.lengthscale_bounds,
    )
    if with_noise:
        noise_variance = math.exp(best_theta[1 + d])
    else:
        noise_variance = float(np.mean(dataset.per_point_noise_variance))
    return build_hom_model(dataset, params, noise_variance, mean_offset)


# ---------------------------------------------------------------------------
# Heteroscedastic model
# ---------------------------------------------------------------------------


def cv_noise_targets(dataset: GpDataset, folds: int = 5, rng=None, *, config: GpConfig = GpConfig()) -> np.ndarray:
    """Log squared held-out residuals of a homoscedastic GP, one per point."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if dataset.n < folds:
        raise ValueError(f"n = {dataset.n} is smaller than folds = {folds}")
    rng = _as_rng(rng)
    base = dataset.with_noise(None)
    order = rng.permutation(dataset.n)
    out = np.empty(dataset.n)
    for held in np.array_split(order, folds):
        keep = np.setdiff1d(order, held)
        model = fit_homoscedastic(
            base.take(np.sort(keep)), config.cv_restarts, config.cv_rounds, rng, config=config
        )
        mu, _ = model.predict(base.inputs[held])
        resid2 = (base.targets[held] - mu) ** 2
        out[held] = np.log(np.maximum(resid2, config.eps_floor))
    return out


@dataclass(frozen=True, eq=False)
class HeteroGpModel:
    mean_gp: HomGpModel
    noise_gp: HomGpModel
    prior_mean: float = 0.0
    noise_targets: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.mean_gp.dim

    @property
    def n(self) -> int:
        return self.mean_gp.n

    def noise_variance(self, x: np.ndarray) -> np.ndarray:
        log_noise, _ = self.noise_gp.predict(x)
        return np.exp(log_noise)

    def predict(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Mean and total (latent + noise) standard deviation at the rows of ``x``."""
        mu, var = self.mean_gp.predict(x)
        return mu, np.sqrt(var + self.noise_variance(x))

    def to_dict(self) -> dict[str, Any]:
        return {
            "mean_gp": self.mean_gp.to_dict(),
            "noise_gp": self.noise_gp.to_dict(),
            "prior_mean": self.prior_mean,
            "noise_targets": None if self.noise_targets is None else self.noise_targets.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> HeteroGpModel:
        nt = d.get("noise_targets")
        return cls(
            HomGpModel.from_dict(d["mean_gp"]),
            HomGpModel.from_dict(d["noise_gp"]),
            d.get("prior_mean", 0.0),
            None if nt is None else np.asarray(nt, dtype=float),
        )


def prior_hetero_model(dim: int, config: GpConfig = GpConfig()) -> HeteroGpModel:
    """The untrained model: mean 0, variance ``prior_signal + prior_noise``."""
    mean_gp = empty_hom_model(dim, config)
    noise_gp = empty_hom_model(dim, config, mean_offset=math.log(config.prior_noise_variance))
    return HeteroGpModel(mean_gp, noise_gp)


def fit_heteroscedastic(dataset: GpDataset, rounds: int = 5, rng=None, *, config: GpConfig = GpConfig()) -> HeteroGpModel:
    """Fit the noise GP on CV residuals, then the mean GP with per-point noise.

    CV residual extraction runs once. Round 0 fits both GPs with
    ``config.restarts`` starts; each later round re-optimizes both from the
    previous hyperparameters and refreshes the per-point noise.
    """
    if dataset.n < 4:
        raise InsufficientDataError(f"need at least 4 points, got {dataset.n}")
    rng = _as_rng(rng)
    folds = min(config.folds, dataset.n)
    z = cv_noise_targets(dataset, folds, rng, config=config)
    noise_ds = GpDataset(dataset.inputs, z)
    lo, hi = config.noise_variance_bounds

    noise_gp = mean_gp = None
    for r in range(rounds):
        restarts = config.restarts if r == 0 else 1
        noise_gp = fit_homoscedastic(noise_ds, restarts, 1, rng, config=config, constant_mean=True, init=noise_gp)
        log_noise, _ = noise_gp.predict(dataset.inputs)
        per_point = np.clip(np.exp(log_noise), config.eps_floor, hi)
        mean_gp = fit_homoscedastic(dataset.with_noise(per_point), restarts, 1, rng, config=config, init=mean_gp)
    return HeteroGpModel(mean_gp, noise_gp, 0.0, z)


def predict_hetero(model: HeteroGpModel, x) -> tuple[float, float]:
    mu, sigma = model.predict(np.asarray(x, dtype=float).reshape(1, -1))
    return float(mu[0]), float(sigma[0])


def subsample(dataset: GpDataset, cap: int, rng=None) -> GpDataset:
    """Uniform row subset of size ``cap`` without replacement (order preserved)."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if dataset.n <= cap:
        return dataset
    idx = np.sort(_as_rng(rng).choice(dataset.n, size=cap, replace=False))
    return dataset.take(idx)


def replace_params(model: HomGpModel, **changes) -> HomGpModel:
    """Rebuild ``model`` with some fields changed (params, noise_variance, ...)."""
    params = changes.pop("params", model.params)
    noise = changes.pop("noise_variance", model.noise_variance)
    dataset = changes.pop("dataset", model.dataset)
    offset = changes.pop("mean_offset", model.mean_offset)
    if changes:
        raise TypeError(f"unexpected fields {sorted(changes)}")
    return build_hom_model(dataset, params, noise, offset)


__all__ = [
    "GpConfig",
    "GpDataset",
    "GpError",
    "HeteroGpModel",
    "HomGpModel",
    "InsufficientDataError",
    "KernelParams",
    "NumericalError",
    "build_hom_model",
    "cv_noise_targets",
    "empty_hom_model",
    "fit_heteroscedastic",
    "fit_homoscedastic",
    "log_marginal_likelihood",
    "lml_gradient",
    "matern_gram",
    "matern_kernel",
    "predict_hetero",
    "predict_hom",
    "prior_hetero_model",
    "subsample",
]
