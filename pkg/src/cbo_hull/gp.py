"""Gaussian process regression with a Matérn 5/2 ARD kernel.

Models are trained on inputs normalized to the unit hypercube and on
internally z-scored targets; predictions are returned in the original
target units.  Hyperparameters are selected by maximizing the log marginal
likelihood with a multi-restart bounded quasi-Newton search in
log-hyperparameter space, using analytic gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .errors import NumericalError

_SQRT5 = math.sqrt(5.0)
_LOG_2PI = math.log(2.0 * math.pi)

#: Relative diagonal jitter: starting value and escalation cap.
JITTER_START = 1e-10
JITTER_MAX = 1e-4


@dataclass(frozen=True)
class KernelHyperparams:
    """Matérn 5/2 kernel parameterization with per-dimension lengthscales."""

    signal_variance: float     # output variance, standardized units^2
    lengthscales: np.ndarray   # (d,) positive, normalized-input units
    noise_variance: float      # observation noise, standardized units^2

    def __post_init__(self) -> None:
        object.__setattr__(self, "lengthscales", np.atleast_1d(np.asarray(self.lengthscales, dtype=float)))
        if not (np.isfinite(self.signal_variance) and self.signal_variance > 0):
            raise ValueError(f"signal_variance must be positive, got {self.signal_variance}")
        if self.lengthscales.ndim != 1 or not np.all(np.isfinite(self.lengthscales)) or np.any(self.lengthscales <= 0):
            raise ValueError("lengthscales must be a vector of positive reals")
        if not (np.isfinite(self.noise_variance) and self.noise_variance >= 0):
            raise ValueError(f"noise_variance must be nonnegative, got {self.noise_variance}")

    @property
    def dim(self) -> int:
        return self.lengthscales.size


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameter search settings for :func:`fit`."""

    restarts: int = 8                  # random restarts beyond the heuristic start
    seed: int = 0
    lengthscale_bounds: tuple[float, float] = (1e-2, 1e2)
    signal_bounds: tuple[float, float] = (1e-3, 1e3)
    noise_bounds: tuple[float, float] = (1e-8, 1e-1)
    fixed_noise: float | None = None   # pin noise_variance instead of fitting it
    max_iters: int = 100

    def __post_init__(self) -> None:
        if self.restarts < 0:
            raise ValueError("restarts must be nonnegative")
        for name in ("lengthscale_bounds", "signal_bounds", "noise_bounds"):
            lo, hi = getattr(self, name)
            if not 0 < lo < hi:
                raise ValueError(f"{name} must satisfy 0 < lo < hi")
        if self.fixed_noise is not None and self.fixed_noise < 0:
            raise ValueError("fixed_noise must be nonnegative")


@dataclass(frozen=True)
class GpModel:
    """Trained GP: data, hyperparameters, and the Cholesky solve state.

    Immutable after fit; safe to query concurrently.  `chol_factor` is the
    lower factor of K + (noise + jitter) I over the standardized targets, and
    `alpha` solves that system against `targets - prior_mean`.  `target_shift`
    and `target_scale` map standardized model outputs back to raw units.
    """

    inputs: np.ndarray        # (N, d) normalized design points
    targets: np.ndarray       # (N,) standardized outputs
    hyperparams: KernelHyperparams
    chol_factor: np.ndarray   # (N, N) lower triangular
    alpha: np.ndarray         # (N,)
    prior_mean: float         # standardized units
    target_shift: float
    target_scale: float
    jitter: float             # diagonal jitter actually applied

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class PosteriorPrediction:
    """Posterior mean and variance at a query point, in raw output units."""

    mean: float
    variance: float


def _scaled_sq_dists(X: np.ndarray, X2: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - X2[None, :, :]
    return np.sum((diff / lengthscales) ** 2, axis=-1)


def _matern52(sq_dist: np.ndarray, signal_variance: float) -> np.ndarray:
    d = np.sqrt(np.maximum(sq_dist, 0.0))
    return signal_variance * (1.0 + _SQRT5 * d + (5.0 / 3.0) * sq_dist) * np.exp(-_SQRT5 * d)


def kernel_eval(x: np.ndarray, x2: np.ndarray, hp: KernelHyperparams) -> float:
    """Matérn 5/2 covariance between two points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != (hp.dim,) or x2.shape != (hp.dim,):
        raise ValueError(f"points must have dimension {hp.dim}")
    sq = float(np.sum(((x - x2) / hp.lengthscales) ** 2))
    return float(_matern52(np.asarray(sq), hp.signal_variance))


def kernel_matrix(X: np.ndarray, X2: np.ndarray, hp: KernelHyperparams) -> np.ndarray:
    """Cross-covariance matrix between two point sets."""
    return _matern52(_scaled_sq_dists(X, X2, hp.lengthscales), hp.signal_variance)


def _chol_with_jitter(K_noisy: np.ndarray, signal_variance: float) -> tuple[np.ndarray, float]:
    eye = np.eye(K_noisy.shape[0])
    jitter = JITTER_START * signal_variance
    cap = JITTER_MAX * signal_variance
    while True:
        try:
            return cholesky(K_noisy + jitter * eye, lower=True), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > cap * (1.0 + 1e-12):
                raise NumericalError(
                    f"Cholesky failed with jitter escalated to {cap:g}"
                ) from None


def _standardize(y: np.ndarray) -> tuple[np.ndarray, float, float]:
    shift = float(np.mean(y))
    scale = float(np.std(y))
    if not scale > 1e-12:
        scale = 1.0
    return (y - shift) / scale, shift, scale


def build_model(X: np.ndarray, y: np.ndarray, hp: KernelHyperparams) -> GpModel:
    """Assemble a model from explicit hyperparameters (no likelihood search)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size or X.shape[0] < 1:
        raise ValueError("X rows and y length must match and be >= 1")
    if X.shape[1] != hp.dim:
        raise ValueError(f"X has dimension {X.shape[1]}, hyperparams expect {hp.dim}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("inputs and targets must be finite")

    t, shift, scale = _standardize(y)
    prior_mean = float(np.mean(t))
    K = kernel_matrix(X, X, hp) + hp.noise_variance * np.eye(X.shape[0])
    L, jitter = _chol_with_jitter(K, hp.signal_variance)
    alpha = cho_solve((L, True), t - prior_mean)
    return GpModel(
        inputs=X,
        targets=t,
        hyperparams=hp,
        chol_factor=L,
        alpha=alpha,
        prior_mean=prior_mean,
        target_shift=shift,
        target_scale=scale,
        jitter=jitter,
    )


def posterior(model: GpModel, x: np.ndarray) -> PosteriorPrediction:
    """Posterior mean/variance at one point via the stored Cholesky factor."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (model.dim,):
        raise ValueError(f"query point must have dimension {model.dim}")
    means, variances = posterior_batch(model, x[None, :])
    return PosteriorPrediction(mean=float(means[0]), variance=float(variances[0]))


def posterior_batch(model: GpModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means/variances over rows of X, in raw output units."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.dim:
        raise ValueError(f"query points must have dimension {model.dim}")
    hp = model.hyperparams
    k_star = kernel_matrix(X, model.inputs, hp)            # (M, N)
    mean = model.prior_mean + k_star @ model.alpha
    v = solve_triangular(model.chol_factor, k_star.T, lower=True)
    var = hp.signal_variance - np.sum(v * v, axis=0)
    np.clip(var, 0.0, hp.signal_variance + hp.noise_variance, out=var)
    return model.target_shift + model.target_scale * mean, model.target_scale**2 * var


def log_marginal_likelihood(model: GpModel) -> float:
    """Log marginal likelihood of the stored (standardized, centered) targets."""
    t = model.targets - model.prior_mean
    n = t.size
    return float(
        -0.5 * t @ model.alpha
        - np.sum(np.log(np.diag(model.chol_factor)))
        - 0.5 * n * _LOG_2PI
    )


def _nll_and_grad(
    log_theta: np.ndarray,
    X: np.ndarray,
    t: np.ndarray,
    fixed_noise: float | None,
) -> tuple[float, np.ndarray]:
    """Negative LML and its gradient w.r.t. log hyperparameters.

    Layout of log_theta: [log signal, log lengthscale_1..d, (log noise)].
    """
    n, d = X.shape
    signal = math.exp(log_theta[0])
    lengthscales = np.exp(log_theta[1 : 1 + d])
    noise = fixed_noise if fixed_noise is not None else math.exp(log_theta[1 + d])

    diff = X[:, None, :] - X[None, :, :]
    rho2 = (diff / lengthscales) ** 2                     # (n, n, d)
    sq = rho2.sum(axis=-1)
    dist = np.sqrt(np.maximum(sq, 0.0))
    expo = np.exp(-_SQRT5 * dist)
    K = signal * (1.0 + _SQRT5 * dist + (5.0 / 3.0) * sq) * expo

    Kn = K + (noise + JITTER_START * signal) * np.eye(n)
    try:
        L = cholesky(Kn, lower=True)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros_like(log_theta)

    alpha = cho_solve((L, True), t)
    nll = 0.5 * t @ alpha + np.sum(np.log(np.diag(L))) + 0.5 * n * _LOG_2PI

    # dLML/dtheta_j = 0.5 tr(W dK/dtheta_j) with W = alpha alpha^T - Kn^{-1}
    W = np.outer(alpha, alpha) - cho_solve((L, True), np.eye(n))
    grad = np.empty_like(log_theta)
    dK_dlogsignal = K + JITTER_START * signal * np.eye(n)
    grad[0] = -0.5 * np.sum(W * dK_dlogsignal)
    base = (5.0 / 3.0) * signal * (1.0 + _SQRT5 * dist) * expo
    for j in range(d):
        grad[1 + j] = -0.5 * np.sum(W * (base * rho2[:, :, j]))
    if fixed_noise is None:
        grad[1 + d] = -0.5 * noise * np.trace(W)
    return float(nll), grad


def fit(X: np.ndarray, y: np.ndarray, cfg: FitConfig = FitConfig()) -> GpModel:
    """Fit hyperparameters by maximum marginal likelihood and build the model.

    Runs a heuristic start plus `cfg.restarts` seeded random restarts of
    L-BFGS-B in log space; the best final likelihood wins, ties broken by
    start order.  Deterministic for a given seed.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size or X.shape[0] < 1:
        raise ValueError("X rows and y length must match and be >= 1")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("inputs and targets must be finite")
    d = X.shape[1]

    t, shift, scale = _standardize(y)
    prior_mean = float(np.mean(t))
    t_centered = t - prior_mean

    log_bounds = [tuple(np.log(cfg.signal_bounds))]
    log_bounds += [tuple(np.log(cfg.lengthscale_bounds))] * d
    if cfg.fixed_noise is None:
        log_bounds.append(tuple(np.log(cfg.noise_bounds)))
    lo = np.array([b[0] for b in log_bounds])
    hi = np.array([b[1] for b in log_bounds])

    start = np.concatenate(
        [[0.0], np.full(d, math.log(0.5)), [] if cfg.fixed_noise is not None else [math.log(1e-4)]]
    )
    rng = np.random.default_rng(cfg.seed)
    starts = [np.clip(start, lo, hi)]
    for _ in range(cfg.restarts):
        starts.append(rng.uniform(lo, hi))

    best_nll = np.inf
    best_theta = starts[0]
    for theta0 in starts:
        res = minimize(
            _nll_and_grad,
            theta0,
            args=(X, t_centered, cfg.fixed_noise),
            method="L-BFGS-B",
            jac=True,
            bounds=log_bounds,
            options={"maxiter": cfg.max_iters},
        )
        if res.fun < best_nll:
            best_nll = res.fun
            best_theta = res.x
    if not np.isfinite(best_nll):
        raise NumericalError("hyperparameter search failed at every start")

    hp = KernelHyperparams(
        signal_variance=math.exp(best_theta[0]),
        lengthscales=np.exp(best_theta[1 : 1 + d]),
        noise_variance=cfg.fixed_noise if cfg.fixed_noise is not None else math.exp(best_theta[1 + d]),
    )
    model = build_model(X, y, hp)
    return model
