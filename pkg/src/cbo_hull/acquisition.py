"""Constrained expected-improvement acquisition and its two-stage maximizer.

For minimization with incumbent best value f+, the improvement-based
acquisition at a candidate with posterior (mu, sigma) is

    EI = (f+ - mu) * Phi(z) + sigma * phi(z),   z = (f+ - mu) / sigma

and the probability that the constraint posterior (mu_g, sigma_g) lands at
or below zero is PF = Phi(-mu_g / sigma_g).  The joint acquisition is their
product EI_C = PF * EI.  The maximizer scatters seeded Monte Carlo samples
over the unit box, then polishes the best few with bound-constrained
quasi-Newton refinement using central-difference gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtr

from .gp import GpModel, PosteriorPrediction, posterior_batch

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class AcquisitionConfig:
    """Settings for the two-stage acquisition maximization."""

    mc_samples: int = 2048       # stage-1 uniform samples over the unit box
    refine_starts: int = 10      # stage-2 quasi-Newton polish starts
    fd_step: float = 1e-5        # central-difference step, normalized units
    max_refine_iters: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.mc_samples >= self.refine_starts >= 1:
            raise ValueError("need mc_samples >= refine_starts >= 1")
        if not 0.0 < self.fd_step < 1e-2:
            raise ValueError("fd_step must lie in (0, 1e-2)")
        if self.max_refine_iters < 1:
            raise ValueError("max_refine_iters must be positive")


@dataclass(frozen=True)
class CandidateResult:
    """Chosen candidate in normalized coordinates with its acquisition parts."""

    point: np.ndarray
    ei_c: float
    ei: float
    pf: float


def _ei_array(mean: np.ndarray, std: np.ndarray, best: float) -> np.ndarray:
    gap = best - mean
    out = np.maximum(gap, 0.0)
    positive = std > 0.0
    z = np.divide(gap, std, out=np.zeros_like(gap), where=positive)
    smooth = gap * ndtr(z) + std * _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    out = np.where(positive, smooth, out)
    return np.maximum(out, 0.0)


def _pf_array(mean_g: np.ndarray, std_g: np.ndarray) -> np.ndarray:
    positive = std_g > 0.0
    z = np.divide(-mean_g, std_g, out=np.zeros_like(mean_g), where=positive)
    return np.where(positive, ndtr(z), (mean_g <= 0.0).astype(float))


def expected_improvement(mean: float, std: float, best: float) -> float:
    """Closed-form EI of a Gaussian posterior over incumbent `best` (minimization)."""
    if not (math.isfinite(mean) and math.isfinite(best)):
        raise ValueError("mean and best must be finite")
    if not (math.isfinite(std) and std >= 0.0):
        raise ValueError(f"std must be a finite nonnegative real, got {std}")
    if std == 0.0:
        return max(0.0, best - mean)
    return float(_ei_array(np.asarray([mean]), np.asarray([std]), best)[0])


def probability_feasible(mean_g: float, std_g: float) -> float:
    """Probability that the constraint posterior is <= 0."""
    if not math.isfinite(mean_g):
        raise ValueError("mean_g must be finite")
    if not (math.isfinite(std_g) and std_g >= 0.0):
        raise ValueError(f"std_g must be a finite nonnegative real, got {std_g}")
    if std_g == 0.0:
        return 1.0 if mean_g <= 0.0 else 0.0
    return float(ndtr(-mean_g / std_g))


def constrained_ei(
    f_pred: PosteriorPrediction,
    g_pred: PosteriorPrediction,
    best_feasible: float,
) -> tuple[float, float, float]:
    """(ei, pf, ei_c) for one candidate.

    With no feasible incumbent yet (best_feasible = +inf), EI saturates to 1
    and the acquisition reduces to the probability of feasibility alone.
    """
    pf = probability_feasible(g_pred.mean, math.sqrt(max(g_pred.variance, 0.0)))
    if math.isinf(best_feasible):
        ei = 1.0
    else:
        ei = expected_improvement(f_pred.mean, math.sqrt(max(f_pred.variance, 0.0)), best_feasible)
    return ei, pf, ei * pf


def _acquisition_values(
    f_model: GpModel, g_model: GpModel, best: float, X: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    f_mean, f_var = posterior_batch(f_model, X)
    g_mean, g_var = posterior_batch(g_model, X)
    pf = _pf_array(g_mean, np.sqrt(g_var))
    if math.isinf(best):
        ei = np.ones_like(pf)
    else:
        ei = _ei_array(f_mean, np.sqrt(f_var), best)
    return ei, pf, ei * pf


def maximize_acquisition(
    f_model: GpModel,
    g_model: GpModel,
    best_feasible: float,
    cfg: AcquisitionConfig = AcquisitionConfig(),
) -> CandidateResult:
    """Maximize EI_C over the unit hypercube; deterministic for a given seed.

    Stage 1 scores `mc_samples` seeded uniform points; stage 2 refines the
    `refine_starts` best of them with L-BFGS-B inside the box, gradients by
    central finite differences clamped to the box.  If the acquisition is
    numerically zero at every sample, falls back to the sampled point with
    the highest feasibility probability (pure exploration of feasibility).
    """
    dim = f_model.dim
    if g_model.dim != dim:
        raise ValueError("objective and constraint models disagree on dimension")

    rng = np.random.default_rng(cfg.seed)
    samples = rng.random((cfg.mc_samples, dim))
    ei, pf, ei_c = _acquisition_values(f_model, g_model, best_feasible, samples)

    if not np.any(ei_c > 0.0):
        idx = int(np.argmax(pf))  # argmax takes the lowest index on ties
        return CandidateResult(point=samples[idx].copy(), ei_c=0.0, ei=float(ei[idx]), pf=float(pf[idx]))

    def neg_ei_c(u: np.ndarray) -> float:
        return -float(_acquisition_values(f_model, g_model, best_feasible, u[None, :])[2][0])

    def neg_grad(u: np.ndarray) -> np.ndarray:
        lo = np.maximum(u - cfg.fd_step, 0.0)
        hi = np.minimum(u + cfg.fd_step, 1.0)
        pts = np.repeat(u[None, :], 2 * dim, axis=0)
        for j in range(dim):
            pts[2 * j, j] = hi[j]
            pts[2 * j + 1, j] = lo[j]
        vals = _acquisition_values(f_model, g_model, best_feasible, pts)[2]
        return -(vals[0::2] - vals[1::2]) / (hi - lo)

    order = np.argsort(-ei_c, kind="stable")[: cfg.refine_starts]
    best_idx = int(order[0])
    best_point = samples[best_idx].copy()
    best_val = float(ei_c[best_idx])
    for start in order:
        res = minimize(
            neg_ei_c,
            samples[start],
            jac=neg_grad,
            method="L-BFGS-B",
            bounds=[(0.0, 1.0)] * dim,
            options={"maxiter": cfg.max_refine_iters},
        )
        val = -float(res.fun)
        if val > best_val:
            best_val = val
            best_point = np.clip(res.x, 0.0, 1.0)

    ei_b, pf_b, ei_c_b = _acquisition_values(f_model, g_model, best_feasible, best_point[None, :])
    return CandidateResult(
        point=best_point,
        ei_c=float(ei_c_b[0]),
        ei=float(ei_b[0]),
        pf=float(pf_b[0]),
    )
