"""Validation harness: synthetic constrained benchmark and baselines.

The synthetic problem minimizes f(x, y) = cos(2x) cos(y) + sin(x) subject
to cos(x) cos(y) - sin(x) sin(y) <= 0.5 over [0, 6]^2 -- a smooth
multimodal objective with a disconnected feasible set, cheap enough to
brute-force for an oracle optimum.  The harness pits the constrained-BO
loop against uniform random search on paired seeds and reports per-seed
best values and convergence speed.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from . import gp
from .acquisition import AcquisitionConfig, maximize_acquisition
from .evaluator import FlowConditions
from .loop import (
    _STREAM_ACQ,
    _STREAM_FIT_F,
    _STREAM_FIT_G,
    _STREAM_INIT,
    BackendSpec,
    RunLog,
    derived_seed,
    run_optimization,
)
from .presets import preset_config

SYNTH_LO = np.array([0.0, 0.0])
SYNTH_HI = np.array([6.0, 6.0])

SUITES = ("synthetic2d", "proxy-hull")

SUMMARY_COLUMNS = "suite,method,seed,best_value,iters_to_2pct,feasible_found"


def synthetic_objective(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.cos(2.0 * x[..., 0]) * np.cos(x[..., 1]) + np.sin(x[..., 0])


def synthetic_margin(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.cos(x[..., 0]) * np.cos(x[..., 1]) - np.sin(x[..., 0]) * np.sin(x[..., 1]) - 0.5


def synthetic_grid_optimum(resolution: int = 500) -> tuple[float, np.ndarray]:
    """Brute-force constrained minimum over a dense grid (the oracle)."""
    g1 = np.linspace(SYNTH_LO[0], SYNTH_HI[0], resolution)
    g2 = np.linspace(SYNTH_LO[1], SYNTH_HI[1], resolution)
    xx, yy = np.meshgrid(g1, g2, indexing="ij")
    points = np.stack([xx, yy], axis=-1)
    values = synthetic_objective(points)
    feasible = synthetic_margin(points) <= 0.0
    values = np.where(feasible, values, np.inf)
    idx = np.unravel_index(np.argmin(values), values.shape)
    return float(values[idx]), points[idx]


@dataclass(frozen=True)
class BenchmarkResult:
    """Outcome of one optimizer run on one seed."""

    suite: str
    method: str
    seed: int
    best_value: float            # nan when nothing feasible was found
    iters_to_2pct: int           # first record index (1-based) within 2% of final best
    feasible_found: bool


def running_best(values: np.ndarray, feasible: np.ndarray) -> list[float | None]:
    best: list[float | None] = []
    current: float | None = None
    for v, ok in zip(values, feasible):
        if ok and (current is None or v < current):
            current = float(v)
        best.append(current)
    return best


def iterations_to_within(best_trace: list[float | None], fraction: float = 0.02) -> int:
    """1-based index where the running best first comes within `fraction` of its
    final value; 0 when there is no feasible final value."""
    final = best_trace[-1] if best_trace else None
    if final is None:
        return 0
    threshold = final + abs(final) * fraction
    for i, v in enumerate(best_trace):
        if v is not None and v <= threshold:
            return i + 1
    return len(best_trace)


def run_synthetic_bo(
    seed: int,
    budget: int = 50,
    init_samples: int = 8,
    acquisition: AcquisitionConfig = AcquisitionConfig(),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Constrained BO on the synthetic problem.

    Returns (points, values, margins) for all evaluated designs, in order.
    The objective is always evaluated directly (it is free to compute), so no
    infeasibility heuristic applies here.
    """
    dim = 2
    lhs = qmc.LatinHypercube(
        d=dim, seed=np.random.default_rng(derived_seed(seed, 0, _STREAM_INIT))
    ).random(init_samples)

    points: list[np.ndarray] = [u for u in lhs]
    X_phys = SYNTH_LO + np.vstack(points) * (SYNTH_HI - SYNTH_LO)
    values = list(synthetic_objective(X_phys))
    margins = list(synthetic_margin(X_phys))

    while len(points) < budget:
        iteration = len(points)
        X = np.vstack(points)
        f_model = gp.fit(X, np.array(values), gp.FitConfig(seed=derived_seed(seed, iteration, _STREAM_FIT_F)))
        g_model = gp.fit(X, np.array(margins), gp.FitConfig(seed=derived_seed(seed, iteration, _STREAM_FIT_G)))
        feasible = [v for v, m in zip(values, margins) if m <= 0.0]
        incumbent = min(feasible) if feasible else math.inf
        acq_cfg = dataclasses.replace(acquisition, seed=derived_seed(seed, iteration, _STREAM_ACQ))
        u = maximize_acquisition(f_model, g_model, incumbent, acq_cfg).point
        x_phys = SYNTH_LO + u * (SYNTH_HI - SYNTH_LO)
        points.append(u)
        values.append(float(synthetic_objective(x_phys)))
        margins.append(float(synthetic_margin(x_phys)))

    return np.vstack(points), np.array(values), np.array(margins)


def run_synthetic_random(seed: int, budget: int = 50) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Uniform random-search baseline on the synthetic problem."""
    rng = np.random.default_rng(derived_seed(seed, 0, _STREAM_INIT))
    points = rng.random((budget, 2))
    X_phys = SYNTH_LO + points * (SYNTH_HI - SYNTH_LO)
    return points, synthetic_objective(X_phys), synthetic_margin(X_phys)


def _result_from_traces(
    suite: str, method: str, seed: int, values: np.ndarray, feasible: np.ndarray
) -> BenchmarkResult:
    trace = running_best(values, feasible)
    final = trace[-1] if trace else None
    return BenchmarkResult(
        suite=suite,
        method=method,
        seed=seed,
        best_value=float("nan") if final is None else final,
        iters_to_2pct=iterations_to_within(trace),
        feasible_found=final is not None,
    )


def run_benchmark(
    suite: str,
    seeds: list[int],
    budget: int = 50,
    init_samples: int = 8,
) -> list[BenchmarkResult]:
    """Run BO and random search over the seed list; one result row each."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    results = []
    for seed in seeds:
        if suite == "synthetic2d":
            _, values, margins = run_synthetic_bo(seed, budget, init_samples)
            results.append(_result_from_traces(suite, "bo", seed, values, margins <= 0.0))
            _, values, margins = run_synthetic_random(seed, budget)
            results.append(_result_from_traces(suite, "random", seed, values, margins <= 0.0))
        else:
            log = run_optimization(preset_config("exp1", budget=budget, init_samples=init_samples, seed=seed))
            values = np.array([r.drag for r in log.records])
            feasible = np.array([r.feasible for r in log.records])
            results.append(_result_from_traces(suite, "bo", seed, values, feasible))
            results.append(_hull_random_result(seed, budget))
    return results


def _hull_random_result(seed: int, budget: int) -> BenchmarkResult:
    """Random search on the exp1 hull problem with the proxy evaluator."""
    from . import evaluator as ev

    cfg = preset_config("exp1", budget=budget, seed=seed)
    rng = np.random.default_rng(derived_seed(seed, 0, _STREAM_INIT))
    backend = BackendSpec().make()
    records = []
    for u in rng.random((budget, cfg.dim)):
        records.append(
            ev.evaluate(cfg.params_from_normalized(u), cfg.baseline, cfg.flow, records, backend)
        )
    values = np.array([r.drag for r in records])
    feasible = np.array([r.feasible for r in records])
    return _result_from_traces("proxy-hull", "random", seed, values, feasible)


def write_summary_csv(results: list[BenchmarkResult], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SUMMARY_COLUMNS + "\n")
        for r in results:
            fh.write(
                f"{r.suite},{r.method},{r.seed},{r.best_value!r},{r.iters_to_2pct},"
                f"{'true' if r.feasible_found else 'false'}\n"
            )
