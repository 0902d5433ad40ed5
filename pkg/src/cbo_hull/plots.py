"""Matplotlib rendering of run traces, hull profiles, and benchmark summaries.

Figures are written straight to files (Agg backend); the CSV outputs next to
them carry the same data for external tooling.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .benchmarks import BenchmarkResult
from .hull import BaselineGeometry, HullParams, _baseline_radius_profile, profile
from .loop import RunLog

_FIG_KW = {"dpi": 130, "bbox_inches": "tight"}


def save_trace_figure(log: RunLog, path) -> None:
    """Two-panel optimization trace: step distances (left), best drag (right)."""
    iters = np.arange(1, len(log.records) + 1)
    steps = np.asarray(log.step_trace)
    best = np.array([math.nan if v is None else v for v in log.best_trace])

    fig, (ax_step, ax_best) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    ax_step.plot(iters, steps, marker=".", lw=1.0, color="tab:blue")
    ax_step.set_xlabel("evaluation")
    ax_step.set_ylabel("L2 step between samples (normalized)")
    ax_step.set_title("sample-to-sample distance")

    ax_best.plot(iters, best, marker=".", lw=1.2, color="tab:red")
    ax_best.set_xlabel("evaluation")
    ax_best.set_ylabel("best feasible drag [N]")
    ax_best.set_title("incumbent drag")
    for ax in (ax_step, ax_best):
        ax.grid(alpha=0.3)
    fig.suptitle(f"optimization trace (seed {log.config.seed}, {log.config.backend.kind} backend)")
    fig.tight_layout()
    fig.savefig(path, **_FIG_KW)
    plt.close(fig)


def save_profile_figure(params: HullParams, baseline: BaselineGeometry, path) -> None:
    """Hull outline with the packed envelope overlaid in its aligned position."""
    prof = profile(params, stations=513)
    offset = params.a - baseline.a
    bx = np.linspace(0.0, baseline.length, 257)
    br = _baseline_radius_profile(baseline, bx)

    fig, ax = plt.subplots(figsize=(9.0, 3.2))
    ax.plot(prof.x, prof.r, color="tab:blue", lw=1.6, label="hull")
    ax.plot(prof.x, -prof.r, color="tab:blue", lw=1.6)
    ax.plot(bx + offset, br, color="tab:orange", lw=1.2, ls="--", label="packed envelope")
    ax.plot(bx + offset, -br, color="tab:orange", lw=1.2, ls="--")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [mm]")
    ax.set_ylabel("r [mm]")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title(
        f"a={params.a:.1f} b={params.b:.1f} c={params.c:.1f} d={params.d:.1f} "
        f"n={params.n:.3f} theta={params.theta:.2f} deg"
    )
    ax.grid(alpha=0.3)
    fig.savefig(path, **_FIG_KW)
    plt.close(fig)


def save_benchmark_figure(results: list[BenchmarkResult], path) -> None:
    """Best-value distribution per method over the seed list."""
    methods = sorted({r.method for r in results})
    data = [
        [r.best_value for r in results if r.method == m and math.isfinite(r.best_value)]
        for m in methods
    ]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.boxplot(data, tick_labels=methods)
    for i, column in enumerate(data):
        jitter = (np.arange(len(column)) - len(column) / 2) * 0.01
        ax.plot(np.full(len(column), i + 1) + jitter, column, ".", alpha=0.5, color="tab:gray")
    ax.set_ylabel("best feasible value after budget")
    ax.set_title(f"{results[0].suite}: {len({r.seed for r in results})} seeds" if results else "benchmark")
    ax.grid(alpha=0.3, axis="y")
    fig.savefig(path, **_FIG_KW)
    plt.close(fig)
