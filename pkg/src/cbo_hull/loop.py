"""Sequential constrained Bayesian-optimization driver for the hull problem.

Each run seeds a Latin-hypercube initial design, then alternates: fit one GP
to the drag values and one to the containment margins (both refit from
scratch every iteration), maximize the constrained expected improvement,
evaluate the chosen design, and log it.  Runs are deterministic for a given
seed and backend: every random stream is derived from (seed, iteration,
stream-id), which also makes interrupted runs exactly resumable.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
from scipy.stats import qmc

from . import evaluator as ev
from . import gp
from .acquisition import AcquisitionConfig, maximize_acquisition
from .errors import EvaluationError, RunLogError
from .evaluator import EvalRecord, FlowConditions
from .hull import DEFAULT_BASELINE, BaselineGeometry, HullParams

SCHEMA_VERSION = 1

#: Canonical ordering of design-vector components.
PARAM_ORDER = ("a", "b", "c", "d", "n", "theta")

# stream ids for derived per-iteration seeds
_STREAM_INIT = 0
_STREAM_FIT_F = 1
_STREAM_FIT_G = 2
_STREAM_ACQ = 3


def derived_seed(base_seed: int, iteration: int, stream: int) -> int:
    """Deterministic child seed for one (iteration, stream) pair."""
    return int(np.random.SeedSequence((base_seed, iteration, stream)).generate_state(1)[0])


@dataclass(frozen=True)
class BackendSpec:
    """Which drag evaluator a run uses."""

    kind: str = "proxy"          # "proxy" | "external"
    cmd: str | None = None       # command template for the external backend
    timeout: float = 3600.0      # s, external backend only

    def __post_init__(self) -> None:
        if self.kind not in ("proxy", "external"):
            raise ValueError(f"backend kind must be 'proxy' or 'external', got {self.kind!r}")
        if self.kind == "external" and not self.cmd:
            raise ValueError("external backend requires a command template")
        if self.timeout <= 0:
            raise ValueError("backend timeout must be positive")

    def make(self):
        if self.kind == "proxy":
            return ev.ProxyBackend()
        return ev.ExternalBackend(self.cmd, self.timeout)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "cmd": self.cmd, "timeout": self.timeout}


@dataclass(frozen=True)
class RunConfig:
    """Complete description of one optimization run."""

    bounds: dict[str, tuple[float, float]]  # free parameters, physical units
    fixed: dict[str, float]                 # frozen parameters, physical units
    budget: int
    init_samples: int = 8
    seed: int = 0
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    backend: BackendSpec = field(default_factory=BackendSpec)
    flow: FlowConditions = field(default_factory=FlowConditions)
    baseline: BaselineGeometry = DEFAULT_BASELINE

    def __post_init__(self) -> None:
        if not self.bounds:
            raise ValueError("at least one parameter must be free")
        for name in self.bounds:
            if name not in PARAM_ORDER:
                raise ValueError(f"unknown design parameter {name!r}")
            if name in self.fixed:
                raise ValueError(f"parameter {name!r} is both free and fixed")
        for name in self.fixed:
            if name not in PARAM_ORDER:
                raise ValueError(f"unknown design parameter {name!r}")
        missing = [n for n in PARAM_ORDER if n not in self.bounds and n not in self.fixed]
        if missing:
            raise ValueError(f"parameters {missing} neither free nor fixed")
        for name, (lo, hi) in self.bounds.items():
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"bounds for {name!r} must satisfy min < max, got ({lo}, {hi})")
        if not self.budget > self.init_samples >= 2:
            raise ValueError(
                f"need budget > init_samples >= 2, got budget={self.budget}, init={self.init_samples}"
            )
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    @property
    def free_names(self) -> tuple[str, ...]:
        return tuple(n for n in PARAM_ORDER if n in self.bounds)

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def bound_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([self.bounds[n][0] for n in self.free_names])
        hi = np.array([self.bounds[n][1] for n in self.free_names])
        return lo, hi

    def denormalize(self, u: np.ndarray) -> np.ndarray:
        lo, hi = self.bound_arrays()
        return lo + np.asarray(u, dtype=float) * (hi - lo)

    def params_from_normalized(self, u: np.ndarray) -> HullParams:
        values = dict(self.fixed)
        values.update(zip(self.free_names, self.denormalize(u)))
        return HullParams(**values)

    def to_dict(self) -> dict:
        return {
            "bounds": {k: list(v) for k, v in self.bounds.items()},
            "fixed": dict(self.fixed),
            "budget": self.budget,
            "init_samples": self.init_samples,
            "seed": self.seed,
            "acquisition": dataclasses.asdict(self.acquisition),
            "backend": self.backend.to_dict(),
            "flow": dataclasses.asdict(self.flow),
            "baseline": dataclasses.asdict(self.baseline),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        def need(key: str) -> object:
            if key not in data:
                raise RunLogError(f"config is missing field '{key}'")
            return data[key]

        try:
            return cls(
                bounds={k: (float(v[0]), float(v[1])) for k, v in need("bounds").items()},
                fixed={k: float(v) for k, v in need("fixed").items()},
                budget=int(need("budget")),
                init_samples=int(need("init_samples")),
                seed=int(need("seed")),
                acquisition=AcquisitionConfig(**need("acquisition")),
                backend=BackendSpec(**need("backend")),
                flow=FlowConditions(**need("flow")),
                baseline=BaselineGeometry(**need("baseline")),
            )
        except (TypeError, ValueError, AttributeError, IndexError) as exc:
            raise RunLogError(f"invalid config: {exc}") from exc


@dataclass
class RunLog:
    """Ordered evaluation records plus per-iteration traces for one run."""

    config: RunConfig
    records: list[EvalRecord] = field(default_factory=list)
    points_norm: list[np.ndarray] = field(default_factory=list)
    best_trace: list[float | None] = field(default_factory=list)  # best feasible drag so far
    step_trace: list[float] = field(default_factory=list)         # L2 step, normalized units
    status: str = "running"  # running | completed | aborted
    started_at: str = ""
    finished_at: str | None = None

    @property
    def no_feasible_found(self) -> bool:
        return not any(r.feasible for r in self.records)

    def best_record(self) -> EvalRecord | None:
        best = None
        for rec in self.records:
            if rec.feasible and (best is None or rec.drag < best.drag):
                best = rec
        return best

    def append(self, record: EvalRecord, point_norm: np.ndarray) -> None:
        if self.points_norm:
            step = float(np.linalg.norm(point_norm - self.points_norm[-1]))
        else:
            step = 0.0
        self.records.append(record)
        self.points_norm.append(np.asarray(point_norm, dtype=float))
        previous = self.best_trace[-1] if self.best_trace else None
        candidates = [v for v in (previous, record.drag if record.feasible else None) if v is not None]
        self.best_trace.append(min(candidates) if candidates else None)
        self.step_trace.append(step)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "status": self.status,
            "no_feasible_found": self.no_feasible_found,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "records": [r.to_dict() for r in self.records],
            "points_norm": [list(map(float, u)) for u in self.points_norm],
            "best_trace": self.best_trace,
            "step_trace": self.step_trace,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "RunLog":
        for key in (
            "schema_version",
            "config",
            "status",
            "started_at",
            "records",
            "points_norm",
            "best_trace",
            "step_trace",
        ):
            if key not in data:
                raise RunLogError(f"run log is missing field '{key}'")
        if data["schema_version"] != SCHEMA_VERSION:
            raise RunLogError(f"unsupported field 'schema_version': {data['schema_version']}")
        if data["status"] not in ("running", "completed", "aborted"):
            raise RunLogError(f"invalid field 'status': {data['status']!r}")
        config = RunConfig.from_dict(data["config"])
        records = []
        for i, raw in enumerate(data["records"]):
            try:
                records.append(EvalRecord.from_dict(raw))
            except (KeyError, TypeError, ValueError) as exc:
                raise RunLogError(f"invalid field 'records[{i}]': {exc}") from exc
        points = [np.asarray(u, dtype=float) for u in data["points_norm"]]
        best_trace = [None if v is None else float(v) for v in data["best_trace"]]
        step_trace = [float(v) for v in data["step_trace"]]
        lengths = {len(records), len(points), len(best_trace), len(step_trace)}
        if len(lengths) != 1:
            raise RunLogError("invalid field 'records': trace lengths disagree")
        if len(records) > config.budget:
            raise RunLogError("invalid field 'records': more records than budget")
        for i, u in enumerate(points):
            if u.shape != (config.dim,) or not np.all(np.isfinite(u)):
                raise RunLogError(f"invalid field 'points_norm[{i}]'")
        log = cls(
            config=config,
            records=records,
            points_norm=points,
            best_trace=best_trace,
            step_trace=step_trace,
            status=data["status"],
            started_at=str(data["started_at"]),
            finished_at=data.get("finished_at"),
        )
        return log

    @classmethod
    def load(cls, path) -> "RunLog":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise RunLogError(f"cannot read run log: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise RunLogError(f"run log is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _evaluate_with_retry(cfg: RunConfig, backend, records, params) -> EvalRecord:
    try:
        return ev.evaluate(params, cfg.baseline, cfg.flow, records, backend)
    except EvaluationError:
        return ev.evaluate(params, cfg.baseline, cfg.flow, records, backend)


def run_optimization(
    cfg: RunConfig,
    log_path=None,
    stop_after: int | None = None,
    _partial: RunLog | None = None,
) -> RunLog:
    """Run (or continue) one constrained-BO optimization to its budget.

    Persists the log after every evaluation when `log_path` is given, so an
    interrupted or aborted run leaves a resumable file behind.  `stop_after`
    ends the run early after that many total records (checkpointing aid).
    On an evaluation error the failed call is retried once; a second failure
    aborts the run with the partial log persisted, re-raising the error.
    """
    backend = cfg.backend.make()
    log = _partial if _partial is not None else RunLog(config=cfg, started_at=_now())
    log.status = "running"

    lhs = qmc.LatinHypercube(
        d=cfg.dim, seed=np.random.default_rng(derived_seed(cfg.seed, 0, _STREAM_INIT))
    ).random(cfg.init_samples)

    def persist() -> None:
        if log_path is not None:
            log.save(log_path)

    target = cfg.budget if stop_after is None else min(cfg.budget, stop_after)
    while len(log.records) < target:
        iteration = len(log.records)
        if iteration < cfg.init_samples:
            u = lhs[iteration]
        else:
            X = np.vstack(log.points_norm)
            drags = np.array([r.drag for r in log.records])
            margins = np.array([r.margin for r in log.records])
            f_model = gp.fit(X, drags, gp.FitConfig(seed=derived_seed(cfg.seed, iteration, _STREAM_FIT_F)))
            g_model = gp.fit(X, margins, gp.FitConfig(seed=derived_seed(cfg.seed, iteration, _STREAM_FIT_G)))
            feasible = [r.drag for r in log.records if r.feasible]
            incumbent = min(feasible) if feasible else math.inf
            acq_cfg = dataclasses.replace(
                cfg.acquisition, seed=derived_seed(cfg.seed, iteration, _STREAM_ACQ)
            )
            u = maximize_acquisition(f_model, g_model, incumbent, acq_cfg).point

        params = cfg.params_from_normalized(u)
        try:
            record = _evaluate_with_retry(cfg, backend, log.records, params)
        except EvaluationError:
            log.status = "aborted"
            log.finished_at = _now()
            persist()
            raise
        log.append(record, u)
        persist()

    if len(log.records) >= cfg.budget:
        log.status = "completed"
        log.finished_at = _now()
    persist()
    return log


def resume(log_path) -> RunLog:
    """Continue a persisted run to its configured budget.

    A completed log is returned unchanged.  The continued run reproduces the
    uninterrupted one exactly: every random stream is re-derived from the
    recorded seed and iteration indices.
    """
    log = RunLog.load(log_path)
    if log.status == "completed" and len(log.records) >= log.config.budget:
        return log
    return run_optimization(log.config, log_path=log_path, _partial=log)


TRACE_COLUMNS = (
    "iter,a_mm,b_mm,c_mm,d_mm,n,theta_deg,drag_n,feasible,margin_mm,best_drag_n,l2_step,source"
)


def write_trace_csv(log: RunLog, path) -> None:
    """Write the per-iteration trace; columns are fixed for plotting tools."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TRACE_COLUMNS + "\n")
        for i, rec in enumerate(log.records):
            p = rec.params
            best = log.best_trace[i]
            fh.write(
                ",".join(
                    [
                        str(i + 1),
                        repr(p.a),
                        repr(p.b),
                        repr(p.c),
                        repr(p.d),
                        repr(p.n),
                        repr(p.theta),
                        repr(rec.drag),
                        "true" if rec.feasible else "false",
                        repr(rec.margin),
                        "nan" if best is None else repr(best),
                        repr(log.step_trace[i]),
                        rec.source,
                    ]
                )
                + "\n"
            )
