"""Command-line interface: optimize, evaluate, benchmark, resume.

Configuration comes from an optional JSON file plus flags; flags win over
file keys, file keys win over defaults.  Every run writes a fixed artifact
set into its output directory: runlog.json, trace.csv, best_profile.csv,
best.stl, config_resolved.json, and rendered PNG figures of the trace and
the best profile.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import statistics
import sys
from pathlib import Path

from . import benchmarks as bm
from .acquisition import AcquisitionConfig
from .errors import CboHullError
from .evaluator import EvalRecord, FlowConditions, evaluate
from .hull import DEFAULT_BASELINE, BaselineGeometry, HullParams, profile, write_profile_csv
from .loop import BackendSpec, RunConfig, RunLog, resume, run_optimization, write_trace_csv
from .mesh import tessellate, write_stl
from .presets import PRESET_NAMES, preset_config

ENV_OUT_ROOT = "CBO_HULL_OUT"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_FEASIBLE = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage failures map to exit code 1."""

    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="cbo-hull", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    opt = sub.add_parser("optimize", help="run a constrained optimization to budget")
    _add_run_flags(opt)
    opt.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")

    ev = sub.add_parser("evaluate", help="score a single design")
    for name in ("a", "b", "c", "d", "n", "theta"):
        ev.add_argument(f"--{name}", type=float, default=None, help=f"design parameter {name}")
    ev.add_argument("--config", type=Path, default=None)
    ev.add_argument("--backend", choices=("proxy", "external"), default=None)
    ev.add_argument("--cmd", default=None, help="external evaluator command template")
    ev.add_argument("--units", choices=("mm", "cm"), default=None)

    bench = sub.add_parser("benchmark", help="BO vs random search over a seed list")
    bench.add_argument("--suite", choices=bm.SUITES, default="synthetic2d")
    bench.add_argument("--seeds", default=None, help="comma-separated seed list (default 0..19)")
    bench.add_argument("--budget", type=int, default=50)
    bench.add_argument("--init", type=int, default=8)
    bench.add_argument("--out", type=Path, default=None)

    res = sub.add_parser("resume", help="continue an interrupted run from its log")
    res.add_argument("--log", type=Path, required=True, help="path to runlog.json")
    return parser


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="JSON config file")
    p.add_argument("--preset", choices=(*PRESET_NAMES, "custom"), default=None)
    p.add_argument("--backend", choices=("proxy", "external"), default=None)
    p.add_argument("--cmd", default=None, help="external evaluator command template")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--init", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--units", choices=("mm", "cm"), default=None)
    p.add_argument("--out", type=Path, default=None, help="output directory")


def _load_config_file(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise _UsageError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise _UsageError("config file must hold a JSON object")
    return data


def _resolve_baseline(file_cfg: dict, units: str) -> BaselineGeometry:
    raw = file_cfg.get("baseline")
    if raw is None:
        bg = DEFAULT_BASELINE
    else:
        try:
            bg = BaselineGeometry(**{k: float(raw[k]) for k in ("a", "b", "c", "d")})
        except (KeyError, TypeError, ValueError) as exc:
            raise _UsageError(f"invalid config key 'baseline': {exc}") from exc
    if units == "cm":
        bg = BaselineGeometry(a=bg.a * 10, b=bg.b * 10, c=bg.c * 10, d=bg.d * 10)
    return bg


def _section(file_cfg: dict, key: str, cls, **overrides):
    raw = dict(file_cfg.get(key) or {})
    raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise _UsageError(f"invalid config key '{key}': {exc}") from exc


def resolve_run_config(args) -> tuple[RunConfig, dict]:
    """Merge defaults, config file, and flags into a RunConfig.

    Returns the config plus its fully resolved JSON-ready form (units mm).
    """
    file_cfg = _load_config_file(getattr(args, "config", None))
    preset = args.preset or file_cfg.get("preset") or "exp1"
    units = args.units or file_cfg.get("units") or "mm"
    if units not in ("mm", "cm"):
        raise _UsageError(f"invalid config key 'units': {units!r}")
    budget = args.budget if args.budget is not None else int(file_cfg.get("budget", 50))
    init = args.init if args.init is not None else int(file_cfg.get("init_samples", 8))
    seed = args.seed if args.seed is not None else int(file_cfg.get("seed", 0))

    backend = _section(
        file_cfg, "backend", BackendSpec, kind=args.backend, cmd=args.cmd
    )
    flow = _section(file_cfg, "flow", FlowConditions)
    acquisition = _section(file_cfg, "acquisition", AcquisitionConfig)
    baseline = _resolve_baseline(file_cfg, units)

    try:
        if preset == "custom":
            bounds = file_cfg.get("bounds")
            if not bounds:
                raise _UsageError("custom preset requires a 'bounds' config key")
            cfg = RunConfig(
                bounds={k: (float(v[0]), float(v[1])) for k, v in bounds.items()},
                fixed={k: float(v) for k, v in (file_cfg.get("fixed") or {}).items()},
                budget=budget,
                init_samples=init,
                seed=seed,
                acquisition=acquisition,
                backend=backend,
                flow=flow,
                baseline=baseline,
            )
        else:
            cfg = preset_config(
                preset,
                budget=budget,
                init_samples=init,
                seed=seed,
                backend=backend,
                flow=flow,
                baseline=baseline,
                acquisition=acquisition,
            )
    except (TypeError, ValueError, AttributeError) as exc:
        raise _UsageError(str(exc)) from exc

    resolved = cfg.to_dict()
    resolved["preset"] = preset
    resolved["units"] = "mm"
    return cfg, resolved


def _output_dir(args, default_name: str) -> Path:
    if getattr(args, "out", None) is not None:
        out = Path(args.out)
    else:
        out = Path(os.environ.get(ENV_OUT_ROOT, "runs")) / default_name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_run_artifacts(log: RunLog, out: Path) -> EvalRecord | None:
    from . import plots

    write_trace_csv(log, out / "trace.csv")
    plots.save_trace_figure(log, out / "trace.png")
    best = log.best_record()
    if best is not None:
        write_profile_csv(profile(best.params), out / "best_profile.csv")
        write_stl(tessellate(best.params), out / "best.stl")
        plots.save_profile_figure(best.params, log.config.baseline, out / "best_profile.png")
    return best


def _report_best(log: RunLog) -> int:
    best = log.best_record()
    if best is None:
        print("no feasible design found within budget")
        return EXIT_NO_FEASIBLE
    p = best.params
    print(
        f"best design: a={p.a:.3f} b={p.b:.3f} c={p.c:.3f} d={p.d:.3f} "
        f"n={p.n:.5f} theta={p.theta:.4f}"
    )
    print(f"best drag: {best.drag:.6f} N (margin {best.margin:.6f} mm, {best.source})")
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg, resolved = resolve_run_config(args)
    if args.dump_config:
        print(json.dumps(resolved, indent=1))
        return EXIT_OK
    out = _output_dir(args, f"{resolved['preset']}-seed{cfg.seed}")
    with open(out / "config_resolved.json", "w", encoding="utf-8") as fh:
        json.dump(resolved, fh, indent=1)
    log = run_optimization(cfg, log_path=out / "runlog.json")
    _write_run_artifacts(log, out)
    print(f"wrote artifacts to {out}")
    return _report_best(log)


def cmd_evaluate(args) -> int:
    missing = [name for name in ("a", "b", "c", "d", "n", "theta") if getattr(args, name) is None]
    if missing:
        raise _UsageError(f"missing design parameter(s): {', '.join('--' + m for m in missing)}")
    file_cfg = _load_config_file(args.config)
    units = args.units or file_cfg.get("units") or "mm"
    baseline = _resolve_baseline(file_cfg, units)
    flow = _section(file_cfg, "flow", FlowConditions)
    backend = _section(file_cfg, "backend", BackendSpec, kind=args.backend, cmd=args.cmd)

    params = HullParams(a=args.a, b=args.b, c=args.c, d=args.d, n=args.n, theta=args.theta)
    record = evaluate(params, baseline, flow, [], backend.make())
    print(f"margin_mm={record.margin!r}")
    print(f"feasible={'true' if record.feasible else 'false'}")
    print(f"drag_n={record.drag!r}")
    print(f"source={record.source}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    from . import plots

    if args.seeds is None:
        seeds = list(range(20))
    else:
        try:
            seeds = [int(s) for s in str(args.seeds).split(",") if s.strip() != ""]
        except ValueError as exc:
            raise _UsageError(f"invalid --seeds list: {exc}") from exc
        if not seeds:
            raise _UsageError("empty --seeds list")
    out = _output_dir(args, f"benchmark-{args.suite}")
    results = bm.run_benchmark(args.suite, seeds, budget=args.budget, init_samples=args.init)
    bm.write_summary_csv(results, out / "summary.csv")
    plots.save_benchmark_figure(results, out / "benchmark.png")

    for method in ("bo", "random"):
        vals = [r.best_value for r in results if r.method == method and r.feasible_found]
        if vals:
            print(f"{method}: median best {statistics.median(vals):.6f} over {len(vals)} seeds")
        else:
            print(f"{method}: no feasible result")
    print(f"wrote summary to {out}")
    return EXIT_OK


def cmd_resume(args) -> int:
    log = resume(args.log)
    out = Path(args.log).parent
    _write_run_artifacts(log, out)
    return _report_best(log)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "optimize": cmd_optimize,
            "evaluate": cmd_evaluate,
            "benchmark": cmd_benchmark,
            "resume": cmd_resume,
        }[args.command]
        return handler(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except CboHullError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
