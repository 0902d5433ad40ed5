"""Design evaluation: analytic drag proxy, external-process backend, and the
max-drag heuristic for infeasible designs.

Infeasible designs are not worth a full drag computation once one of them
has been measured: they are assigned the maximum drag seen so far, which is
enough to teach the objective model that the region is unattractive.  The
very first infeasible design (if its geometry is computable at all) is
evaluated for real so that the heuristic has a value to lean on.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
import time
from dataclasses import dataclass

from scipy.integrate import quad

from .errors import EvaluationError, InvalidGeometryError
from .hull import (
    BaselineGeometry,
    HullParams,
    _tail_coeffs,
    containment_margin,
    is_valid_geometry,
)

MM_PER_M = 1000.0


@dataclass(frozen=True)
class FlowConditions:
    """Operating point held constant across an optimization run."""

    speed: float = 2.0                      # m/s
    fluid_density: float = 998.2            # kg/m^3 (water, 20 C)
    kinematic_viscosity: float = 1.004e-6   # m^2/s

    def __post_init__(self) -> None:
        for name in ("speed", "fluid_density", "kinematic_viscosity"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"flow condition {name!r} must be positive, got {value}")


@dataclass(frozen=True)
class EvalRecord:
    """One completed design evaluation."""

    params: HullParams
    drag: float        # N
    feasible: bool
    margin: float      # mm, signed containment margin
    source: str        # "proxy" | "external" | "heuristic"
    wall_time: float   # s

    def to_dict(self) -> dict:
        p = self.params
        return {
            "params": {"a": p.a, "b": p.b, "c": p.c, "d": p.d, "n": p.n, "theta": p.theta},
            "drag": self.drag,
            "feasible": self.feasible,
            "margin": self.margin,
            "source": self.source,
            "wall_time": self.wall_time,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalRecord":
        return cls(
            params=HullParams(**data["params"]),
            drag=float(data["drag"]),
            feasible=bool(data["feasible"]),
            margin=float(data["margin"]),
            source=str(data["source"]),
            wall_time=float(data["wall_time"]),
        )


def _require_valid(p: HullParams) -> None:
    if not is_valid_geometry(p):
        raise InvalidGeometryError(
            f"tail radius goes negative for (c={p.c}, d={p.d}, theta={p.theta})"
        )


def wetted_surface(p: HullParams) -> float:
    """Wetted surface 2*pi*int r sqrt(1 + r'^2) dx by adaptive quadrature (m^2).

    Integrates the nose and tail pieces with analytic slopes; the cylinder
    contributes exactly 2*pi*R*b.
    """
    _require_valid(p)
    a, b, c, d = (v / MM_PER_M for v in (p.a, p.b, p.c, p.d))
    radius = d / 2.0
    inv_n = 1.0 / p.n

    def nose(x: float) -> float:
        u = (x - a) / a
        w = 1.0 - u * u
        if w <= 0.0:
            return 0.0
        r = radius * w**inv_n
        slope = radius * inv_n * w ** (inv_n - 1.0) * (-2.0 * u) / a
        return r * math.sqrt(1.0 + slope * slope)

    quad_mm, cub_mm = _tail_coeffs(p)
    quad_c = quad_mm * MM_PER_M  # r in m as function of z in m
    cub_c = cub_mm * MM_PER_M**2

    def tail(z: float) -> float:
        r = radius - quad_c * z * z + cub_c * z**3
        slope = -2.0 * quad_c * z + 3.0 * cub_c * z * z
        return max(r, 0.0) * math.sqrt(1.0 + slope * slope)

    s_nose, _ = quad(nose, 0.0, a, limit=200)
    s_tail, _ = quad(tail, 0.0, c, limit=200)
    return 2.0 * math.pi * (s_nose + radius * b + s_tail)


def proxy_drag(p: HullParams, flow: FlowConditions = FlowConditions()) -> float:
    """Deterministic smooth drag stand-in for a viscous-flow solve (N).

    Flat-plate friction line Cf = 0.075 / (log10 Re - 2)^2 on the hull
    length, a slenderness form factor k = 1.5 (d/l)^1.5 + 7 (d/l)^3, and the
    quadrature wetted surface:  drag = 0.5 rho U^2 S Cf (1 + k).
    """
    _require_valid(p)
    length = p.length / MM_PER_M
    diameter = p.d / MM_PER_M
    reynolds = flow.speed * length / flow.kinematic_viscosity
    cf = 0.075 / (math.log10(reynolds) - 2.0) ** 2
    form = 1.5 * (diameter / length) ** 1.5 + 7.0 * (diameter / length) ** 3
    surface = wetted_surface(p)
    return 0.5 * flow.fluid_density * flow.speed**2 * surface * cf * (1.0 + form)


def external_evaluate(
    p: HullParams,
    cmd: str,
    flow: FlowConditions = FlowConditions(),
    timeout: float = 3600.0,
) -> float:
    """Run one design through an external evaluator process.

    The request document goes to the child's stdin as a single JSON object;
    the child must exit 0 and print a JSON object with a numeric
    "drag_newtons" key (extra keys ignored) on stdout.
    """
    request = json.dumps(
        {
            "a_mm": p.a,
            "b_mm": p.b,
            "c_mm": p.c,
            "d_mm": p.d,
            "n": p.n,
            "theta_deg": p.theta,
            "speed_ms": flow.speed,
            "density": flow.fluid_density,
            "nu": flow.kinematic_viscosity,
        }
    )
    argv = shlex.split(cmd)
    if not argv:
        raise EvaluationError("empty evaluator command")
    try:
        proc = subprocess.run(
            argv,
            input=request,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise EvaluationError(f"evaluator timed out after {timeout} s", stderr=exc.stderr) from exc
    except OSError as exc:
        raise EvaluationError(f"could not launch evaluator: {exc}") from exc
    if proc.returncode != 0:
        raise EvaluationError(
            f"evaluator exited with code {proc.returncode}",
            exit_code=proc.returncode,
            stderr=proc.stderr,
        )
    try:
        response = json.loads(proc.stdout)
        drag = float(response["drag_newtons"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise EvaluationError(
            f"malformed evaluator response: {proc.stdout!r}", stderr=proc.stderr
        ) from exc
    if not math.isfinite(drag):
        raise EvaluationError(f"evaluator returned non-finite drag {drag}")
    return drag


class ProxyBackend:
    """In-process analytic drag proxy."""

    source = "proxy"

    def __call__(self, p: HullParams, flow: FlowConditions) -> float:
        return proxy_drag(p, flow)


class ExternalBackend:
    """Child-process evaluator speaking the stdin/stdout JSON protocol."""

    source = "external"

    def __init__(self, cmd: str, timeout: float = 3600.0):
        self.cmd = cmd
        self.timeout = timeout

    def __call__(self, p: HullParams, flow: FlowConditions) -> float:
        return external_evaluate(p, self.cmd, flow, self.timeout)


def evaluate(
    p: HullParams,
    bg: BaselineGeometry,
    flow: FlowConditions,
    history: list[EvalRecord],
    backend,
    samples: int = 4096,
) -> EvalRecord:
    """Evaluate one design, applying the max-drag heuristic to infeasible ones.

    Feasible designs (containment margin <= 0) always go to the backend.
    Infeasible designs reuse max(drag) over the history once any infeasible
    design has been genuinely evaluated; before that, the first infeasible
    design is run through the backend so the heuristic has an anchor value.
    Geometrically invalid designs can never be run and always take the
    history maximum (there is no profile to hand to a solver).
    """
    start = time.perf_counter()
    margin = containment_margin(p, bg, samples)
    feasible = margin <= 0.0

    if feasible:
        drag = backend(p, flow)
        source = backend.source
    else:
        seen_true_infeasible = any(r.source != "heuristic" and not r.feasible for r in history)
        computable = is_valid_geometry(p)
        if seen_true_infeasible or not computable:
            if not history:
                raise EvaluationError(
                    "first design is geometrically invalid; no drag history to fall back on"
                )
            drag = max(r.drag for r in history)
            source = "heuristic"
        else:
            drag = backend(p, flow)
            source = backend.source

    return EvalRecord(
        params=p,
        drag=drag,
        feasible=feasible,
        margin=margin,
        source=source,
        wall_time=time.perf_counter() - start,
    )
