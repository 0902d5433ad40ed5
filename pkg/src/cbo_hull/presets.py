"""Built-in experiment presets over the packed-envelope design space.

Both presets keep the diameter and midbody length pinned to the envelope;
`exp1` optimizes only the nose/tail shaping (n, theta), `exp2` additionally
frees the nose and tail lengths (a, c).  Free-length ranges run from the
envelope dimension up to 2.5 m beyond it; n spans [0.1, 5] and theta
[0, 50] degrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .acquisition import AcquisitionConfig
from .evaluator import FlowConditions
from .hull import DEFAULT_BASELINE, BaselineGeometry
from .loop import BackendSpec, RunConfig

LENGTH_RANGE_MM = 2500.0
N_RANGE = (0.1, 5.0)
THETA_RANGE_DEG = (0.0, 50.0)

PRESET_NAMES = ("exp1", "exp2")


@dataclass(frozen=True)
class ExperimentPreset:
    """Named choice of free parameters for the hull problem."""

    name: str
    free: tuple[str, ...]

    def bounds(self, bg: BaselineGeometry) -> dict[str, tuple[float, float]]:
        table = {
            "a": (bg.a, bg.a + LENGTH_RANGE_MM),
            "c": (bg.c, bg.c + LENGTH_RANGE_MM),
            "n": N_RANGE,
            "theta": THETA_RANGE_DEG,
        }
        return {name: table[name] for name in self.free}

    def fixed(self, bg: BaselineGeometry) -> dict[str, float]:
        defaults = {"a": bg.a, "b": bg.b, "c": bg.c, "d": bg.d}
        return {name: value for name, value in defaults.items() if name not in self.free}


PRESETS = {
    "exp1": ExperimentPreset(name="exp1", free=("n", "theta")),
    "exp2": ExperimentPreset(name="exp2", free=("a", "c", "n", "theta")),
}


def preset_config(
    name: str,
    budget: int = 50,
    init_samples: int = 8,
    seed: int = 0,
    backend: BackendSpec = BackendSpec(),
    flow: FlowConditions = FlowConditions(),
    baseline: BaselineGeometry = DEFAULT_BASELINE,
    acquisition: AcquisitionConfig = AcquisitionConfig(),
) -> RunConfig:
    """RunConfig for one of the named presets."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    preset = PRESETS[name]
    return RunConfig(
        bounds=preset.bounds(baseline),
        fixed=preset.fixed(baseline),
        budget=budget,
        init_samples=init_samples,
        seed=seed,
        acquisition=acquisition,
        backend=backend,
        flow=flow,
        baseline=baseline,
    )
