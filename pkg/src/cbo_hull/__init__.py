"""Constrained Bayesian optimization for low-drag axisymmetric hull design.

A Gaussian-process optimizer minimizes drag over a parametric hull family
subject to a payload-containment constraint, with interchangeable drag
evaluators (built-in analytic proxy or an external process).
"""

from .acquisition import (
    AcquisitionConfig,
    CandidateResult,
    constrained_ei,
    expected_improvement,
    maximize_acquisition,
    probability_feasible,
)
from .errors import (
    CboHullError,
    EvaluationError,
    InvalidGeometryError,
    NumericalError,
    RunLogError,
)
from .evaluator import (
    EvalRecord,
    ExternalBackend,
    FlowConditions,
    ProxyBackend,
    evaluate,
    external_evaluate,
    proxy_drag,
)
from .gp import FitConfig, GpModel, KernelHyperparams, PosteriorPrediction, fit, posterior
from .hull import (
    DEFAULT_BASELINE,
    BaselineGeometry,
    HullParams,
    Profile,
    baseline_radius,
    containment_margin,
    hull_radius,
    nose_radius,
    profile,
    tail_radius,
)
from .loop import BackendSpec, RunConfig, RunLog, resume, run_optimization, write_trace_csv
from .mesh import TriMesh, tessellate, write_stl
from .presets import PRESETS, preset_config

__version__ = "0.1.0"
