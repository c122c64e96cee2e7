"""Stochastic mirror descent with biased subgradient oracles.

Runs the mirror-descent recursion under pluggable Bregman geometries and
noise/bias models, audits its per-step inequalities, evaluates concentration
bounds and iteration thresholds in closed form, and verifies them with
parallel Monte Carlo.
"""

__version__ = "0.1.0"

from .backend import active_backend, available_backends
from .errors import ConfigurationError, InputError, NumericalError, SmdlabError
from .geometry import (
    ConstraintSet,
    Geometry,
    L1_PAIR,
    L2_PAIR,
    MirrorMap,
    NormPair,
    bregman,
    dual_norm,
    mirror_step,
    three_point_residual,
)
from .oracle import (
    BiasModel,
    NoiseModel,
    SmoothingSchedule,
    bias_bound,
    estimate_moments,
    sample,
    sub_gaussian_check,
    zo_sample,
)
from .problems import Problem, make_problem
from .smd import StepSchedule, Trace, audit_step, ergodic_update, run
from .bounds import (
    BoundParams,
    SumCache,
    compute_K,
    corollary2_times,
    corollary3_times,
    params_from,
    tau,
    theorem4_bound,
    theorem5_bound,
)
from .harness import (
    TailEstimate,
    TrialSet,
    compare_bound,
    fit_rate,
    merge,
    run_trials,
    tail_probability,
)
