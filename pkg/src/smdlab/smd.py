"""The SMD iteration with step schedules, ergodic averaging and auditing.

A run executes, for t = 1..T,

    x(t+1) = mirror_step(x(t), gtilde(t), alpha(t)),

maintains the ergodic average incrementally as
z(t) = beta(t) x(t) + (1 - beta(t)) z(t-1) with beta(t) = alpha(t)/A(t),
and records function-value gaps.  With auditing enabled, every step also
checks the per-step descent inequality

    D(x_ref, x(t+1)) <= D(x_ref, x(t)) + alpha <gtilde, x_ref - x(t)>
                        + alpha^2/(2 sigma_R) ||gtilde||_*^2

against a reference set containing an optimal point, and the first-order
optimality condition of the mirror subproblem against feasible probes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from . import backend, rng as rngmod
from .errors import InputError
from .geometry import Geometry
from .oracle import (
    BiasModel,
    NoiseModel,
    bias_bound,
    bias_vector,
    noise_from_uniforms,
)
from .problems import Problem

FULL_RECORD_MAX_T = 10_000
# Disjoint key space for the audit-probe stream within a (seed, trial) pair.
_AUDIT_STREAM_OFFSET = 1 << 48


@dataclass(frozen=True)
class StepSchedule:
    """alpha(t) = alpha0 * t**-k.

    Square-summable-but-not-summable (the convergence assumption) iff
    k in (1/2, 1]; the constructor warns outside that range and rejects
    k <= 0 outright, so divergent negative controls stay expressible.
    """

    alpha0: float
    k: float

    def __post_init__(self):
        if self.alpha0 <= 0:
            raise InputError("alpha0 must be positive")
        if self.k <= 0:
            raise InputError("k must be positive")
        if not (0.5 < self.k <= 1.0):
            warnings.warn(
                f"step exponent k={self.k} outside (1/2, 1]; "
                "the summability assumption fails",
                stacklevel=2,
            )

    def alpha(self, t) -> float:
        return self.alpha0 * float(t) ** -self.k

    def alphas(self, T: int) -> np.ndarray:
        return self.alpha0 * np.arange(1, T + 1, dtype=np.float64) ** -self.k


@dataclass
class Trace:
    t: np.ndarray  # recorded step indices, 1-based
    gap_x: np.ndarray
    gap_z: np.ndarray
    x: np.ndarray | None = None  # (m, dim)
    z: np.ndarray | None = None
    gtilde: np.ndarray | None = None
    ber_residual: np.ndarray | None = None  # relative; audit runs only
    opt_residual: np.ndarray | None = None
    header: dict = field(default_factory=dict)

    def gap_z_at(self, t: int) -> float:
        pos = np.searchsorted(self.t, t)
        if pos >= self.t.size or self.t[pos] != t:
            raise InputError(f"step {t} was not recorded")
        return float(self.gap_z[pos])


def record_indices(T: int, checkpoints=None) -> np.ndarray:
    """Steps to record: everything up to 1e4, geometric + tail + checkpoints above."""
    if T <= FULL_RECORD_MAX_T and checkpoints is None:
        return np.arange(1, T + 1, dtype=np.int64)
    keep = set()
    if T <= FULL_RECORD_MAX_T:
        keep.update(range(1, T + 1))
    else:
        p = 1
        while p <= T:
            keep.add(p)
            p *= 2
        keep.update(range(max(1, T - 99), T + 1))
    if checkpoints is not None:
        for c in checkpoints:
            if not 1 <= int(c) <= T:
                raise InputError(f"checkpoint {c} outside [1, T]")
            keep.add(int(c))
    return np.array(sorted(keep), dtype=np.int64)


def ergodic_update(z_prev, x_t, alpha_t, A_t) -> np.ndarray:
    """z(t) from z(t-1): the convex combination with beta = alpha(t)/A(t)."""
    if alpha_t <= 0 or A_t < alpha_t:
        raise InputError("need A_t >= alpha_t > 0")
    beta = alpha_t / A_t
    return beta * np.asarray(x_t, dtype=np.float64) + (1.0 - beta) * np.asarray(
        z_prev, dtype=np.float64
    )


def audit_step(geom: Geometry, x_t, x_next, x_ref, gtilde, alpha, probes=()):
    """Residuals of the per-step inequality and the step's optimality condition.

    Returns (ber_rel, opt_res): ber_rel is (LHS - RHS) of the descent
    inequality scaled by 1 + the magnitudes of its terms and must be <= tol;
    opt_res is the minimum of the first-order optimality form over the probe
    points and must be >= -tol.
    """
    mm = geom.mirror_map
    x_t = np.asarray(x_t, dtype=np.float64)
    x_next = np.asarray(x_next, dtype=np.float64)
    x_ref = _clamp_to_domain(geom, np.asarray(x_ref, dtype=np.float64))
    gtilde = np.asarray(gtilde, dtype=np.float64)
    dn2 = geom.pair.dual(gtilde) ** 2
    quad = alpha * alpha / (2.0 * geom.sigma_r) * dn2
    lin = alpha * float(gtilde @ (x_ref - x_t))
    lhs = mm.bregman(x_ref, x_next)
    base = mm.bregman(x_ref, x_t)
    scale = 1.0 + abs(base) + abs(lin) + quad
    ber_rel = (lhs - (base + lin + quad)) / scale
    opt = np.inf
    gr_diff = mm.grad(x_next) - mm.grad(x_t)
    for u in probes:
        u = _clamp_to_domain(geom, np.asarray(u, dtype=np.float64))
        v = alpha * float(gtilde @ (u - x_next)) + float(gr_diff @ (u - x_next))
        opt = min(opt, v)
    return ber_rel, opt


def _clamp_to_domain(geom: Geometry, v: np.ndarray) -> np.ndarray:
    # Entropic Bregman terms need strictly positive coordinates; reference
    # points like simplex vertices get pulled onto the floored simplex.
    if geom.mirror_map.kind != "neg_entropy":
        return v
    w = np.maximum(v, geom.mirror_map.entropy_floor)
    return w / np.sum(w)


def _prep_arrays(problem: Problem, geom: Geometry, bias: BiasModel,
                 noise: NoiseModel, sched: StepSchedule, T, seed, trial):
    from .errors import ConfigurationError

    dim = problem.dim
    geom_code = {"box": 0, "l2_ball": 1, "simplex": 2}[geom.set.kind]
    prob_code = {"quadratic": 0, "pwl_max": 1, "l1": 2, "linear_simplex": 3}[
        problem.kind
    ]
    bias_code = {"none": 0, "fixed_direction": 1, "adversarial": 2,
                 "zeroth_order": 3}[bias.kind]
    U = rngmod.uniform_block(seed, trial, T, dim)
    tgrid = np.arange(1, T + 1, dtype=np.float64)
    if bias.kind == "zeroth_order":
        if not noise.is_zero():
            raise ConfigurationError(
                "zeroth_order oracles carry their own randomness; "
                "combine only with zero noise"
            )
        zeta = np.zeros((T, dim))
        zo_u = np.ascontiguousarray(ndtri(U[:, :dim]))
        mu_arr = bias.smoothing.mu0 * tgrid**-bias.smoothing.r
    else:
        zeta = np.ascontiguousarray(noise_from_uniforms(noise, U, dim))
        zo_u = np.zeros((T, dim))
        mu_arr = np.zeros(T)
    if bias.kind in ("fixed_direction", "adversarial"):
        bias_mag = bias.B0 * tgrid**-bias.q
    else:
        bias_mag = np.zeros(T)
    if bias.kind == "fixed_direction":
        d = np.asarray(bias.direction, dtype=np.float64)
        bias_dir = d / geom.pair.dual(d)
    else:
        bias_dir = np.zeros(dim)
    zeros = np.zeros(dim)
    args = dict(
        geom=geom_code, prob=prob_code, bias=bias_code,
        lo=problem.set.lo if problem.set.kind == "box" else zeros,
        hi=problem.set.hi if problem.set.kind == "box" else zeros,
        center=problem.set.center if problem.set.kind == "l2_ball" else zeros,
        radius=problem.set.radius or 0.0,
        floor=geom.mirror_map.entropy_floor,
        a_diag=problem.a_diag if problem.a_diag is not None else zeros,
        b_lin=problem.b_lin if problem.b_lin is not None else zeros,
        planes_a=problem.planes_a if problem.planes_a is not None
        else np.zeros((1, dim)),
        planes_c=problem.planes_c if problem.planes_c is not None
        else np.zeros(1),
        shift=problem.shift if problem.shift is not None else zeros,
        c_lin=problem.c_lin if problem.c_lin is not None else zeros,
        f_star=problem.f_star, x_star=problem.x_star,
        bias_mag=bias_mag, bias_dir=bias_dir, mu_arr=mu_arr,
        zeta=zeta, zo_u=zo_u,
        alpha=sched.alphas(T),
    )
    return args


def run(problem: Problem, geom: Geometry, bias: BiasModel, noise: NoiseModel,
        sched: StepSchedule, T: int, seed: int, trial: int = 0,
        x0=None, checkpoints=None, audit: bool = False,
        want_x: bool = False, want_gtilde: bool = False,
        backend_name: str | None = None) -> Trace:
    """Run the SMD recursion for T steps and return its trace."""
    if T < 1:
        raise InputError("T must be >= 1")
    if (problem.set.kind, problem.set.dim) != (geom.set.kind, geom.set.dim):
        raise InputError("problem and geometry must share the constraint set")
    x0 = (geom.set.analytic_center() if x0 is None
          else np.asarray(x0, dtype=np.float64))
    if not geom.set.contains(x0):
        raise InputError("start point is not feasible")
    args = _prep_arrays(problem, geom, bias, noise, sched, T, seed, trial)
    rec = record_indices(T, checkpoints)
    header = {
        "seed": int(seed), "trial": int(trial), "T": int(T),
        "alpha0": sched.alpha0, "k": sched.k, "audit": bool(audit),
        "backend": "python" if audit else (backend_name or backend.active_backend()),
    }
    if audit:
        return _run_audited(problem, geom, bias, sched, args, x0, rec, header,
                            seed, trial, want_x, want_gtilde)
    gap_x, gap_z, x_rec, z_rec, gt_rec = backend.run_loop(
        args["geom"], args["prob"], args["bias"],
        args["lo"], args["hi"], args["center"], args["radius"], args["floor"],
        args["a_diag"], args["b_lin"], args["planes_a"], args["planes_c"],
        args["shift"], args["c_lin"],
        args["f_star"], args["x_star"],
        args["bias_mag"], args["bias_dir"], args["mu_arr"],
        args["zeta"], args["zo_u"],
        args["alpha"], x0, rec,
        want_x, want_gtilde,
        backend=backend_name,
    )
    return Trace(t=rec, gap_x=gap_x, gap_z=gap_z, x=x_rec, z=z_rec,
                 gtilde=gt_rec, header=header)


def _run_audited(problem, geom, bias, sched, args, x0, rec, header,
                 seed, trial, want_x, want_gtilde):
    from .errors import NumericalError

    T = args["alpha"].shape[0]
    dim = problem.dim
    probe_rng = rngmod.trial_generator(seed, trial + _AUDIT_STREAM_OFFSET)
    refs = [problem.x_star] + [geom.set.sample(probe_rng) for _ in range(5)]
    m = rec.shape[0]
    out = {
        "gap_x": np.empty(m), "gap_z": np.empty(m),
        "ber": np.empty(m), "opt": np.empty(m),
        "x": np.empty((m, dim)) if want_x else None,
        "z": np.empty((m, dim)) if want_x else None,
        "gt": np.empty((m, dim)) if want_gtilde else None,
    }
    x = x0.copy()
    z = np.zeros(dim)
    A = 0.0
    rp = 0
    zeta, zo_u, mu_arr, alpha = (args["zeta"], args["zo_u"], args["mu_arr"],
                                 args["alpha"])
    for t in range(1, T + 1):
        a_t = alpha[t - 1]
        A += a_t
        z = ergodic_update(z, x, a_t, A)
        if bias.kind == "zeroth_order":
            u = zo_u[t - 1]
            mu = mu_arr[t - 1]
            gtilde = ((problem.value(x + mu * u) - problem.value(x)) / mu) * u \
                + zeta[t - 1]
        else:
            gtilde = (problem.subgrad(x)
                      + bias_vector(bias, geom.pair, x, problem.x_star, t)
                      + zeta[t - 1])
        x_next = geom.step(x, gtilde, a_t)
        if not np.all(np.isfinite(x_next)):
            raise NumericalError(f"non-finite iterate at step {t}", step=t)
        if rp < m and rec[rp] == t:
            ber = -np.inf
            opt = np.inf
            for ref in refs:
                b, o = audit_step(geom, x, x_next, ref, gtilde, a_t, probes=refs)
                ber = max(ber, b)
                opt = min(opt, o)
            out["gap_x"][rp] = problem.value(x) - problem.f_star
            out["gap_z"][rp] = problem.value(z) - problem.f_star
            out["ber"][rp] = ber
            out["opt"][rp] = opt
            if want_x:
                out["x"][rp] = x
                out["z"][rp] = z
            if want_gtilde:
                out["gt"][rp] = gtilde
            rp += 1
        x = x_next
    return Trace(t=rec, gap_x=out["gap_x"], gap_z=out["gap_z"], x=out["x"],
                 z=out["z"], gtilde=out["gt"], ber_residual=out["ber"],
                 opt_residual=out["opt"], header=header)
