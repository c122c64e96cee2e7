"""Parallel Monte Carlo estimation of tail probabilities and rates.

Trials are pure functions of (configuration, base seed, trial index), so a
TrialSet can be produced serially, in a worker pool, or in separately merged
batches and the result is identical.  Tail probabilities use exact
(Clopper-Pearson) binomial intervals: the events of interest are rare at
large t, exactly where a normal approximation would be invalid.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import beta as _beta

from . import smd
from .errors import ConfigurationError, InputError
from .oracle import NoiseModel, SubGaussianDiagnostic

WORKERS_ENV = "SMDLAB_WORKERS"


def default_checkpoints(T: int) -> np.ndarray:
    """Geometric grid {1, 2, 4, ...} plus the horizon itself."""
    pts = []
    p = 1
    while p <= T:
        pts.append(p)
        p *= 2
    if pts[-1] != T:
        pts.append(T)
    return np.array(pts, dtype=np.int64)


@dataclass(frozen=True)
class TrialSet:
    checkpoints: np.ndarray  # (m,) step indices
    trial_ids: np.ndarray  # (n,) sorted
    gaps: np.ndarray  # (n, m) gap_z at each checkpoint
    base_seed: int
    config_digest: str = ""

    @property
    def n(self) -> int:
        return int(self.trial_ids.size)

    def _col(self, t: int) -> np.ndarray:
        pos = np.searchsorted(self.checkpoints, t)
        if pos >= self.checkpoints.size or self.checkpoints[pos] != t:
            raise InputError(f"step {t} is not a recorded checkpoint")
        return self.gaps[:, pos]


def merge(a: TrialSet, b: TrialSet) -> TrialSet:
    """Order-independent union of two trial sets with disjoint trial indices."""
    if not np.array_equal(a.checkpoints, b.checkpoints):
        raise InputError("checkpoint grids differ")
    if a.base_seed != b.base_seed or a.config_digest != b.config_digest:
        raise InputError("trial sets come from different configurations")
    ids = np.concatenate([a.trial_ids, b.trial_ids])
    if np.unique(ids).size != ids.size:
        raise InputError("trial index ranges overlap")
    order = np.argsort(ids)
    gaps = np.concatenate([a.gaps, b.gaps])[order]
    return TrialSet(a.checkpoints, ids[order], gaps, a.base_seed,
                    a.config_digest)


def _one_trial(job):
    (problem, geom, bias, noise, sched, T, base_seed, checkpoints, trial) = job
    trace = smd.run(problem, geom, bias, noise, sched, T, seed=base_seed,
                    trial=trial, checkpoints=checkpoints)
    return trial, np.array([trace.gap_z_at(int(t)) for t in checkpoints])


def _worker_count(n_jobs: int) -> int:
    env = os.environ.get(WORKERS_ENV)
    w = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(w, n_jobs))


def run_trials(problem, geom, bias, noise, sched, n: int, T: int,
               checkpoints=None, base_seed: int = 0, trial_offset: int = 0,
               config_digest: str = "", workers: int | None = None) -> TrialSet:
    """n independent runs on disjoint substreams; deterministic reduction."""
    if n < 1:
        raise InputError("need n >= 1 trials")
    checkpoints = (default_checkpoints(T) if checkpoints is None
                   else np.asarray(sorted(set(int(c) for c in checkpoints)),
                                   dtype=np.int64))
    jobs = [
        (problem, geom, bias, noise, sched, T, base_seed, checkpoints,
         trial_offset + i)
        for i in range(n)
    ]
    w = _worker_count(n) if workers is None else max(1, workers)
    if w == 1 or n == 1:
        results = [_one_trial(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=w) as pool:
            chunk = max(1, n // (4 * w))
            results = list(pool.map(_one_trial, jobs, chunksize=chunk))
    results.sort(key=lambda r: r[0])
    ids = np.array([r[0] for r in results], dtype=np.int64)
    gaps = np.vstack([r[1] for r in results])
    return TrialSet(checkpoints, ids, gaps, base_seed, config_digest)


def clopper_pearson(successes: int, n: int, gamma: float = 0.99):
    """Exact two-sided binomial interval at confidence level gamma."""
    if not 0 <= successes <= n or n < 1:
        raise InputError("need 0 <= successes <= n, n >= 1")
    half = (1.0 - gamma) / 2.0
    lo = 0.0 if successes == 0 else float(
        _beta.ppf(half, successes, n - successes + 1)
    )
    hi = 1.0 if successes == n else float(
        _beta.ppf(1.0 - half, successes + 1, n - successes)
    )
    return lo, hi


@dataclass(frozen=True)
class TailEstimate:
    successes: int
    n: int
    p_hat: float
    ci_low: float
    ci_high: float
    gamma: float


def tail_probability(ts: TrialSet, t: int, eps: float,
                     gamma: float = 0.99) -> TailEstimate:
    """Exact binomial estimate of P(gap_z(t) >= eps)."""
    col = ts._col(t)
    k = int(np.sum(col >= eps))
    lo, hi = clopper_pearson(k, ts.n, gamma)
    return TailEstimate(successes=k, n=ts.n, p_hat=k / ts.n, ci_low=lo,
                        ci_high=hi, gamma=gamma)


@dataclass(frozen=True)
class RateFit:
    slope: float
    stderr: float
    n_points: int
    degenerate: bool = False  # some median gap fell to or below zero


def fit_rate(ts: TrialSet, t_range) -> RateFit:
    """Least-squares slope of log(median gap_z) against log t."""
    t_lo, t_hi = t_range
    mask = (ts.checkpoints >= t_lo) & (ts.checkpoints <= t_hi)
    tt = ts.checkpoints[mask].astype(np.float64)
    if tt.size < 4:
        raise InputError("need at least 4 checkpoints in the fit range")
    med = np.median(ts.gaps[:, mask], axis=0)
    if np.any(med <= 0):
        return RateFit(slope=float("nan"), stderr=float("nan"),
                       n_points=int(tt.size), degenerate=True)
    lx = np.log(tt)
    ly = np.log(med)
    (slope, _), cov = np.polyfit(lx, ly, 1, cov=True)
    return RateFit(slope=float(slope), stderr=float(np.sqrt(cov[0, 0])),
                   n_points=int(tt.size))


@dataclass(frozen=True)
class Verdict:
    consistent: bool
    margin: float  # bound - p_hat


def compare_bound(est: TailEstimate, bound: float) -> Verdict:
    """Consistent when the interval's lower limit does not exceed the bound."""
    return Verdict(consistent=bool(est.ci_low <= bound),
                   margin=bound - est.p_hat)


def require_subgaussian_for_theorem5(diag: SubGaussianDiagnostic):
    """Refuse Theorem-5 comparisons for noise failing the tail diagnostic."""
    if not diag.passed:
        raise ConfigurationError(
            "noise model failed the sub-Gaussian tail diagnostic; "
            "refusing sub-Gaussian bound comparison"
        )
