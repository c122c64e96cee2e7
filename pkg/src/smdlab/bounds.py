"""Closed-form concentration bounds and iteration thresholds.

Everything here is deterministic arithmetic over power-law step and bias
schedules alpha(t) = alpha0 t**-k, B(t) = B0 t**-q.  Infinite series are
evaluated as an exact partial sum to T_max plus integral tail brackets, and
every quantity is taken at the conservative end of its bracket: probability
bounds use the end that makes them larger, iteration thresholds the end
that makes them later.

The bias attenuation constant is

    K = exp(-sum_k 2 alpha(k) B(k) / sigma_R),

and tau(t) = (eps/3) K A(t) with A(t) the step-size partial sum.  The
tail-probability bound `theorem4_bound` needs only second moments; the
sharper `theorem5_bound` additionally needs the sub-Gaussian constants
(nu1, nu2).  The corollary threshold solvers return the first iterations
from which each defining inequality holds, splitting the allowed failure
probability p1 = 1 - p evenly between the two bound terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, InputError
from .smd import StepSchedule

DEFAULT_T_MAX = 10**6
DEFAULT_KAPPA1 = 3.0  # ||a+b+c||^2 <= 3(||a||^2+||b||^2+||c||^2), any norm


def _tail_bracket(coef: float, s: float, T: int) -> tuple[float, float]:
    """Bracket coef * sum_{k > T} k**-s by integral bounds; inf when s <= 1."""
    if coef == 0.0:
        return 0.0, 0.0
    if s <= 1.0:
        return math.inf, math.inf
    return (
        coef * float(T + 1) ** (1.0 - s) / (s - 1.0),
        coef * float(T) ** (1.0 - s) / (s - 1.0),
    )


class SumCache:
    """Prefix sums of the schedule series up to T_max, shared read-only."""

    def __init__(self, alpha0, k, B0, q, T_max=DEFAULT_T_MAX):
        self.alpha0, self.k, self.B0, self.q = alpha0, k, B0, q
        self.T_max = int(T_max)
        t = np.arange(1, self.T_max + 1, dtype=np.float64)
        a = alpha0 * t**-k
        b = B0 * t**-q
        self._A = np.cumsum(a)
        self._a2 = np.cumsum(a * a)
        self._ab = np.cumsum(a * b)
        self._a2b2 = np.cumsum(a * a * b * b)
        self._a4 = np.cumsum(a**4)

    def _at(self, arr, t):
        t = int(t)
        if not 1 <= t <= self.T_max:
            raise InputError(f"t={t} outside [1, T_max={self.T_max}]")
        return float(arr[t - 1])

    def A(self, t):
        return self._at(self._A, t)

    def sum_a2(self, t):
        return self._at(self._a2, t)

    def sum_ab(self, t):
        return self._at(self._ab, t)

    def sum_a2b2(self, t):
        return self._at(self._a2b2, t)

    def sum_a4(self, t):
        return self._at(self._a4, t)

    def total_ab(self) -> tuple[float, float]:
        """(lower, upper) bracket of sum_{k>=1} alpha(k) B(k)."""
        partial = float(self._ab[-1])
        lo, hi = _tail_bracket(self.alpha0 * self.B0, self.k + self.q, self.T_max)
        return partial + lo, partial + hi


@dataclass
class BoundParams:
    """All constants feeding the concentration bounds and thresholds."""

    sigma_r: float
    nu: float
    G: float
    D: float
    R_sup: float
    sched: StepSchedule
    B0: float = 0.0
    q: float = 0.0
    kappa1: float = DEFAULT_KAPPA1
    nu1: float | None = None
    nu2: float | None = None
    a_ceiling: float | None = None
    T_max: int = DEFAULT_T_MAX

    def __post_init__(self):
        for name in ("sigma_r", "G", "D", "R_sup", "kappa1"):
            if getattr(self, name) <= 0:
                raise InputError(f"{name} must be positive")
        if self.nu < 0 or self.B0 < 0:
            raise InputError("nu and B0 must be nonnegative")
        if self.a_ceiling is None:
            # Default: the Theorem-5 precondition holds with equality at t=1
            # (alpha is nonincreasing, so then it holds for every t).
            self.a_ceiling = 2.0 * self.sigma_r / (
                self.sched.alpha0**2 * self.kappa1
            )
        elif (self.sched.alpha0**2 * self.kappa1 / (2.0 * self.sigma_r)
              > 1.0 / self.a_ceiling + 1e-15):
            raise ConfigurationError(
                "a_ceiling violates alpha(t)^2 kappa1 / (2 sigma_R) <= 1/a"
            )

    @cached_property
    def cache(self) -> SumCache:
        return SumCache(self.sched.alpha0, self.sched.k, self.B0, self.q,
                        self.T_max)

    def require_subgaussian(self):
        if self.nu1 is None or self.nu2 is None:
            raise ConfigurationError(
                "sub-Gaussian bounds need nu1 and nu2 declared"
            )


def params_from(problem, geom, noise, bias, sched, kappa1=None, nu2=None,
                T_max=DEFAULT_T_MAX) -> BoundParams:
    """Assemble BoundParams from model objects.

    A zeroth-order bias enters through its declared envelope c_zo * mu(t),
    which is itself a power law.
    """
    if bias.kind == "zeroth_order":
        B0, q = bias.c_zo * bias.smoothing.mu0, bias.smoothing.r
    else:
        B0, q = (bias.B0, bias.q) if bias.kind != "none" else (0.0, 0.0)
    return BoundParams(
        sigma_r=geom.sigma_r,
        nu=noise.nu,
        G=problem.g_bound,
        D=geom.set.diameter(geom.pair),
        R_sup=geom.set.bregman_radius(geom.mirror_map),
        sched=sched,
        B0=B0,
        q=q,
        kappa1=DEFAULT_KAPPA1 if kappa1 is None else kappa1,
        nu1=noise.nu1,
        nu2=nu2,
        T_max=T_max,
    )


@dataclass(frozen=True)
class KResult:
    K: float  # conservative (smaller) value exp(-S_upper)
    err: float  # exp(-S_lower) - exp(-S_upper)
    diverged: bool
    S_lo: float = 0.0
    S_hi: float = 0.0


def compute_K(params: BoundParams) -> KResult:
    """K = exp(-sum 2 alpha(k) B(k) / sigma_R); K = 0 with a flag on divergence."""
    if params.B0 == 0.0:
        return KResult(K=1.0, err=0.0, diverged=False)
    if params.sched.k + params.q <= 1.0:
        return KResult(K=0.0, err=0.0, diverged=True, S_lo=math.inf,
                       S_hi=math.inf)
    lo, hi = params.cache.total_ab()
    s_lo = 2.0 * lo / params.sigma_r
    s_hi = 2.0 * hi / params.sigma_r
    return KResult(K=math.exp(-s_hi), err=math.exp(-s_lo) - math.exp(-s_hi),
                   diverged=False, S_lo=s_lo, S_hi=s_hi)


def tau(params: BoundParams, t, eps) -> float:
    """The event-splitting threshold (eps/3) K A(t), with the conservative K."""
    if t < 1 or eps <= 0:
        raise InputError("need t >= 1 and eps > 0")
    return (eps / 3.0) * compute_K(params).K * params.cache.A(t)


@dataclass(frozen=True)
class BoundValue:
    raw: float
    clipped: float
    applicable: bool | None = None  # t >= t0, when t0 was supplied


def theorem4_bound(params: BoundParams, t, eps, t0=None) -> BoundValue:
    """Second-moment tail bound on P(f(z(t)) - f* >= eps)."""
    if t < 1 or eps <= 0:
        raise InputError("need t >= 1 and eps > 0")
    kr = compute_K(params)
    if kr.diverged:
        return BoundValue(raw=math.inf, clipped=1.0,
                          applicable=False if t0 is not None else None)
    c = params.cache
    A = c.A(t)
    term1 = (3.0 * params.nu**2 * c.sum_a2(t)) / (
        2.0 * params.sigma_r * eps * kr.K * A
    )
    noise_sum = (params.nu**2 + params.G**2) * c.sum_a2(t) + c.sum_a2b2(t)
    term2 = (9.0 * params.D**2 * params.kappa1 * noise_sum) / (
        eps**2 * kr.K**2 * A**2
    )
    raw = term1 + term2
    return BoundValue(raw=raw, clipped=min(1.0, raw),
                      applicable=None if t0 is None else bool(t >= t0))


def theorem5_bound(params: BoundParams, t, eps, t0=None) -> BoundValue:
    """Sub-Gaussian (Chernoff) tail bound; evaluated in log space."""
    if t < 1 or eps <= 0:
        raise InputError("need t >= 1 and eps > 0")
    params.require_subgaussian()
    kr = compute_K(params)
    if kr.diverged:
        return BoundValue(raw=math.inf, clipped=1.0,
                          applicable=False if t0 is not None else None)
    c = params.cache
    A = c.A(t)
    lt1 = -((eps * kr.K * A) ** 2) / (
        18.0 * params.D**2 * params.nu1**2 * c.sum_a2(t)
    )
    kappa = params.kappa1
    sig = params.sigma_r
    growth = (kappa / (2.0 * sig)) * (
        params.G**2 * c.sum_a2(t)
        + c.sum_a2b2(t)
        + (params.nu2**2 * kappa / (4.0 * sig)) * c.sum_a4(t)
    )
    lt2 = growth - (eps / 3.0) * kr.K * A
    raw = math.exp(min(lt1, 700.0)) + math.exp(min(lt2, 700.0))
    return BoundValue(raw=raw, clipped=min(1.0, raw),
                      applicable=None if t0 is None else bool(t >= t0))


@dataclass(frozen=True)
class ThresholdResult:
    t0: int | None
    t1: int | None
    t2: int | None
    resolved: bool

    @property
    def t_star(self) -> int | None:
        if not self.resolved:
            return None
        return max(self.t0, self.t1, self.t2)


def _first_holding(pred, T_max: int):
    """Smallest t in [1, T_max] with pred(t) true and pred(t-1) false.

    Doubling finds a bracket, bisection a crossing, and a downward walk pins
    the first one; None when pred never holds by T_max.
    """
    if pred(1):
        return 1
    if not pred(T_max):
        return None
    lo = 1
    hi = 2
    while hi < T_max and not pred(hi):
        lo = hi
        hi = min(2 * hi, T_max)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    while hi > 1 and pred(hi - 1):
        hi -= 1
    return hi


def _exp_S(params: BoundParams) -> float:
    """Conservative exp(+S): the upper bracket end, enlarging every RHS."""
    kr = compute_K(params)
    if kr.diverged:
        raise ConfigurationError("bias schedule diverges; thresholds undefined")
    return math.exp(kr.S_hi) if params.B0 > 0 else 1.0


def corollary2_times(params: BoundParams, eps, p) -> ThresholdResult:
    """Iteration thresholds guaranteeing P(f(z(t)) - f* < eps) >= p.

    t1 and t2 each force their bound term below p1/2 = (1-p)/2.
    """
    if not 0.0 < p < 1.0:
        raise InputError("confidence level p must lie in (0, 1)")
    if eps <= 0:
        raise InputError("eps must be positive")
    p1 = 1.0 - p
    E = _exp_S(params)
    c = params.cache
    rhs0 = lambda t: (3.0 / eps) * E * (params.R_sup + c.sum_ab(t))
    rhs1 = lambda t: (3.0 * params.nu**2 / (params.sigma_r * eps * p1)) \
        * E * c.sum_a2(t)
    rhs2 = lambda t: (18.0 * params.D**2 * params.kappa1 / (eps**2 * p1)) \
        * E * E * ((params.nu**2 + params.G**2) * c.sum_a2(t) + c.sum_a2b2(t))
    t0 = _first_holding(lambda t: c.A(t) >= rhs0(t), params.T_max)
    t1 = _first_holding(lambda t: c.A(t) >= rhs1(t), params.T_max)
    t2 = _first_holding(lambda t: c.A(t) ** 2 >= rhs2(t), params.T_max)
    resolved = None not in (t0, t1, t2)
    return ThresholdResult(t0=t0, t1=t1, t2=t2, resolved=resolved)


def corollary3_times(params: BoundParams, eps, p) -> ThresholdResult:
    """Sub-Gaussian thresholds; t0 is identical to the second-moment one."""
    if not 0.0 < p < 1.0:
        raise InputError("confidence level p must lie in (0, 1)")
    if eps <= 0:
        raise InputError("eps must be positive")
    params.require_subgaussian()
    p1 = 1.0 - p
    E = _exp_S(params)
    c = params.cache
    log_term = math.log(2.0 / p1)
    kappa = params.kappa1
    sig = params.sigma_r
    rhs0 = lambda t: (3.0 / eps) * E * (params.R_sup + c.sum_ab(t))
    rhs1 = lambda t: (18.0 * params.D**2 * params.nu1**2 / eps**2) \
        * log_term * E * E * c.sum_a2(t)
    rhs2 = lambda t: (3.0 / eps) * E * (
        log_term
        + (kappa / (2.0 * sig)) * (
            params.G**2 * c.sum_a2(t)
            + c.sum_a2b2(t)
            + (params.nu2**2 * kappa / (4.0 * sig)) * c.sum_a4(t)
        )
    )
    t0 = _first_holding(lambda t: c.A(t) >= rhs0(t), params.T_max)
    t1 = _first_holding(lambda t: c.A(t) ** 2 >= rhs1(t), params.T_max)
    t2 = _first_holding(lambda t: c.A(t) >= rhs2(t), params.T_max)
    resolved = None not in (t0, t1, t2)
    return ThresholdResult(t0=t0, t1=t1, t2=t2, resolved=resolved)
