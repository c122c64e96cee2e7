"""Biased stochastic subgradient oracles and empirical moment diagnostics.

The oracle emits gtilde(t) = g(t) + b(t) + zeta(t): the true subgradient, a
deterministic bias with dual norm exactly B(t) = B0 * t**-q, and zero-mean
noise.  Zeroth-order smoothing replaces the whole sum with the Gaussian
finite-difference estimator; its bias has no closed form and is covered by a
user-declared envelope c_zo * mu(t) that `estimate_moments` can validate.

All randomness is driven through uniforms and inverse-CDF transforms so
that every draw consumes a fixed, known number of stream values (see rng).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri, stdtrit

from .errors import ConfigurationError, InputError
from .geometry import NormPair
from .problems import Problem
from . import rng as rngmod

BIAS_KINDS = ("none", "fixed_direction", "adversarial", "zeroth_order")
NOISE_KINDS = ("gaussian", "bounded_uniform", "student_t")


@dataclass(frozen=True)
class SmoothingSchedule:
    """mu(t) = mu0 * t**-r; positive and nonincreasing."""

    mu0: float
    r: float = 1.0

    def __post_init__(self):
        if self.mu0 <= 0 or self.r < 0:
            raise InputError("need mu0 > 0 and r >= 0")

    def mu(self, t) -> float:
        return self.mu0 * float(t) ** -self.r


@dataclass(frozen=True, eq=False)
class BiasModel:
    kind: str = "none"
    B0: float = 0.0
    q: float = 0.0
    direction: np.ndarray | None = None  # fixed_direction only; any nonzero vector
    c_zo: float = 0.0  # zeroth_order envelope constant
    smoothing: SmoothingSchedule | None = None  # zeroth_order only

    def __post_init__(self):
        if self.kind not in BIAS_KINDS:
            raise ConfigurationError(f"unknown bias kind {self.kind!r}")
        if self.kind == "fixed_direction" and self.direction is None:
            raise ConfigurationError("fixed_direction bias needs a direction")
        if self.kind == "zeroth_order" and (self.smoothing is None or self.c_zo <= 0):
            raise ConfigurationError("zeroth_order bias needs smoothing and c_zo")


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "gaussian"
    sigma: float = 0.0  # gaussian
    radius: float = 0.0  # bounded_uniform (L2 ball)
    dof: float = 3.0  # student_t
    scale: float = 1.0  # student_t
    nu: float = 0.0  # declared bound: E[||gtilde||_*^2 | .] <= nu^2
    nu1: float | None = None  # sub-Gaussian parameter, when declared

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ConfigurationError(f"unknown noise kind {self.kind!r}")

    def is_zero(self) -> bool:
        return (self.kind == "gaussian" and self.sigma == 0.0) or (
            self.kind == "bounded_uniform" and self.radius == 0.0
        )


def bias_bound(bias: BiasModel, t) -> float:
    """B(t): the exact dual-norm bias magnitude (envelope for zeroth_order)."""
    if t < 1:
        raise InputError("t must be >= 1")
    if bias.kind == "none":
        return 0.0
    if bias.kind == "zeroth_order":
        return bias.c_zo * bias.smoothing.mu(t)
    return bias.B0 * float(t) ** -bias.q


def bias_vector(bias: BiasModel, pair: NormPair, x, x_star, t) -> np.ndarray:
    """b(t) with ||b(t)||_* = B(t) exactly, for the explicit bias kinds."""
    x = np.asarray(x, dtype=np.float64)
    if bias.kind == "none":
        return np.zeros_like(x)
    if bias.kind == "zeroth_order":
        raise ConfigurationError("zeroth_order bias is implicit; use zo_sample")
    mag = bias_bound(bias, t)
    if bias.kind == "fixed_direction":
        d = np.asarray(bias.direction, dtype=np.float64)
        nd = pair.dual(d)
        if nd == 0:
            raise ConfigurationError("fixed_direction bias direction is zero")
        return (mag / nd) * d
    # adversarial: dual-unit direction aligned with x_star - x, refreshed
    # every step.
    return mag * pair.dual_argmax(np.asarray(x_star, dtype=np.float64) - x)


def noise_from_uniforms(noise: NoiseModel, u: np.ndarray, dim: int) -> np.ndarray:
    """Map uniform rows (n, >= dim+1) to noise draws (n, dim), fixed consumption."""
    u = np.atleast_2d(u)
    if noise.kind == "gaussian":
        return noise.sigma * ndtri(u[:, :dim])
    if noise.kind == "bounded_uniform":
        d = ndtri(u[:, :dim])
        norms = np.linalg.norm(d, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        r = noise.radius * u[:, dim : dim + 1] ** (1.0 / dim)
        return r * d / norms
    return noise.scale * stdtrit(noise.dof, u[:, :dim])


def sample(bias: BiasModel, noise: NoiseModel, p: Problem, x, t,
           rng: np.random.Generator) -> np.ndarray:
    """One draw of gtilde(t) = subgrad(x) + b(t) + zeta; fixed rng consumption."""
    if t < 1:
        raise InputError("t must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    if not p.set.contains(x):
        raise InputError("x is not feasible")
    if bias.kind == "zeroth_order":
        raise ConfigurationError("zeroth_order oracles sample via zo_sample")
    u = rng.random(rngmod.draws_per_step(p.dim))
    zeta = noise_from_uniforms(noise, u[None, :], p.dim)[0]
    return p.subgrad(x) + bias_vector(bias, p.pair, x, p.x_star, t) + zeta


def zo_sample(p: Problem, x, mu, rng: np.random.Generator) -> np.ndarray:
    """Gaussian-smoothing gradient estimate ((f(x + mu u) - f(x)) / mu) u."""
    if mu <= 0:
        raise InputError("mu must be positive")
    x = np.asarray(x, dtype=np.float64)
    u = ndtri(rng.random(p.dim))
    return ((p.value(x + mu * u) - p.value(x)) / mu) * u


@dataclass(frozen=True)
class MomentEstimate:
    mean_dev: float  # ||sample mean of gtilde - subgrad - b(t)||_*
    m2: float  # mean ||gtilde||_*^2
    m4: float  # mean ||zeta||_*^4
    nu2_hat: float  # sqrt of (m4 + 3 standard errors)
    n: int


def estimate_moments(bias: BiasModel, noise: NoiseModel, p: Problem, x, t, n,
                     rng: np.random.Generator) -> MomentEstimate:
    """Monte Carlo moments of the oracle at a fixed (x, t)."""
    if n < 10_000:
        raise InputError("need n >= 1e4 samples")
    x = np.asarray(x, dtype=np.float64)
    g = p.subgrad(x)
    if bias.kind == "zeroth_order":
        mu = bias.smoothing.mu(t)
        u = ndtri(rng.random((n, p.dim)))
        fx = p.value(x)
        fd = np.array([(p.value(x + mu * ui) - fx) / mu for ui in u])
        gtilde = fd[:, None] * u
        center = g  # deviation of the mean from the true subgradient
    else:
        b = bias_vector(bias, p.pair, x, p.x_star, t)
        u = rng.random((n, rngmod.draws_per_step(p.dim)))
        gtilde = g + b + noise_from_uniforms(noise, u, p.dim)
        center = g + b
    zeta = gtilde - np.mean(gtilde, axis=0)
    if p.pair.dual_id == "l2":
        gt2 = np.sum(gtilde * gtilde, axis=1)
        z2 = np.sum(zeta * zeta, axis=1)
    else:
        gt2 = np.max(np.abs(gtilde), axis=1) ** 2
        z2 = np.max(np.abs(zeta), axis=1) ** 2
    z4 = z2 * z2
    m4 = float(np.mean(z4))
    se4 = float(np.std(z4) / np.sqrt(n))
    return MomentEstimate(
        mean_dev=p.pair.dual(np.mean(gtilde, axis=0) - center),
        m2=float(np.mean(gt2)),
        m4=m4,
        nu2_hat=float(np.sqrt(m4 + 3.0 * se4)),
        n=n,
    )


@dataclass(frozen=True)
class SubGaussianDiagnostic:
    passed: bool
    worst_ratio: float  # max over probes of empirical tail / Gaussian bound
    details: tuple  # (s multiple, direction index, p_hat, bound) per failure


def sub_gaussian_check(noise: NoiseModel, dim: int, n: int,
                       rng: np.random.Generator,
                       n_directions: int = 10) -> SubGaussianDiagnostic:
    """Test P(<u, zeta> >= s) <= exp(-s^2 / (2 nu1^2)) on random unit directions.

    A probe fails when the exact-binomial lower confidence limit (99%) of the
    empirical frequency exceeds the Gaussian tail bound.  StudentT(3) noise is
    the designated negative control and must fail at s = 3 nu1.
    """
    from scipy.stats import beta as beta_dist

    if noise.nu1 is None or noise.nu1 <= 0:
        raise ConfigurationError("sub-Gaussian check needs a declared nu1")
    nu1 = noise.nu1
    u = rng.random((n, rngmod.draws_per_step(dim)))
    zeta = noise_from_uniforms(noise, u, dim)
    failures = []
    worst = 0.0
    for j in range(n_directions):
        d = rng.standard_normal(dim)
        d /= np.linalg.norm(d)
        proj = zeta @ d
        for mult in (1.0, 2.0, 3.0):
            s = mult * nu1
            k = int(np.sum(proj >= s))
            bound = float(np.exp(-(s * s) / (2.0 * nu1 * nu1)))
            ci_low = 0.0 if k == 0 else float(beta_dist.ppf(0.005, k, n - k + 1))
            worst = max(worst, (k / n) / bound)
            if ci_low > bound:
                failures.append((mult, j, k / n, bound))
    return SubGaussianDiagnostic(
        passed=not failures, worst_ratio=worst, details=tuple(failures)
    )


def summability_partial_sum(sched_alpha0, sched_k, bias: BiasModel, T=10**6):
    """Partial sum of alpha(t) B(t) up to T plus an analytic power-law tail.

    The tail is +inf when k + q <= 1; the boundary case is reported, never
    asserted against.
    """
    t = np.arange(1, T + 1, dtype=np.float64)
    if bias.kind == "zeroth_order":
        b0 = bias.c_zo * bias.smoothing.mu0
        q = bias.smoothing.r
    else:
        b0 = bias.B0
        q = bias.q
    partial = float(np.sum(sched_alpha0 * t**-sched_k * b0 * t**-q))
    s = sched_k + q
    if b0 == 0:
        tail = 0.0
    elif s > 1:
        tail = sched_alpha0 * b0 * float(T) ** (1.0 - s) / (s - 1.0)
    else:
        tail = float("inf")
    return partial, tail
