"""Norm pairs, mirror maps, constraint sets and closed-form mirror steps.

The mirror-descent subproblem

    x+ = argmin_{u in X} <g, u - x> + (1/alpha) * D_R(u, x)

is solved exactly for the three supported (mirror map, set) pairings:
Euclidean + box, Euclidean + L2 ball, negative entropy + simplex.  No
generic inner solver is provided; exactness keeps the optimality-residual
diagnostics sharp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InputError

MEMBERSHIP_TOL = 1e-12


def _check_finite(name, v):
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} has non-finite entries")
    return v


@dataclass(frozen=True)
class NormPair:
    """A primal norm together with its dual: L2 <-> L2 or L1 <-> Linf."""

    primal_id: str  # "l2" or "l1"

    def __post_init__(self):
        if self.primal_id not in ("l2", "l1"):
            raise ConfigurationError(f"unknown primal norm {self.primal_id!r}")

    @property
    def dual_id(self) -> str:
        return "l2" if self.primal_id == "l2" else "linf"

    def primal(self, v) -> float:
        v = _check_finite("vector", v)
        if self.primal_id == "l2":
            return float(np.linalg.norm(v))
        return float(np.sum(np.abs(v)))

    def dual(self, v) -> float:
        v = _check_finite("vector", v)
        if self.primal_id == "l2":
            return float(np.linalg.norm(v))
        return float(np.max(np.abs(v))) if v.size else 0.0

    def dual_argmax(self, d) -> np.ndarray:
        """A vector u with dual(u) <= 1 and <u, d> = primal(d).

        Returns the zero vector when d = 0.
        """
        d = _check_finite("vector", d)
        if self.primal_id == "l2":
            n = np.linalg.norm(d)
            return d / n if n > 0 else np.zeros_like(d)
        return np.sign(d)


L2_PAIR = NormPair("l2")
L1_PAIR = NormPair("l1")


def dual_norm(pair: NormPair, v) -> float:
    return pair.dual(v)


@dataclass(frozen=True)
class MirrorMap:
    """Strongly convex generator R; Euclidean half-square or negative entropy.

    sigma_r = 1 in both cases: trivially for 0.5*||x||_2^2 w.r.t. L2, and by
    Pinsker's inequality for sum(x log x) w.r.t. L1 on the simplex.
    """

    kind: str  # "euclidean" or "neg_entropy"
    entropy_floor: float = 1e-12

    def __post_init__(self):
        if self.kind not in ("euclidean", "neg_entropy"):
            raise ConfigurationError(f"unknown mirror map {self.kind!r}")
        if self.entropy_floor <= 0:
            raise InputError("entropy_floor must be positive")

    @property
    def sigma_r(self) -> float:
        return 1.0

    def _check_domain(self, name, x):
        x = _check_finite(name, x)
        # Renormalizing after the floor clamp can leave coordinates a hair
        # under the floor; half the floor is the real domain boundary here.
        if self.kind == "neg_entropy" and np.any(x < 0.5 * self.entropy_floor):
            raise InputError(
                f"{name} outside the entropy domain (coordinate < entropy_floor)"
            )
        return x

    def value(self, x) -> float:
        x = self._check_domain("x", x)
        if self.kind == "euclidean":
            return 0.5 * float(x @ x)
        return float(np.sum(x * np.log(x)))

    def grad(self, x) -> np.ndarray:
        x = self._check_domain("x", x)
        if self.kind == "euclidean":
            return x.copy()
        return 1.0 + np.log(x)

    def bregman(self, x, y) -> float:
        x = self._check_domain("x", x)
        y = self._check_domain("y", y)
        if self.kind == "euclidean":
            d = x - y
            return 0.5 * float(d @ d)
        # Generalized KL; the linear terms cancel on the simplex but keeping
        # them makes the value correct off it too.
        return float(np.sum(x * np.log(x / y)) - np.sum(x) + np.sum(y))


def bregman(mirror_map: MirrorMap, x, y) -> float:
    return mirror_map.bregman(x, y)


def three_point_residual(mirror_map: MirrorMap, x, y, z) -> float:
    """|LHS - RHS| of D(z,y) - D(z,x) - D(x,y) = <gradR(x) - gradR(y), z - x>."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    lhs = (
        mirror_map.bregman(z, y)
        - mirror_map.bregman(z, x)
        - mirror_map.bregman(x, y)
    )
    rhs = float((mirror_map.grad(x) - mirror_map.grad(y)) @ (z - x))
    return abs(lhs - rhs)


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """Box, L2 ball or probability simplex; convex and compact."""

    kind: str  # "box", "l2_ball", "simplex"
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    center: np.ndarray | None = None
    radius: float | None = None
    dim: int = 0

    @staticmethod
    def box(lo, hi) -> "ConstraintSet":
        lo = _check_finite("lo", lo)
        hi = _check_finite("hi", hi)
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ConfigurationError("box needs lo < hi coordinate-wise")
        return ConstraintSet("box", lo=lo, hi=hi, dim=lo.size)

    @staticmethod
    def l2_ball(center, radius) -> "ConstraintSet":
        center = _check_finite("center", center)
        if radius <= 0:
            raise ConfigurationError("ball radius must be positive")
        return ConstraintSet(
            "l2_ball", center=center, radius=float(radius), dim=center.size
        )

    @staticmethod
    def simplex(dim) -> "ConstraintSet":
        if dim < 2:
            raise ConfigurationError("simplex needs dim >= 2")
        return ConstraintSet("simplex", dim=int(dim))

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = _check_finite("x", x)
        if x.size != self.dim:
            return False
        if self.kind == "box":
            return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))
        if self.kind == "l2_ball":
            return float(np.linalg.norm(x - self.center)) <= self.radius + tol
        return bool(np.all(x >= -tol) and abs(float(np.sum(x)) - 1.0) <= tol)

    def diameter(self, pair: NormPair) -> float:
        if self.kind == "box":
            return pair.primal(self.hi - self.lo)
        if self.kind == "l2_ball":
            return 2.0 * self.radius
        # Simplex under L1; the supported pairing.
        return 2.0

    def bregman_radius(self, mirror_map: MirrorMap) -> float:
        """sup of D_R(x, y) over the set (entropy: over the floored simplex)."""
        if mirror_map.kind == "euclidean":
            if self.kind == "box":
                d = self.hi - self.lo
                return 0.5 * float(d @ d)
            if self.kind == "l2_ball":
                return 2.0 * self.radius**2
            raise ConfigurationError("euclidean map is not paired with simplex")
        if self.kind != "simplex":
            raise ConfigurationError("neg_entropy map requires the simplex")
        return float(np.log(1.0 / mirror_map.entropy_floor))

    def analytic_center(self) -> np.ndarray:
        if self.kind == "box":
            return 0.5 * (self.lo + self.hi)
        if self.kind == "l2_ball":
            return self.center.copy()
        return np.full(self.dim, 1.0 / self.dim)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """A random feasible point; uniform for box/ball, Dirichlet(1) simplex."""
        if self.kind == "box":
            return rng.uniform(self.lo, self.hi)
        if self.kind == "l2_ball":
            d = rng.standard_normal(self.dim)
            d /= np.linalg.norm(d)
            return self.center + self.radius * rng.uniform() ** (1.0 / self.dim) * d
        return rng.dirichlet(np.ones(self.dim))


@dataclass(frozen=True, eq=False)
class Geometry:
    """A mirror map, its paired norm, and a constraint set with a closed-form step."""

    mirror_map: MirrorMap
    set: ConstraintSet
    pair: NormPair = field(init=False)

    def __post_init__(self):
        kind = (self.mirror_map.kind, self.set.kind)
        if kind not in (
            ("euclidean", "box"),
            ("euclidean", "l2_ball"),
            ("neg_entropy", "simplex"),
        ):
            raise ConfigurationError(f"unsupported (map, set) pairing {kind}")
        pair = L2_PAIR if self.mirror_map.kind == "euclidean" else L1_PAIR
        object.__setattr__(self, "pair", pair)

    @property
    def sigma_r(self) -> float:
        return self.mirror_map.sigma_r

    def step(self, x, g, alpha) -> np.ndarray:
        return mirror_step(self.mirror_map, self.set, x, g, alpha)


def mirror_step(mirror_map: MirrorMap, cset: ConstraintSet, x, g, alpha) -> np.ndarray:
    """Exact minimizer of <g, u - x> + (1/alpha) D_R(u, x) over the set."""
    if alpha <= 0:
        raise InputError("alpha must be positive")
    x = _check_finite("x", x)
    g = _check_finite("g", g)
    if not cset.contains(x):
        raise InputError("x is not in the constraint set")
    kind = (mirror_map.kind, cset.kind)
    if kind == ("euclidean", "box"):
        return np.clip(x - alpha * g, cset.lo, cset.hi)
    if kind == ("euclidean", "l2_ball"):
        y = x - alpha * g
        d = y - cset.center
        n = float(np.linalg.norm(d))
        if n <= cset.radius:
            return y
        return cset.center + (cset.radius / n) * d
    if kind == ("neg_entropy", "simplex"):
        # Exponentiated-gradient update; subtract the max exponent before
        # exponentiating for overflow safety (cancels in the normalization).
        e = -alpha * g
        w = x * np.exp(e - np.max(e))
        w /= np.sum(w)
        w = np.maximum(w, mirror_map.entropy_floor)
        return w / np.sum(w)
    raise ConfigurationError(f"unsupported (map, set) pairing {kind}")
