"""Benchmark convex objectives with analytically known optima.

Each problem carries its exact optimal value f_star, an optimal point, and a
dual-norm subgradient bound G over its constraint set, so gap computations
and concentration-bound parameters never rely on estimation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import ConfigurationError, InputError
from .geometry import ConstraintSet, NormPair, _check_finite

GAP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Problem:
    kind: str  # "quadratic", "pwl_max", "l1", "linear_simplex"
    dim: int
    set: ConstraintSet
    pair: NormPair
    f_star: float
    g_bound: float
    x_star: np.ndarray
    # kind-specific parameters
    a_diag: np.ndarray | None = None
    b_lin: np.ndarray | None = None
    planes_a: np.ndarray | None = None  # (m, dim)
    planes_c: np.ndarray | None = None  # (m,)
    shift: np.ndarray | None = None
    c_lin: np.ndarray | None = None

    def value(self, x) -> float:
        x = _check_finite("x", x)
        if self.kind == "quadratic":
            return float(0.5 * np.sum(self.a_diag * x * x) - self.b_lin @ x)
        if self.kind == "pwl_max":
            return float(np.max(self.planes_a @ x + self.planes_c))
        if self.kind == "l1":
            return float(np.sum(np.abs(x - self.shift)))
        return float(self.c_lin @ x)

    def subgrad(self, x) -> np.ndarray:
        x = _check_finite("x", x)
        if self.kind == "quadratic":
            return self.a_diag * x - self.b_lin
        if self.kind == "pwl_max":
            # Deterministic selector: the active plane of smallest index.
            i = int(np.argmax(self.planes_a @ x + self.planes_c))
            return self.planes_a[i].copy()
        if self.kind == "l1":
            # Selector at kinks: 0 on zero coordinates.
            return np.sign(x - self.shift)
        return self.c_lin.copy()

    def gap(self, x) -> float:
        x = _check_finite("x", x)
        if not self.set.contains(x):
            raise InputError("x is not feasible")
        return self.value(x) - self.f_star


def _pwl_optimum(a, c, cset):
    """Exact min of max_i(a_i.x + c_i) over a box or simplex via LP.

    The optimum sits at a vertex of the epigraph polytope; HiGHS resolves it
    to well below the tolerances used anywhere downstream.
    """
    m, n = a.shape
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    a_ub = np.hstack([a, -np.ones((m, 1))])
    b_ub = -c
    if cset.kind == "box":
        bounds = [(cset.lo[i], cset.hi[i]) for i in range(n)] + [(None, None)]
        res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    elif cset.kind == "simplex":
        a_eq = np.zeros((1, n + 1))
        a_eq[0, :n] = 1.0
        bounds = [(0.0, 1.0)] * n + [(None, None)]
        res = linprog(
            cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
            bounds=bounds, method="highs",
        )
    else:
        raise ConfigurationError("pwl_max supports box and simplex sets only")
    if not res.success:
        raise ConfigurationError(f"pwl_max LP failed: {res.message}")
    return float(res.fun), np.asarray(res.x[:n], dtype=np.float64)


def make_problem(kind: str, cset: ConstraintSet, pair: NormPair, **params) -> Problem:
    """Build a problem with closed-form f_star, optimal point and G."""
    dim = cset.dim
    if kind == "quadratic":
        a = _check_finite("a_diag", params.pop("a_diag"))
        b = _check_finite("b_lin", params.pop("b_lin", np.zeros(dim)))
        if params:
            raise ConfigurationError(f"unknown quadratic params {sorted(params)}")
        if a.size != dim or b.size != dim or np.any(a <= 0):
            raise ConfigurationError("quadratic needs positive a_diag of set dim")
        if cset.kind != "box":
            raise ConfigurationError("quadratic f_star is closed-form on boxes only")
        x_star = np.clip(b / a, cset.lo, cset.hi)
        # Per coordinate the gradient a_i x_i - b_i is monotone, so its
        # extreme magnitude over the box is at an endpoint.
        gmax = np.maximum(np.abs(a * cset.lo - b), np.abs(a * cset.hi - b))
        prob = Problem(
            kind, dim, cset, pair,
            f_star=float(0.5 * np.sum(a * x_star * x_star) - b @ x_star),
            g_bound=pair.dual(gmax), x_star=x_star, a_diag=a, b_lin=b,
        )
    elif kind == "pwl_max":
        a = np.atleast_2d(_check_finite("planes_a", params.pop("planes_a")))
        c = np.atleast_1d(_check_finite("planes_c", params.pop("planes_c")))
        if params:
            raise ConfigurationError(f"unknown pwl_max params {sorted(params)}")
        if a.shape != (c.size, dim):
            raise ConfigurationError("planes_a must be (m, dim), planes_c (m,)")
        f_star, x_star = _pwl_optimum(a, c, cset)
        prob = Problem(
            kind, dim, cset, pair, f_star=f_star,
            g_bound=max(pair.dual(row) for row in a),
            x_star=x_star, planes_a=a, planes_c=c,
        )
    elif kind == "l1":
        shift = _check_finite("shift", params.pop("shift", np.zeros(dim)))
        if params:
            raise ConfigurationError(f"unknown l1 params {sorted(params)}")
        if not cset.contains(shift):
            raise ConfigurationError("l1 needs a feasible shift for f_star = 0")
        g = np.sqrt(dim) if pair.primal_id == "l2" else 1.0
        prob = Problem(
            kind, dim, cset, pair, f_star=0.0, g_bound=float(g),
            x_star=shift.copy(), shift=shift,
        )
    elif kind == "linear_simplex":
        c = _check_finite("c_lin", params.pop("c_lin"))
        if params:
            raise ConfigurationError(f"unknown linear_simplex params {sorted(params)}")
        if cset.kind != "simplex" or c.size != dim:
            raise ConfigurationError("linear_simplex needs a simplex set of c's dim")
        i = int(np.argmin(c))
        x_star = np.zeros(dim)
        x_star[i] = 1.0
        prob = Problem(
            kind, dim, cset, pair, f_star=float(c[i]),
            g_bound=pair.dual(c), x_star=x_star, c_lin=c,
        )
    else:
        raise ConfigurationError(f"unknown problem kind {kind!r}")
    return prob
