"""Shared brute-force oracles for the test suite.

`grid_argmin_step` solves the mirror-step subproblem by dense grid search
with iterative refinement — deliberately independent of the closed forms in
the library so it can serve as their oracle.  The objective is evaluated
vectorized straight from its definition.
"""

import numpy as np

from smdlab.geometry import ConstraintSet, MirrorMap


def _objective_batch(mm: MirrorMap, x, g, alpha, U):
    lin = U @ g - float(g @ x)
    if mm.kind == "euclidean":
        d = U - x
        breg = 0.5 * np.sum(d * d, axis=1)
    else:
        # Generalized KL, defined for positive U rows.
        breg = (np.sum(U * np.log(U / x), axis=1)
                - np.sum(U, axis=1) + float(np.sum(x)))
    return lin + breg / alpha


def _box_grid(lo, hi, n):
    axes = [np.linspace(lo[i], hi[i], n) for i in range(lo.size)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_argmin_step(mm: MirrorMap, cset: ConstraintSet, x, g, alpha,
                     n=31, rounds=10) -> np.ndarray:
    """Brute-force argmin of <g, u-x> + D_R(u,x)/alpha over the set."""
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    d = cset.dim

    if cset.kind == "simplex":
        # Parameterize the first d-1 coordinates; refine around the incumbent.
        f = mm.entropy_floor
        lo = np.full(d - 1, f)
        hi = np.full(d - 1, 1.0 - f)
        best = None
        for _ in range(rounds):
            pts = _box_grid(lo, hi, n)
            last = 1.0 - pts.sum(axis=1)
            ok = last >= f
            pts, last = pts[ok], last[ok]
            if pts.shape[0] == 0:
                break
            full = np.concatenate([pts, last[:, None]], axis=1)
            vals = _objective_batch(mm, x, g, alpha, full)
            best = full[int(np.argmin(vals))]
            span = (hi - lo) * (2.5 / n)
            lo = np.maximum(best[:-1] - span, f)
            hi = np.minimum(best[:-1] + span, 1.0 - f)
        return best

    if cset.kind == "box":
        lo, hi = cset.lo.copy(), cset.hi.copy()
    else:  # l2_ball: search the bounding box, snapping exterior points inward
        lo = cset.center - cset.radius
        hi = cset.center + cset.radius
    best = None
    for _ in range(rounds):
        pts = _box_grid(lo, hi, n)
        if cset.kind == "l2_ball":
            dvec = pts - cset.center
            nn = np.linalg.norm(dvec, axis=1, keepdims=True)
            out = (nn > cset.radius).ravel()
            # Project exterior grid points radially so the boundary optimum
            # is reachable.
            pts = pts.copy()
            pts[out] = cset.center + cset.radius * dvec[out] / nn[out]
        vals = _objective_batch(mm, x, g, alpha, pts)
        best = pts[int(np.argmin(vals))]
        span = (hi - lo) * (2.5 / n)
        if cset.kind == "box":
            lo = np.maximum(best - span, cset.lo)
            hi = np.minimum(best + span, cset.hi)
        else:
            lo = best - span
            hi = best + span
    return best
