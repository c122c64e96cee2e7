"""Pure-Python reference kernel for the SMD recursion.

The compiled extension in _speed.pyx implements the same contract; backend
selection happens in `backend`.  Both kernels consume noise that was drawn
ahead of time from the counter-based stream, so the two implementations see
identical random inputs and differ only in floating-point op scheduling.

Codes shared with the extension:
    geom: 0 euclid+box, 1 euclid+l2_ball, 2 entropy+simplex
    prob: 0 quadratic, 1 pwl_max, 2 l1, 3 linear
    bias: 0 none, 1 fixed_direction, 2 adversarial, 3 zeroth_order
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError


def _value(prob, a_diag, b_lin, planes_a, planes_c, shift, c_lin, x):
    if prob == 0:
        return 0.5 * float(np.sum(a_diag * x * x)) - float(b_lin @ x)
    if prob == 1:
        return float(np.max(planes_a @ x + planes_c))
    if prob == 2:
        return float(np.sum(np.abs(x - shift)))
    return float(c_lin @ x)


def _subgrad(prob, a_diag, b_lin, planes_a, planes_c, shift, c_lin, x):
    if prob == 0:
        return a_diag * x - b_lin
    if prob == 1:
        i = int(np.argmax(planes_a @ x + planes_c))
        return planes_a[i].copy()
    if prob == 2:
        return np.sign(x - shift)
    return c_lin.copy()


def _mirror_step(geom, lo, hi, center, radius, floor, x, g, alpha):
    if geom == 0:
        return np.clip(x - alpha * g, lo, hi)
    if geom == 1:
        y = x - alpha * g
        d = y - center
        n = float(np.linalg.norm(d))
        if n <= radius:
            return y
        return center + (radius / n) * d
    e = -alpha * g
    w = x * np.exp(e - np.max(e))
    w /= np.sum(w)
    w = np.maximum(w, floor)
    return w / np.sum(w)


def run_loop(
    geom, prob, bias,
    lo, hi, center, radius, floor,
    a_diag, b_lin, planes_a, planes_c, shift, c_lin,
    f_star, x_star,
    bias_mag, bias_dir, mu_arr,
    zeta, zo_u,
    alpha, x0, rec_idx,
    want_x, want_gtilde,
):
    """Run T steps; record at the 1-based step indices in rec_idx (sorted).

    Returns (gap_x, gap_z, x_rec, z_rec, gtilde_rec) with the x/gtilde slots
    None when not requested.
    """
    T = alpha.shape[0]
    dim = x0.shape[0]
    m = rec_idx.shape[0]
    gap_x = np.empty(m)
    gap_z = np.empty(m)
    x_rec = np.empty((m, dim)) if want_x else None
    z_rec = np.empty((m, dim)) if want_x else None
    gt_rec = np.empty((m, dim)) if want_gtilde else None

    x = x0.astype(np.float64).copy()
    z = np.zeros(dim)
    A = 0.0
    rp = 0
    for t in range(1, T + 1):
        a_t = alpha[t - 1]
        A += a_t
        beta = a_t / A
        z = beta * x + (1.0 - beta) * z

        if bias == 3:
            u = zo_u[t - 1]
            fx = _value(prob, a_diag, b_lin, planes_a, planes_c, shift, c_lin, x)
            fp = _value(
                prob, a_diag, b_lin, planes_a, planes_c, shift, c_lin,
                x + mu_arr[t - 1] * u,
            )
            gtilde = ((fp - fx) / mu_arr[t - 1]) * u + zeta[t - 1]
        else:
            gtilde = _subgrad(
                prob, a_diag, b_lin, planes_a, planes_c, shift, c_lin, x
            ) + zeta[t - 1]
            if bias == 1:
                gtilde = gtilde + bias_mag[t - 1] * bias_dir
            elif bias == 2:
                d = x_star - x
                if geom == 2:
                    gtilde = gtilde + bias_mag[t - 1] * np.sign(d)
                else:
                    n = float(np.linalg.norm(d))
                    if n > 0:
                        gtilde = gtilde + (bias_mag[t - 1] / n) * d

        if rp < m and rec_idx[rp] == t:
            gx = _value(prob, a_diag, b_lin, planes_a, planes_c, shift, c_lin, x)
            gz = _value(prob, a_diag, b_lin, planes_a, planes_c, shift, c_lin, z)
            gap_x[rp] = gx - f_star
            gap_z[rp] = gz - f_star
            if want_x:
                x_rec[rp] = x
                z_rec[rp] = z
            if want_gtilde:
                gt_rec[rp] = gtilde
            rp += 1

        x = _mirror_step(geom, lo, hi, center, radius, floor, x, gtilde, a_t)
        if not np.all(np.isfinite(x)):
            raise NumericalError(f"non-finite iterate at step {t}", step=t)

    return gap_x, gap_z, x_rec, z_rec, gt_rec
