# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel for the SMD recursion; contract identical to _loop.run_loop."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt, fabs, isfinite

from .errors import NumericalError


cdef double _value(int prob, double[::1] a_diag, double[::1] b_lin,
                   double[:, ::1] planes_a, double[::1] planes_c,
                   double[::1] shift, double[::1] c_lin,
                   double[::1] x, int dim) noexcept:
    cdef int i, j, m
    cdef double s = 0.0, best, v
    if prob == 0:
        for i in range(dim):
            s += 0.5 * a_diag[i] * x[i] * x[i] - b_lin[i] * x[i]
        return s
    if prob == 1:
        m = planes_c.shape[0]
        best = -1e300
        for j in range(m):
            v = planes_c[j]
            for i in range(dim):
                v += planes_a[j, i] * x[i]
            if v > best:
                best = v
        return best
    if prob == 2:
        for i in range(dim):
            s += fabs(x[i] - shift[i])
        return s
    for i in range(dim):
        s += c_lin[i] * x[i]
    return s


cdef void _subgrad(int prob, double[::1] a_diag, double[::1] b_lin,
                   double[:, ::1] planes_a, double[::1] planes_c,
                   double[::1] shift, double[::1] c_lin,
                   double[::1] x, int dim, double[::1] out) noexcept:
    cdef int i, j, m, best_j
    cdef double best, v, d
    if prob == 0:
        for i in range(dim):
            out[i] = a_diag[i] * x[i] - b_lin[i]
        return
    if prob == 1:
        m = planes_c.shape[0]
        best = -1e300
        best_j = 0
        for j in range(m):
            v = planes_c[j]
            for i in range(dim):
                v += planes_a[j, i] * x[i]
            if v > best:
                best = v
                best_j = j
        for i in range(dim):
            out[i] = planes_a[best_j, i]
        return
    if prob == 2:
        for i in range(dim):
            d = x[i] - shift[i]
            out[i] = 0.0 if d == 0.0 else (1.0 if d > 0.0 else -1.0)
        return
    for i in range(dim):
        out[i] = c_lin[i]


cdef void _mirror_step(int geom, double[::1] lo, double[::1] hi,
                       double[::1] center, double radius, double floor_,
                       double[::1] x, double[::1] g, double alpha,
                       int dim, double[::1] out) noexcept:
    cdef int i
    cdef double y, n = 0.0, s = 0.0, emax, e
    if geom == 0:
        for i in range(dim):
            y = x[i] - alpha * g[i]
            if y < lo[i]:
                y = lo[i]
            elif y > hi[i]:
                y = hi[i]
            out[i] = y
        return
    if geom == 1:
        for i in range(dim):
            out[i] = x[i] - alpha * g[i]
            n += (out[i] - center[i]) * (out[i] - center[i])
        n = sqrt(n)
        if n > radius:
            for i in range(dim):
                out[i] = center[i] + (radius / n) * (out[i] - center[i])
        return
    emax = -alpha * g[0]
    for i in range(1, dim):
        e = -alpha * g[i]
        if e > emax:
            emax = e
    for i in range(dim):
        out[i] = x[i] * exp(-alpha * g[i] - emax)
        s += out[i]
    for i in range(dim):
        out[i] /= s
    s = 0.0
    for i in range(dim):
        if out[i] < floor_:
            out[i] = floor_
        s += out[i]
    for i in range(dim):
        out[i] /= s


def run_loop(
    int geom, int prob, int bias,
    lo_a, hi_a, center_a, double radius, double floor_,
    a_diag_a, b_lin_a, planes_a_a, planes_c_a, shift_a, c_lin_a,
    double f_star, x_star_a,
    bias_mag_a, bias_dir_a, mu_a,
    zeta_a, zo_u_a,
    alpha_a, x0_a, rec_idx_a,
    bint want_x, bint want_gtilde,
):
    cdef double[::1] lo = lo_a, hi = hi_a, center = center_a
    cdef double[::1] a_diag = a_diag_a, b_lin = b_lin_a
    cdef double[:, ::1] planes_a = planes_a_a
    cdef double[::1] planes_c = planes_c_a, shift = shift_a, c_lin = c_lin_a
    cdef double[::1] x_star = x_star_a, bias_mag = bias_mag_a
    cdef double[::1] bias_dir = bias_dir_a, mu_arr = mu_a
    cdef double[:, ::1] zeta = zeta_a, zo_u = zo_u_a
    cdef double[::1] alpha = alpha_a
    cdef cnp.int64_t[::1] rec_idx = rec_idx_a

    cdef int T = alpha.shape[0]
    cdef int dim = x0_a.shape[0]
    cdef int m = rec_idx.shape[0]

    gap_x_a = np.empty(m)
    gap_z_a = np.empty(m)
    x_rec_a = np.empty((m, dim)) if want_x else None
    z_rec_a = np.empty((m, dim)) if want_x else None
    gt_rec_a = np.empty((m, dim)) if want_gtilde else None
    cdef double[::1] gap_x = gap_x_a, gap_z = gap_z_a
    cdef double[:, ::1] x_rec = x_rec_a if want_x else np.empty((0, dim))
    cdef double[:, ::1] z_rec = z_rec_a if want_x else np.empty((0, dim))
    cdef double[:, ::1] gt_rec = gt_rec_a if want_gtilde else np.empty((0, dim))

    x_buf = np.array(x0_a, dtype=np.float64)
    cdef double[::1] x = x_buf
    cdef double[::1] z = np.zeros(dim)
    cdef double[::1] g = np.empty(dim)
    cdef double[::1] xp = np.empty(dim)
    cdef double[::1] xn = np.empty(dim)

    cdef double A = 0.0, a_t, beta, fx, fp, mu, d, n, mag
    cdef int t, i, rp = 0, bad = 0

    for t in range(1, T + 1):
        a_t = alpha[t - 1]
        A += a_t
        beta = a_t / A
        for i in range(dim):
            z[i] = beta * x[i] + (1.0 - beta) * z[i]

        if bias == 3:
            mu = mu_arr[t - 1]
            fx = _value(prob, a_diag, b_lin, planes_a, planes_c, shift, c_lin, x, dim)
            for i in range(dim):
                xp[i] = x[i] + mu * zo_u[t - 1, i]
            fp = _value(prob, a_diag, b_lin, planes_a, planes_c, shift, c_lin, xp, dim)
            for i in range(dim):
                g[i] = ((fp - fx) / mu) * zo_u[t - 1, i] + zeta[t - 1, i]
        else:
            _subgrad(prob, a_diag, b_lin, planes_a, planes_c, shift, c_lin, x, dim, g)
            for i in range(dim):
                g[i] += zeta[t - 1, i]
            if bias == 1:
                mag = bias_mag[t - 1]
                for i in range(dim):
                    g[i] += mag * bias_dir[i]
            elif bias == 2:
                mag = bias_mag[t - 1]
                if geom == 2:
                    for i in range(dim):
                        d = x_star[i] - x[i]
                        if d > 0.0:
                            g[i] += mag
                        elif d < 0.0:
                            g[i] -= mag
                else:
                    n = 0.0
                    for i in range(dim):
                        d = x_star[i] - x[i]
                        n += d * d
                    n = sqrt(n)
                    if n > 0.0:
                        for i in range(dim):
                            g[i] += (mag / n) * (x_star[i] - x[i])

        if rp < m and rec_idx[rp] == t:
            fx = _value(prob, a_diag, b_lin, planes_a, planes_c, shift, c_lin, x, dim)
            fp = _value(prob, a_diag, b_lin, planes_a, planes_c, shift, c_lin, z, dim)
            gap_x[rp] = fx - f_star
            gap_z[rp] = fp - f_star
            if want_x:
                for i in range(dim):
                    x_rec[rp, i] = x[i]
                    z_rec[rp, i] = z[i]
            if want_gtilde:
                for i in range(dim):
                    gt_rec[rp, i] = g[i]
            rp += 1

        _mirror_step(geom, lo, hi, center, radius, floor_, x, g, a_t, dim, xn)
        for i in range(dim):
            if not isfinite(xn[i]):
                bad = t
            x[i] = xn[i]
        if bad:
            raise NumericalError(f"non-finite iterate at step {bad}", step=bad)

    return gap_x_a, gap_z_a, x_rec_a, z_rec_a, gt_rec_a
