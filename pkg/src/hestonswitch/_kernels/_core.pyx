# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot numerical kernels.

Mirrors ``_ref`` exactly: same signatures, same pre-drawn noise inputs,
and sequential (cumulative) summation so results agree with the NumPy
fallback to rounding.
"""

import numpy as np

from libc.math cimport sqrt, log, exp, isfinite

from ._ref import ParticleDegeneracyError

BACKEND = "cython"

cdef double LOG_2PI = 1.8378770664093453


def simulate_path(double v0, double kappa, double theta, double sigma,
                  double rho, double r, double dt, double floor,
                  double[::1] z1, double[::1] zt):
    cdef Py_ssize_t n = z1.shape[0]
    v_arr = np.empty(n + 1)
    y_arr = np.empty(n + 1)
    cdef double[::1] v = v_arr
    cdef double[::1] y = y_arr
    cdef double sdt = sqrt(dt)
    cdef double rho_c = sqrt(1.0 - rho * rho)
    cdef double vp, sq, dw1, dw2, vn
    cdef Py_ssize_t k

    v[0] = v0 if v0 > floor else floor
    y[0] = 0.0
    for k in range(1, n + 1):
        vp = v[k - 1]
        sq = sqrt(vp)
        dw1 = sdt * z1[k - 1]
        dw2 = rho * dw1 + rho_c * sdt * zt[k - 1]
        vn = vp + kappa * (theta - vp) * dt + sigma * sq * dw2
        if vn < floor:
            vn = floor
        v[k] = vn
        y[k] = y[k - 1] + (r - 0.5 * vn) * dt + sq * dw1
    return v_arr, y_arr


def pf_step(double[::1] particles, double[::1] weights, double y_new,
            double y_prev, double u, double kappa, double theta,
            double sigma, double rho, double r, double dt, double floor,
            double[::1] z, double u01, double resample_frac):
    cdef Py_ssize_t n = particles.shape[0]
    prop_arr = np.empty(n)
    post_w_arr = np.empty(n)
    cdef double[::1] prop = prop_arr
    cdef double[::1] post_w = post_w_arr
    cdef double qscale = sigma * sigma * (1.0 - rho * rho) * dt
    cdef double srho = sigma * rho
    cdef double p, vp, drift, vn, rvar, resid, ll, maxll
    cdef double total, mean, var, ess, d, pos, cum
    cdef Py_ssize_t i, j
    cdef bint resampled

    maxll = -1e308
    for i in range(n):
        p = particles[i]
        vp = p if p > floor else floor
        drift = (p + kappa * (theta - p) * dt
                 - srho * (r - 0.5 * p) * dt + srho * u)
        vn = drift + sqrt(qscale * vp) * z[i]
        if vn < floor:
            vn = floor
        prop[i] = vn
        rvar = (vn if vn > floor else floor) * dt
        resid = y_new - (y_prev + (r - 0.5 * vn) * dt)
        ll = -0.5 * (LOG_2PI + log(rvar) + resid * resid / rvar)
        post_w[i] = ll
        if ll > maxll:
            maxll = ll

    total = 0.0
    for i in range(n):
        post_w[i] = weights[i] * exp(post_w[i] - maxll)
        total += post_w[i]
    if not isfinite(total) or total <= 0.0:
        raise ParticleDegeneracyError("particle degeneracy")

    mean = 0.0
    for i in range(n):
        post_w[i] /= total
        mean += post_w[i] * prop[i]
    var = 0.0
    ess = 0.0
    for i in range(n):
        d = prop[i] - mean
        var += post_w[i] * d * d
        ess += post_w[i] * post_w[i]
    if var < 1e-10:
        var = 1e-10
    ess = 1.0 / ess

    if ess < resample_frac * n:
        out_particles_arr = np.empty(n)
        out_weights_arr = np.full(n, 1.0 / n)
        out = out_particles_arr
        _systematic_resample(prop, post_w, u01, out)
        resampled = True
    else:
        out_particles_arr = prop_arr
        out_weights_arr = post_w_arr
        resampled = False
    return (prop_arr, post_w_arr, out_particles_arr, out_weights_arr,
            mean, var, ess, resampled)


cdef void _systematic_resample(double[::1] prop, double[::1] w, double u01,
                               double[::1] out):
    cdef Py_ssize_t n = prop.shape[0]
    cdef Py_ssize_t i, j = 0
    cdef double cum = w[0]
    cdef double pos
    for i in range(n):
        pos = (u01 + i) / n
        while cum < pos and j < n - 1:
            j += 1
            cum += w[j]
        out[i] = prop[j]


def d_terms(double[::1] parents, double[::1] parent_w, double[::1] prop,
            double[::1] prop_w, double kappa, double theta, double sigma,
            double rho, double r, double dt, double floor):
    cdef double qscale = sigma * sigma * (1.0 - rho * rho) * dt
    if qscale <= 0.0:
        raise ValueError("degenerate noise")
    cdef double a = 1.0 - kappa * dt + 0.5 * sigma * rho * dt
    cdef double c = -0.5 * dt
    cdef double qinv_bar = 0.0
    cdef double rinv_bar = 0.0
    cdef double p
    cdef Py_ssize_t i, n = parents.shape[0]
    for i in range(n):
        p = parents[i]
        qinv_bar += parent_w[i] / (qscale * (p if p > floor else floor))
    n = prop.shape[0]
    for i in range(n):
        p = prop[i]
        rinv_bar += prop_w[i] / (dt * (p if p > floor else floor))
    return a * a * qinv_bar, -a * qinv_bar, qinv_bar + c * c * rinv_bar
