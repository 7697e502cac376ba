"""Pure NumPy implementation of the hot numerical kernels.

This is the fallback backend used when the compiled extension is not
available. Both backends share one contract:

* all randomness is passed in as pre-drawn arrays, so a fixed seed gives
  the same result on either backend;
* weight totals are taken from the running cumulative sum so that the
  compiled sequential loops and the vectorised code agree to rounding.
"""

import numpy as np

BACKEND = "python"

_LOG_2PI = float(np.log(2.0 * np.pi))


class ParticleDegeneracyError(RuntimeError):
    """All particle weights underflowed to zero."""


def simulate_path(v0, kappa, theta, sigma, rho, r, dt, floor, z1, zt):
    """Generate one variance/log-price path from pre-drawn normals.

    ``z1`` drives the observed log-price; ``zt`` is the independent
    component of the variance shock. Returns ``(v, y)`` arrays of length
    ``len(z1) + 1`` with ``y[0] = 0``.
    """
    n = z1.shape[0]
    v = np.empty(n + 1)
    y = np.empty(n + 1)
    v[0] = max(v0, floor)
    y[0] = 0.0
    sdt = np.sqrt(dt)
    rho_c = np.sqrt(1.0 - rho * rho)
    for k in range(1, n + 1):
        vp = v[k - 1]
        sq = np.sqrt(vp)
        dw1 = sdt * z1[k - 1]
        dw2 = rho * dw1 + rho_c * sdt * zt[k - 1]
        vn = vp + kappa * (theta - vp) * dt + sigma * sq * dw2
        if vn < floor:
            vn = floor
        v[k] = vn
        y[k] = y[k - 1] + (r - 0.5 * vn) * dt + sq * dw1
    return v, y


def pf_step(particles, weights, y_new, y_prev, u, kappa, theta, sigma, rho,
            r, dt, floor, z, u01, resample_frac):
    """One bootstrap particle filter step for the variance state.

    Particles are propagated through the observed-increment transition,
    weighted by the Gaussian likelihood of ``y_new`` (noise scale taken at
    the propagated particle), and systematically resampled when the
    effective sample size drops below ``resample_frac * n``.

    Returns ``(prop, post_w, out_particles, out_weights, mean, var, ess,
    resampled)`` where ``prop``/``post_w`` describe the weighted cloud
    before any resampling.
    """
    n = particles.shape[0]
    vp = np.maximum(particles, floor)
    drift = (particles + kappa * (theta - particles) * dt
             - sigma * rho * (r - 0.5 * particles) * dt + sigma * rho * u)
    q = sigma * sigma * vp * (1.0 - rho * rho) * dt
    prop = np.maximum(drift + np.sqrt(q) * z, floor)

    rvar = np.maximum(prop, floor) * dt
    resid = y_new - (y_prev + (r - 0.5 * prop) * dt)
    loglik = -0.5 * (_LOG_2PI + np.log(rvar) + resid * resid / rvar)

    shifted = np.exp(loglik - loglik.max())
    raw = weights * shifted
    csum = np.cumsum(raw)
    total = csum[-1]
    if not np.isfinite(total) or total <= 0.0:
        raise ParticleDegeneracyError("particle degeneracy")
    post_w = raw / total

    mean = float(np.cumsum(post_w * prop)[-1])
    var = float(np.cumsum(post_w * (prop - mean) ** 2)[-1])
    if var < 1e-10:
        var = 1e-10
    ess = 1.0 / float(np.cumsum(post_w * post_w)[-1])

    if ess < resample_frac * n:
        positions = (u01 + np.arange(n)) / n
        idx = np.minimum(np.searchsorted(np.cumsum(post_w), positions), n - 1)
        out_particles = prop[idx]
        out_weights = np.full(n, 1.0 / n)
        resampled = True
    else:
        out_particles = prop
        out_weights = post_w
        resampled = False
    return prop, post_w, out_particles, out_weights, mean, var, ess, resampled


def d_terms(parents, parent_w, prop, prop_w, kappa, theta, sigma, rho, r,
            dt, floor):
    """Information-recursion increments for the variance state-space model.

    Averages the per-particle inverse noise variances: transition terms
    over the parent cloud ``(parents, parent_w)``, the measurement term
    over the propagated cloud ``(prop, prop_w)``.
    """
    qscale = sigma * sigma * (1.0 - rho * rho) * dt
    if qscale <= 0.0:
        raise ValueError("degenerate noise")
    a = 1.0 - kappa * dt + 0.5 * sigma * rho * dt
    c = -0.5 * dt
    qinv_bar = float(np.cumsum(parent_w / (qscale * np.maximum(parents, floor)))[-1])
    rinv_bar = float(np.cumsum(prop_w / (dt * np.maximum(prop, floor)))[-1])
    d11 = a * a * qinv_bar
    d12 = -a * qinv_bar
    d22 = qinv_bar + c * c * rinv_bar
    return d11, d12, d22
