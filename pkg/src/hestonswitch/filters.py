"""Bayesian state estimators over the scalar state-space interface.

Three filters are provided: an extended Kalman filter, an unscented
Kalman filter and a bootstrap particle filter. They only touch the model
through ``transition_mean/var/jac`` and ``measurement_mean/var/jac``, so
any object implementing that interface (vectorised over the state) can
be filtered; models exposing ``kernel_params`` (the Heston model) are
routed through the compiled kernels.
"""

import enum
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _kernels as kernels
from ._kernels import ParticleDegeneracyError

__all__ = [
    "FilterId", "StateEstimate", "ParticleCloud", "ParticleDegeneracyError",
    "ekf_step", "ukf_step", "pf_step", "make_cloud", "prior_from_returns",
    "run_filter_bank",
]


class FilterId(enum.Enum):
    """Bank members, in tie-breaking order."""

    EKF = "ekf"
    UKF = "ukf"
    PF = "pf"


#: Canonical ordering used for tie-breaks and seed-stream assignment.
BANK_ORDER = (FilterId.EKF, FilterId.UKF, FilterId.PF)


@dataclass
class StateEstimate:
    """Posterior mean and covariance of the state at one step."""

    mean: float
    cov: float
    filter_id: FilterId
    t_index: int


@dataclass
class ParticleCloud:
    """Weighted particle approximation of the state posterior."""

    particles: np.ndarray
    weights: np.ndarray

    @property
    def ess(self) -> float:
        """Effective sample size, in [1, n]."""
        return 1.0 / float(np.sum(self.weights ** 2))


def ekf_step(prev: StateEstimate, y_new: float, y_prev: float, u: float,
             model) -> StateEstimate:
    """First-order linearised predict/update step."""
    m, p_cov = prev.mean, prev.cov
    a = float(model.transition_jac(m))
    q = float(model.transition_var(m))
    m_pred = float(model.transition_mean(m, u))
    p_pred = a * a * p_cov + q

    c = float(model.measurement_jac(m_pred))
    r = float(model.measurement_var(m_pred))
    s = c * c * p_pred + r
    if s <= 0:
        raise ValueError("degenerate innovation")
    k = p_pred * c / s
    innov = y_new - float(model.measurement_mean(m_pred, y_prev))
    m_post = max(m_pred + k * innov, model.floor)
    p_post = (1.0 - k * c) * p_pred
    return StateEstimate(m_post, p_post, FilterId.EKF, prev.t_index + 1)


def ukf_step(prev: StateEstimate, y_new: float, y_prev: float, u: float,
             model, alpha: float = 1e-3, beta: float = 2.0,
             kappa: float = 0.0) -> StateEstimate:
    """Unscented predict/update step with 2s+1 sigma points (s = 1).

    Means and covariances are accumulated in centred form so the large
    sigma-point weights produced by small ``alpha`` do not lose precision
    to cancellation.
    """
    m, p_cov = prev.mean, prev.cov
    lam = alpha * alpha * (1.0 + kappa) - 1.0
    gamma = np.sqrt(1.0 + lam)
    wm1 = 1.0 / (2.0 * (1.0 + lam))
    wc0 = lam / (1.0 + lam) + (1.0 - alpha * alpha + beta)

    spread = gamma * np.sqrt(p_cov)
    chi = np.maximum(np.array([m, m + spread, m - spread]), model.floor)
    f = np.asarray(model.transition_mean(chi, u), dtype=float)
    m_pred = f[0] + wm1 * ((f[1] - f[0]) + (f[2] - f[0]))
    d = f - m_pred
    p_pred = wc0 * d[0] ** 2 + wm1 * (d[1] ** 2 + d[2] ** 2) \
        + float(model.transition_var(m))

    spread = gamma * np.sqrt(p_pred)
    chi = np.maximum(np.array([m_pred, m_pred + spread, m_pred - spread]),
                     model.floor)
    g = np.asarray(model.measurement_mean(chi, y_prev), dtype=float)
    y_pred = g[0] + wm1 * ((g[1] - g[0]) + (g[2] - g[0]))
    dy = g - y_pred
    dx = chi - m_pred
    s = wc0 * dy[0] ** 2 + wm1 * (dy[1] ** 2 + dy[2] ** 2) \
        + float(model.measurement_var(m_pred))
    if s <= 0:
        raise ValueError("degenerate innovation")
    c_xy = wc0 * dx[0] * dy[0] + wm1 * (dx[1] * dy[1] + dx[2] * dy[2])
    k = c_xy / s
    m_post = max(m_pred + k * (y_new - y_pred), model.floor)
    p_post = p_pred - k * k * s
    if p_post <= 0:
        raise ValueError("degenerate innovation")
    return StateEstimate(m_post, p_post, FilterId.UKF, prev.t_index + 1)


def make_cloud(mean: float, cov: float, n: int, model,
               rng: np.random.Generator) -> ParticleCloud:
    """Draw an initial particle cloud from a floored Gaussian prior."""
    particles = np.maximum(
        mean + np.sqrt(cov) * rng.standard_normal(n), model.floor)
    return ParticleCloud(particles, np.full(n, 1.0 / n))


def pf_step(prev_cloud: ParticleCloud, y_new: float, y_prev: float, u: float,
            model, rng: np.random.Generator, t_index: int,
            resample_threshold: float = 0.5
            ) -> Tuple[ParticleCloud, StateEstimate]:
    """Bootstrap particle filter step.

    Propagates through the transition with sampled noise, reweights by
    the measurement likelihood (noise scale at the propagated particle),
    and systematically resamples when the effective sample size falls
    below ``resample_threshold * n``. The returned estimate is the
    weighted mean/variance before resampling. Bit-identical for a fixed
    generator state.
    """
    n = prev_cloud.particles.shape[0]
    if n < 2:
        raise ValueError("particle cloud needs at least 2 particles")
    z = rng.standard_normal(n)
    u01 = rng.random()
    kp = getattr(model, "kernel_params", None)
    if kp is not None:
        (_, _, out_p, out_w, mean, var, _, _) = kernels.pf_step(
            prev_cloud.particles, prev_cloud.weights, y_new, y_prev, u,
            *kp, z, u01, resample_threshold)
    else:
        (_, _, out_p, out_w, mean, var, _, _) = _pf_step_generic(
            prev_cloud.particles, prev_cloud.weights, y_new, y_prev, u,
            model, z, u01, resample_threshold)
    estimate = StateEstimate(mean, var, FilterId.PF, t_index)
    return ParticleCloud(out_p, out_w), estimate


def _pf_step_generic(particles, weights, y_new, y_prev, u, model, z, u01,
                     resample_frac):
    """Model-interface twin of the fused kernel step."""
    n = particles.shape[0]
    q = np.asarray(model.transition_var(particles), dtype=float)
    prop = np.maximum(
        np.asarray(model.transition_mean(particles, u), dtype=float)
        + np.sqrt(q) * z, model.floor)

    rvar = np.asarray(model.measurement_var(prop), dtype=float)
    resid = y_new - np.asarray(model.measurement_mean(prop, y_prev),
                               dtype=float)
    rvar = np.broadcast_to(rvar, prop.shape)
    loglik = -0.5 * (np.log(2.0 * np.pi * rvar) + resid * resid / rvar)

    raw = weights * np.exp(loglik - loglik.max())
    total = float(np.cumsum(raw)[-1])
    if not np.isfinite(total) or total <= 0.0:
        raise ParticleDegeneracyError("particle degeneracy")
    post_w = raw / total

    mean = float(np.cumsum(post_w * prop)[-1])
    var = max(float(np.cumsum(post_w * (prop - mean) ** 2)[-1]), 1e-10)
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


def prior_from_returns(y: np.ndarray, dt: float, window: int = 30,
                       floor: float = 1e-8) -> Tuple[float, float]:
    """Data-driven Gaussian prior for the variance state.

    Mean is the annualised realised variance of the first ``window`` log
    returns (fewer if the series is shorter); the prior standard
    deviation is half the mean.
    """
    rets = np.diff(np.asarray(y, dtype=float))
    if rets.shape[0] < 2:
        raise ValueError("need at least 2 returns to form a prior")
    rets = rets[:window]
    mean0 = max(float(np.var(rets, ddof=1)) / dt, floor)
    return mean0, (0.5 * mean0) ** 2


def run_filter_bank(series, params, config=None):
    """Run every bank member over a full observation series.

    ``series`` is a price series object exposing ``y`` (log prices with
    ``y[0] = 0``) or a plain array of log prices. All filters start from
    the shared data-driven prior; outputs are aligned by ``t_index``.
    Returns ``{FilterId: [StateEstimate, ...]}``.
    """
    from .config import PipelineConfig
    from .model import HestonModel

    if config is None:
        config = PipelineConfig()
    y = np.asarray(getattr(series, "y", series), dtype=float)
    if y.shape[0] < 2:
        raise ValueError("series must contain at least 2 observations")
    model = HestonModel(params, floor=config.floor)
    mean0, cov0 = prior_from_returns(y, params.dt, config.prior_window,
                                     config.floor)
    streams = config.seed_streams()

    states = {}
    clouds = {}
    results = {fid: [] for fid in config.bank}
    for fid in config.bank:
        states[fid] = StateEstimate(mean0, cov0, fid, 0)
        if fid is FilterId.PF:
            clouds[fid] = make_cloud(mean0, cov0, config.n_particles, model,
                                     streams[fid])

    for t in range(1, y.shape[0]):
        u = y[t] - y[t - 1]
        for fid in config.bank:
            try:
                if fid is FilterId.EKF:
                    states[fid] = ekf_step(states[fid], y[t], y[t - 1], u,
                                           model)
                elif fid is FilterId.UKF:
                    states[fid] = ukf_step(states[fid], y[t], y[t - 1], u,
                                           model, config.ukf_alpha,
                                           config.ukf_beta, config.ukf_kappa)
                else:
                    clouds[fid], est = pf_step(
                        clouds[fid], y[t], y[t - 1], u, model, streams[fid],
                        t, config.resample_threshold)
                    states[fid] = est
            except Exception as exc:
                raise RuntimeError(
                    f"{fid.value} failed at step {t}: {exc}") from exc
            results[fid].append(states[fid])
    return results
