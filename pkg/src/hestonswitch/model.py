"""Heston dynamics in state-space form.

The observed log price ``y_t = log(S_t / S_0)`` and the latent variance
``V_t`` follow, after conditioning the variance shock on the observed
price shock, a scalar state-space model

    V_k = V_{k-1} + kappa (theta - V_{k-1}) dt
          - sigma rho (r - V_{k-1}/2) dt + sigma rho u_k + noise,
    y_k = y_{k-1} + (r - V_k / 2) dt + noise,

where ``u_k = y_k - y_{k-1}`` is the observed log-return, treated as a
known exogenous input, the transition noise has variance
``sigma^2 V (1 - rho^2) dt`` and the measurement noise variance is
``V dt``. This module provides the parameter container with validity
checking, the transition/measurement functions and their derivatives
(all vectorised over the state), and a ground-truth path simulator used
as the oracle throughout the test suite.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from . import _kernels as kernels

#: Positivity floor applied to the variance state after every transition
#: draw and every filter update.
DEFAULT_FLOOR = 1e-8

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class HestonParams:
    """Model parameters, all in annualised units.

    kappa : mean-reversion rate of the variance (1/year)
    theta : long-run variance level
    sigma : volatility of volatility
    rho   : correlation between price and variance shocks, in [-1, 1]
    r     : risk-free rate
    dt    : observation spacing in years (1/252 for daily data)
    """

    kappa: float
    theta: float
    sigma: float
    rho: float
    r: float = 0.0
    dt: float = 1.0 / 252.0

    @property
    def feller(self) -> bool:
        """Whether ``2 kappa theta > sigma^2`` (variance stays positive)."""
        return 2.0 * self.kappa * self.theta > self.sigma ** 2

    def replace(self, **changes) -> "HestonParams":
        return replace(self, **changes)


@dataclass
class ParamReport:
    """Outcome of :func:`validate_params`."""

    ok: bool
    violations: list
    feller: bool


def validate_params(p: HestonParams) -> ParamReport:
    """Check parameter constraints, reporting every violation.

    Never raises: returns the full list of violated constraints plus the
    Feller flag (tracked, not enforced).
    """
    violations = []
    for name in ("kappa", "theta", "sigma", "rho", "r", "dt"):
        if not math.isfinite(getattr(p, name)):
            violations.append(f"{name} must be finite")
    if not p.kappa > 0:
        violations.append("kappa must be > 0")
    if not p.theta > 0:
        violations.append("theta must be > 0")
    if not p.sigma > 0:
        violations.append("sigma must be > 0")
    if not -1.0 <= p.rho <= 1.0:
        violations.append("rho must be in [-1, 1]")
    if not p.dt > 0:
        violations.append("dt must be > 0")
    feller = bool(math.isfinite(p.kappa) and math.isfinite(p.theta)
                  and math.isfinite(p.sigma) and p.feller)
    return ParamReport(ok=not violations, violations=violations, feller=feller)


@dataclass
class SimulatedPath:
    """Ground-truth path: true variances, observations and prices.

    Arrays all have length ``n + 1`` with index 0 the initial condition;
    ``prices[k] = s0 * exp(observations[k])``.
    """

    variances: np.ndarray
    observations: np.ndarray
    prices: np.ndarray
    seed: Optional[int] = None


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite state")


class HestonModel:
    """State-space form of the Heston dynamics under a positivity floor.

    All methods are pure and vectorised over the variance state, so a
    single instance can be shared by any number of threads. The model
    carries no randomness of its own: :meth:`simulate` derives a fresh
    generator from its ``seed`` argument.
    """

    def __init__(self, params: HestonParams, floor: float = DEFAULT_FLOOR):
        if not floor > 0:
            raise ValueError("floor must be > 0")
        self.params = params
        self.floor = floor

    @property
    def kernel_params(self):
        """Scalar parameter tuple consumed by the compiled kernels."""
        p = self.params
        return (p.kappa, p.theta, p.sigma, p.rho, p.r, p.dt, self.floor)

    def transition_mean(self, v: ArrayLike, u: ArrayLike) -> ArrayLike:
        """Deterministic part of the variance transition, floored.

        ``u`` is the observed log-return over the step being predicted.
        """
        _check_finite(v, u)
        p = self.params
        out = (v + p.kappa * (p.theta - v) * p.dt
               - p.sigma * p.rho * (p.r - 0.5 * v) * p.dt
               + p.sigma * p.rho * u)
        return np.maximum(out, self.floor)

    def transition_var(self, v: ArrayLike) -> ArrayLike:
        """Process noise variance ``sigma^2 V (1 - rho^2) dt``."""
        _check_finite(v)
        p = self.params
        return (p.sigma ** 2 * np.maximum(v, self.floor)
                * (1.0 - p.rho ** 2) * p.dt)

    def transition_jac(self, v: ArrayLike) -> float:
        """Derivative of the transition mean in the variance state.

        Constant for this model, so a scalar is returned and broadcast
        by the callers.
        """
        p = self.params
        return 1.0 - p.kappa * p.dt + 0.5 * p.sigma * p.rho * p.dt

    def measurement_mean(self, v: ArrayLike, y_prev: ArrayLike) -> ArrayLike:
        """Expected log price given the current variance."""
        _check_finite(v, y_prev)
        p = self.params
        return y_prev + (p.r - 0.5 * v) * p.dt

    def measurement_var(self, v: ArrayLike) -> ArrayLike:
        """Measurement noise variance ``V dt``, strictly positive."""
        _check_finite(v)
        return np.maximum(v, self.floor) * self.params.dt

    def measurement_jac(self, v: ArrayLike) -> float:
        """Derivative of the measurement mean in the variance state."""
        return -0.5 * self.params.dt

    def simulate(self, v0: float, s0: float, n: int,
                 seed: Optional[int] = None,
                 rng: Optional[np.random.Generator] = None) -> SimulatedPath:
        """Simulate ``n`` steps of correlated variance and price paths.

        The two Gaussian increment streams have correlation ``rho``;
        variances are floored after every draw. Bit-reproducible for a
        fixed seed. Zero ``kappa`` or ``sigma`` are accepted here (they
        give degenerate but well-defined dynamics, handy as oracles);
        any other parameter violation raises.
        """
        p = self.params
        report = validate_params(p)
        hard = [msg for msg in report.violations
                if not (msg.startswith("kappa") and p.kappa == 0.0)
                and not (msg.startswith("sigma") and p.sigma == 0.0)]
        if hard:
            raise ValueError("invalid parameters: " + "; ".join(hard))
        if not (np.isfinite(v0) and v0 > 0):
            raise ValueError("v0 must be positive")
        if not (np.isfinite(s0) and s0 > 0):
            raise ValueError("s0 must be positive")
        if n < 1:
            raise ValueError("n must be >= 1")
        if rng is None:
            rng = np.random.default_rng(seed)
        z1 = rng.standard_normal(n)
        zt = rng.standard_normal(n)
        v, y = kernels.simulate_path(v0, p.kappa, p.theta, p.sigma, p.rho,
                                     p.r, p.dt, self.floor, z1, zt)
        return SimulatedPath(variances=v, observations=y,
                             prices=s0 * np.exp(y), seed=seed)


def simulate_path(params: HestonParams, v0: float, s0: float, n: int,
                  seed: Optional[int] = None,
                  floor: float = DEFAULT_FLOOR) -> SimulatedPath:
    """Convenience wrapper around :meth:`HestonModel.simulate`."""
    return HestonModel(params, floor=floor).simulate(v0, s0, n, seed=seed)
