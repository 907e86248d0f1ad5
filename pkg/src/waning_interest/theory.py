from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln
from scipy.stats import gamma as gamma_dist

from waning_interest.errors import DomainError, InvalidParameterError, UnsupportedConfigurationError
from waning_interest.model import (
    ModelParams,
    conditional_survival,
    cumulative_intensity,
    intensity,
    inverse_cumulative_intensity,
)
from waning_interest.simulator import sample_interarrival_ensemble

log = logging.getLogger(__name__)

QUAD_LIMIT = 200
CONSTANT_RTOL = 1e-8
TRUNCATION_TOL = 1e-12
# upper-tail mass of S_n left out of the marginal-survival integral
GAMMA_TAIL = 1e-15
DEFAULT_MC_REPS = 100_000


class CurveMethod(str, Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    """P{T_(n+1) > t} on a grid of t (days). stderr is set for Monte Carlo curves only."""
    n: int
    t: np.ndarray
    survival: np.ndarray
    method: CurveMethod
    stderr: Optional[np.ndarray] = None

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.t.tolist(), self.survival.tolist()))


@dataclass(frozen=True)
class AsymptoticForm:
    """c b^(-alpha/b) (t + 1/b)^(-alpha/b) e^(-beta t): large-t survival of T_(n+1)."""
    c: float
    alpha_over_b: float
    one_over_b: float
    beta: float

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise InvalidParameterError(f"c must be > 0, got {self.c}")
        if self.alpha_over_b < 0 or self.beta < 0:
            raise InvalidParameterError("exponent and cutoff rate must be >= 0")
        if not self.one_over_b > 0:
            raise InvalidParameterError(f"offset 1/b must be > 0, got {self.one_over_b}")

    @property
    def prefactor(self) -> float:
        """Leading constant as printed in a fitted form, c b^(-gamma)."""
        return self.c * self.one_over_b ** self.alpha_over_b

    @classmethod
    def from_prefactor(cls, prefactor: float, gamma: float, t0: float, beta: float) -> "AsymptoticForm":
        """From `prefactor (t + t0)^-gamma e^(-beta t)`."""
        if not t0 > 0:
            raise InvalidParameterError(f"t0 must be > 0, got {t0}")
        return cls(c=prefactor * t0 ** (-gamma), alpha_over_b=gamma, one_over_b=t0, beta=beta)

    @classmethod
    def from_params(cls, params: ModelParams, n: int) -> "AsymptoticForm":
        if params.b == 0:
            raise UnsupportedConfigurationError("b = 0 has no power-law offset 1/b")
        # n = 0: the first gap's survival is exactly (bt + 1)^(-alpha/b) e^(-beta t)
        return cls(
            c=1.0 if n == 0 else asymptotic_constant(params, n),
            alpha_over_b=params.alpha / params.b,
            one_over_b=1.0 / params.b,
            beta=params.beta,
        )


# ----------------------------
# Helpers
# ----------------------------
def _check_t(t) -> tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("t must be >= 0")
    return arr, arr.ndim == 0


def _tail_log_weight(params: ModelParams, n: int, x: float) -> float:
    """log of e^(-beta x) lambda(x) Lambda(x)^(n-1) / (n-1)!  (the integrand defining c)."""
    big = cumulative_intensity(params, x)
    if n > 1 and big <= 0:
        return -math.inf
    log_pow = (n - 1) * math.log(big) if n > 1 else 0.0
    return -params.beta * x + math.log(intensity(params, x)) + log_pow - gammaln(n)


def _integrate_tail_weight(params: ModelParams, n: int, g: Callable[[float], float]) -> float:
    """Integral over [0, inf) of the c-defining weight times g(x).

    Adaptive quadrature on [0, X], with X doubled until e^(-beta X) (1 + Lambda(X))^n
    drops below TRUNCATION_TOL of the running integral, plus a quadrature of the tail.
    """
    beta = params.beta

    def f(x: float) -> float:
        return math.exp(_tail_log_weight(params, n, x)) * g(x)

    hints = [h for h in ((1.0 / params.b) if params.b > 0 else None, n / beta) if h]
    x_max = max(n / beta, 1.0)
    running = 0.0
    for _ in range(64):
        running = quad(f, 0.0, x_max, points=[h for h in hints if h < x_max] or None,
                       limit=QUAD_LIMIT, epsabs=0.0, epsrel=CONSTANT_RTOL)[0]
        bound = -beta * x_max + n * math.log1p(cumulative_intensity(params, x_max))
        if running > 0 and bound < math.log(TRUNCATION_TOL * running):
            break
        x_max *= 2.0
    tail = quad(f, x_max, np.inf, limit=QUAD_LIMIT, epsabs=0.0, epsrel=1e-6)[0]
    log.debug("tail-weight integral n=%d: X=%.6g main=%.12g tail=%.3g", n, x_max, running, tail)
    return running + tail


# ----------------------------
# Arrival-time density
# ----------------------------
def arrival_time_density(params: ModelParams, n: int, x):
    """Density of S_n: lambda(x) Lambda(x)^(n-1) / (n-1)! e^(-Lambda(x)).

    The n-fold joint arrival density integrated over the ordered simplex; equivalently
    lambda(x) times the Gamma(n, 1) density at Lambda(x).
    """
    if int(n) < 1:
        raise DomainError("n must be >= 1 (S_0 = 0 is deterministic)")
    x, scalar = _check_t(x)
    out = intensity(params, x) * gamma_dist.pdf(cumulative_intensity(params, x), a=int(n))
    return float(out) if scalar else out


# ----------------------------
# Asymptotic constant / form
# ----------------------------
def asymptotic_constant(params: ModelParams, n: int) -> float:
    """c(n) = integral of e^(-beta x) lambda(x) Lambda(x)^(n-1)/(n-1)! over [0, inf).

    The nested (n-1)-fold integral of lambda over the ordered simplex is
    Lambda(x)^(n-1)/(n-1)!, which leaves a one-dimensional integral.
    """
    if int(n) < 1:
        raise DomainError("n must be >= 1")
    if params.beta <= 0:
        raise UnsupportedConfigurationError("c(n) needs beta > 0 for the integral to converge")
    return _integrate_tail_weight(params, int(n), lambda x: 1.0)


def asymptotic_survival(form: AsymptoticForm, t):
    """Evaluate the asymptote. Not clamped to 1: it only describes large t."""
    t, scalar = _check_t(t)
    g, t0 = form.alpha_over_b, form.one_over_b
    out = np.exp(math.log(form.c) + g * math.log(t0) - g * np.log(t + t0) - form.beta * t)
    return float(out) if scalar else out


def asymptotic_ratio(params: ModelParams, n: int, t: float) -> float:
    """marginal_survival / asymptotic_survival at t, with c = c(n).

    Equals the c-weighted mean of (1 + b x/(b t + 1))^(-alpha/b), so it is computed without
    forming e^(-beta t); it rises monotonically to 1 as t grows.
    """
    (t_arr, _) = _check_t(t)
    t = float(t_arr)
    if params.is_constant:
        return 1.0
    c = asymptotic_constant(params, n)
    b, g = params.b, params.alpha / params.b
    scale = b * t + 1.0
    num = _integrate_tail_weight(params, int(n), lambda x: math.exp(-g * math.log1p(b * x / scale)))
    return num / c


# ----------------------------
# Marginal survival
# ----------------------------
def _quadrature_survival(params: ModelParams, n: int, t: float, truncate_at: Optional[float]) -> float:
    # integral of f_{S_n}(x) P{T > t | S_n = x} dx, taken in u = Lambda(x) where
    # the density of S_n becomes the Gamma(n, 1) density
    if truncate_at is not None:
        u_max = cumulative_intensity(params, float(truncate_at))
    else:
        u_max = float(gamma_dist.isf(GAMMA_TAIL, a=n))

    def f(u: float) -> float:
        x = inverse_cumulative_intensity(params, u)
        return gamma_dist.pdf(u, a=n) * conditional_survival(params, x, t)

    points = [float(n - 1)] if 0 < n - 1 < u_max else None
    val = quad(f, 0.0, u_max, points=points, limit=QUAD_LIMIT, epsabs=1e-14, epsrel=1e-10)[0]
    return min(max(val, 0.0), 1.0)


def monte_carlo_survival(
    params: ModelParams,
    n: int,
    t,
    reps: int = DEFAULT_MC_REPS,
    seed: int = 0,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Fraction of `reps` simulated T_(n+1) exceeding each t, and its standard error."""
    t_arr, _ = _check_t(t)
    gaps = np.sort(sample_interarrival_ensemble(params, int(n), int(reps), seed=seed, workers=workers))
    p = (gaps.size - np.searchsorted(gaps, t_arr, side="right")) / gaps.size
    se = np.sqrt(p * (1.0 - p) / gaps.size)
    return p, se


def marginal_survival(
    params: ModelParams,
    n: int,
    t: float,
    method: str = "quadrature",
    reps: int = DEFAULT_MC_REPS,
    seed: int = 0,
    truncate_at: Optional[float] = None,
    workers: int = 1,
) -> float:
    """P{T_(n+1) > t}, the survival function of the (n+1)-th interarrival time.

    quadrature: one-dimensional integral of the S_n density against the conditional
    survival (needs beta > 0 or a truncation time). monte_carlo: fraction of simulated
    streams whose (n+1)-th gap exceeds t.
    """
    if int(n) < 0:
        raise DomainError("n must be >= 0")
    (t_arr, _) = _check_t(t)
    t, n = float(t_arr), int(n)
    if method == "quadrature":
        if t == 0:
            return 1.0
        if n == 0:
            return conditional_survival(params, 0.0, t)
        if params.beta == 0 and not params.is_constant and truncate_at is None:
            raise UnsupportedConfigurationError(
                "beta = 0: quadrature needs a truncation time (convergence is not established)")
        return _quadrature_survival(params, n, t, truncate_at)
    if method == "monte_carlo":
        p, _ = monte_carlo_survival(params, n, t, reps=reps, seed=seed, workers=workers)
        return float(p)
    raise InvalidParameterError(f"unknown method {method!r}; expected 'quadrature' or 'monte_carlo'")


def survival_curve(
    params: ModelParams,
    n: int,
    ts,
    method: CurveMethod | str = CurveMethod.QUADRATURE,
    reps: int = DEFAULT_MC_REPS,
    seed: int = 0,
    truncate_at: Optional[float] = None,
    workers: int = 1,
) -> SurvivalCurve:
    method = CurveMethod(method)
    t_arr, _ = _check_t(ts)
    t_arr = np.atleast_1d(t_arr)
    stderr = None

    if method is CurveMethod.CLOSED_FORM:
        if n == 0:
            surv = conditional_survival(params, 0.0, t_arr)
        elif params.is_constant:
            surv = np.exp(-intensity(params, 0.0) * t_arr)
        else:
            raise UnsupportedConfigurationError("closed form exists for n = 0 or a constant intensity only")
    elif method is CurveMethod.QUADRATURE:
        surv = np.array([marginal_survival(params, n, float(t), truncate_at=truncate_at) for t in t_arr])
    elif method is CurveMethod.MONTE_CARLO:
        surv, stderr = monte_carlo_survival(params, n, t_arr, reps=reps, seed=seed, workers=workers)
    else:
        surv = asymptotic_survival(AsymptoticForm.from_params(params, int(n)), t_arr)

    return SurvivalCurve(n=int(n), t=t_arr, survival=np.asarray(surv, dtype=float), method=method, stderr=stderr)
