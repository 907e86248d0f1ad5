from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
from scipy.optimize import least_squares, minimize

from waning_interest.errors import InsufficientDataError, InvalidParameterError, TooFewEventsError
from waning_interest.model import ModelParams, cumulative_intensity, intensity
from waning_interest.simulator import EventStream
from waning_interest.stats import EmpiricalCcdf

log = logging.getLogger(__name__)

MIN_MLE_EVENTS = 20
MIN_CCDF_POINTS = 8
MLE_MAX_ITER = 10_000
MLE_XATOL = 1e-8
# parameters are optimised as exp(u); an exact zero in a starting guess starts here instead
LOG_FLOOR = 1e-10
REDUCE_THRESHOLD = 0.5
MLE_B_POINTS = 32
MLE_PROFILE_KEEP = 3


# ----------------------------
# Records
# ----------------------------
@dataclass(frozen=True)
class MleFit:
    params: ModelParams
    log_likelihood: float
    converged: bool
    iterations: int

    def as_record(self) -> dict[str, Any]:
        return {
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "b": self.params.b,
            "log_likelihood": self.log_likelihood,
            "converged": self.converged,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class CutoffPowerLawFit:
    """prefactor (t + t0)^-gamma e^(-beta t), fitted to an empirical CCDF (t in days)."""
    prefactor: float
    gamma: float
    t0: float
    beta: float
    sse: float
    n_points: int

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        out = self.prefactor * np.power(t + self.t0, -self.gamma) * np.exp(-self.beta * t)
        return float(out) if out.ndim == 0 else out

    def model_params(self) -> ModelParams:
        return ModelParams.from_cutoff_form(self.gamma, self.t0, self.beta)

    def as_record(self) -> dict[str, Any]:
        return {
            "prefactor": self.prefactor,
            "gamma": self.gamma,
            "t0": self.t0,
            "beta": self.beta,
            "sse": self.sse,
            "n_points": self.n_points,
        }


# ----------------------------
# Likelihood
# ----------------------------
def log_likelihood(params: ModelParams, stream: EventStream) -> float:
    """sum ln lambda(S_i) - Lambda(horizon): joint arrival density times P{no event after S_N}."""
    lam = intensity(params, stream.times)
    if np.any(lam <= 0):
        raise InvalidParameterError("intensity vanishes at an observed event")
    return float(np.sum(np.log(lam)) - cumulative_intensity(params, stream.horizon))


def default_init(stream: EventStream) -> ModelParams:
    """beta0 = half the mean rate, b0 = 10/horizon, alpha0 so lambda(0) matches the rate
    over the first decile of events."""
    n, horizon = len(stream), stream.horizon
    beta0 = 0.5 * n / horizon
    k = max(1, n // 10)
    early_rate = k / stream.times[k - 1]
    alpha0 = early_rate - beta0 if early_rate > beta0 else beta0
    return ModelParams(alpha=alpha0, beta=beta0, b=10.0 / horizon)


def _to_u(params: ModelParams) -> np.ndarray:
    return np.log(np.maximum([params.alpha, params.beta, params.b], LOG_FLOOR))


def _from_u(u: np.ndarray) -> ModelParams:
    return ModelParams(*np.exp(u).tolist())


def _neg_mean_ll(u: np.ndarray, stream: EventStream) -> float:
    try:
        val = -log_likelihood(_from_u(u), stream) / len(stream)
    except InvalidParameterError:
        return math.inf
    return val if math.isfinite(val) else math.inf


def _nelder_mead(fun, u0: np.ndarray, max_iter: int):
    return minimize(
        fun, u0, method="Nelder-Mead",
        options={"xatol": MLE_XATOL, "fatol": 1e-12, "maxiter": max_iter, "maxfev": 2 * max_iter},
    )


def _b_grid(stream: EventStream, points: int) -> np.ndarray:
    """Decay speeds from a tenth of 1/horizon to ten times 1/(shortest gap)."""
    gaps = np.diff(np.concatenate(([0.0], stream.times)))
    return np.geomspace(0.1 / stream.horizon, 10.0 / float(gaps.min()), points)


def _scaled_start(stream: EventStream, b: float) -> np.ndarray:
    # beta0 = half the mean rate; alpha0 closes Lambda(horizon) = N at this b
    n, horizon = len(stream), stream.horizon
    beta0 = 0.5 * n / horizon
    alpha0 = 0.5 * n * b / math.log1p(b * horizon)
    return np.log([alpha0, beta0])


def _profile_b(fun, stream: EventStream, points: int, keep: int) -> list[np.ndarray]:
    """Best (alpha, beta) at each b of a log grid; returns the `keep` best points in u.

    At fixed b the intensity is linear in (alpha, beta), so each slice has a single
    maximum and a short simplex run finds it.
    """
    found: list[tuple[float, np.ndarray]] = []
    for b in _b_grid(stream, points):
        lb = math.log(b)
        res = minimize(
            lambda v: fun(np.array([v[0], v[1], lb])), _scaled_start(stream, b), method="Nelder-Mead",
            options={"xatol": 1e-4, "fatol": 1e-10, "maxiter": 600},
        )
        found.append((float(res.fun), np.array([res.x[0], res.x[1], lb])))
    found.sort(key=lambda item: item[0])
    return [u for _, u in found[:keep]]


def fit_mle(
    stream: EventStream,
    init: Optional[ModelParams] = None,
    max_iter: int = MLE_MAX_ITER,
    restarts: int = 0,
    seed: int = 0,
    b_points: int = MLE_B_POINTS,
) -> MleFit:
    """Maximise log_likelihood over alpha, beta, b >= 0.

    Nelder-Mead simplex on u = log(parameter); converged when the simplex has shrunk
    below 1e-8 in u. The simplex is launched from `init` (default_init when absent) and
    from the best slices of a profile over a log grid of `b_points` decay speeds, since
    the surface is nearly flat along b -> 0 and a single start can stall there.
    `restarts` adds seeded perturbations of the best point. alpha and b are weakly
    identified separately; report the fitted intensity curve alongside them.
    """
    n = len(stream)
    if n < MIN_MLE_EVENTS:
        raise TooFewEventsError(MIN_MLE_EVENTS, n, "maximum likelihood fit")
    start = init if init is not None else default_init(stream)

    def fun(u):
        return _neg_mean_ll(u, stream)

    starts = [_to_u(start)]
    if b_points > 0:
        starts += _profile_b(fun, stream, int(b_points), MLE_PROFILE_KEEP)

    best_u, best_f, converged, iterations = None, math.inf, False, 0
    for u0 in starts:
        res = _nelder_mead(fun, u0, max_iter)
        iterations += int(res.nit)
        if best_u is None or float(res.fun) < best_f:
            best_u, best_f, converged = res.x, float(res.fun), bool(res.success)

    rng = np.random.default_rng(int(seed))
    for _ in range(int(restarts)):
        trial = _nelder_mead(fun, best_u + rng.normal(0.0, 0.1, size=3), max_iter)
        iterations += int(trial.nit)
        if float(trial.fun) < best_f:
            best_u, best_f, converged = trial.x, float(trial.fun), bool(trial.success)

    params = _from_u(best_u)
    ll = log_likelihood(params, stream)
    log.debug("fit_mle: %s ll=%.6f converged=%s iterations=%d starts=%d", params, ll, converged, iterations,
              len(starts))
    return MleFit(params=params, log_likelihood=ll, converged=converged, iterations=iterations)


def fitted_intensity(fit: MleFit, t):
    return intensity(fit.params, t)


def _fit_fat_tail(stream: EventStream, start: ModelParams) -> ModelParams:
    def fun(v):
        try:
            p = ModelParams(alpha=math.exp(v[0]), beta=0.0, b=math.exp(v[1]))
            return -log_likelihood(p, stream) / len(stream)
        except (InvalidParameterError, OverflowError):
            return math.inf

    v0 = np.log(np.maximum([start.alpha + start.beta, start.b], LOG_FLOOR))
    res = minimize(fun, v0, method="Nelder-Mead",
                   options={"xatol": MLE_XATOL, "fatol": 1e-12, "maxiter": MLE_MAX_ITER})
    return ModelParams(alpha=math.exp(res.x[0]), beta=0.0, b=math.exp(res.x[1]))


def reduce_params(stream: EventStream, fit: MleFit, threshold: float = REDUCE_THRESHOLD) -> ModelParams:
    """Zero the parameters whose removal costs less than `threshold` log-likelihood.

    Dropping alpha or b leaves a constant rate, refitted exactly as N / horizon;
    dropping beta leaves the pure fat tail, refitted over (alpha, b).
    """
    full = fit.log_likelihood
    homogeneous = ModelParams(alpha=0.0, beta=len(stream) / stream.horizon, b=0.0)
    if full - log_likelihood(homogeneous, stream) < threshold:
        return homogeneous
    if fit.params.beta > 0 and fit.params.b > 0:
        fat = _fit_fat_tail(stream, fit.params)
        if full - log_likelihood(fat, stream) < threshold:
            return fat
    return fit.params


# ----------------------------
# CCDF fit
# ----------------------------
def _profile(t, y, sw, t0: float, beta: float) -> tuple[float, float, float]:
    """Exact weighted LS for (ln prefactor, gamma) at fixed (t0, beta); gamma >= 0."""
    target = (y + beta * t) * sw
    design = np.column_stack([np.ones_like(t), -np.log(t + t0)]) * sw[:, None]
    (ln_a, gamma), *_ = np.linalg.lstsq(design, target, rcond=None)
    if gamma < 0:
        gamma = 0.0
        ln_a = float(np.sum(sw * target) / np.sum(sw * sw))
    resid = target - design @ np.array([ln_a, gamma])
    return float(ln_a), float(gamma), float(resid @ resid)


def _log_residuals(theta, t, y, sw):
    ln_a, gamma, ln_t0, beta = theta
    return sw * (y - (ln_a - gamma * np.log(t + math.exp(ln_t0)) - beta * t))


def fit_ccdf(
    ccdf: EmpiricalCcdf,
    weights=None,
    tail_trim: int = 2,
    grid_size: int = 40,
    polish_starts: int = 5,
) -> CutoffPowerLawFit:
    """Least squares in log space of prefactor (t + t0)^-gamma e^(-beta t) against a CCDF.

    For fixed (t0, beta) the model is linear in (ln prefactor, gamma), solved exactly; a
    (t0, beta) grid picks the starting points and a bounded trust-region least-squares
    polish over all four parameters refines the best few. Points carried by only the
    `tail_trim` largest gaps are dropped (tail noise).
    """
    t = ccdf.t
    s = ccdf.survival
    w = np.ones_like(t) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    if w.shape != t.shape:
        raise InvalidParameterError("weights must match the CCDF points")
    keep = (s > 0) & (t > 0) & (w > 0)
    if tail_trim > 0:
        keep &= np.rint(s * ccdf.sample_size) > tail_trim
    if np.count_nonzero(keep) < MIN_CCDF_POINTS:
        raise InsufficientDataError(
            f"need at least {MIN_CCDF_POINTS} positive CCDF points, got {np.count_nonzero(keep)}")
    t, y, sw = t[keep], np.log(s[keep]), np.sqrt(w[keep])

    t_max = float(t.max())
    t0_grid = np.geomspace(1e-4 * t_max, 10.0 * t_max, grid_size)
    beta_grid = np.concatenate(([0.0], np.geomspace(1e-3 / t_max, 50.0 / t_max, grid_size - 1)))
    scored = []
    for t0 in t0_grid:
        for beta in beta_grid:
            ln_a, gamma, sse = _profile(t, y, sw, t0, beta)
            scored.append((sse, ln_a, gamma, t0, beta))
    scored.sort(key=lambda row: row[0])

    best = np.array([scored[0][1], scored[0][2], math.log(scored[0][3]), scored[0][4]])
    best_cost = scored[0][0]
    for _, ln_a, gamma, t0, beta in scored[:polish_starts]:
        res = least_squares(
            _log_residuals, x0=[ln_a, gamma, math.log(t0), beta], args=(t, y, sw),
            bounds=([-np.inf, 0.0, -np.inf, 0.0], np.inf),
            method="trf", x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=5000,
        )
        cost = float(res.fun @ res.fun)
        if cost < best_cost:
            best, best_cost = res.x, cost
    ln_a, gamma, ln_t0, beta = (float(v) for v in best)

    plain = _log_residuals(best, t, y, np.ones_like(t))
    fit = CutoffPowerLawFit(
        prefactor=math.exp(ln_a), gamma=gamma, t0=math.exp(ln_t0), beta=beta,
        sse=float(plain @ plain), n_points=int(t.size),
    )
    log.debug("fit_ccdf: %s", fit)
    return fit
