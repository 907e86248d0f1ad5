from __future__ import annotations

import logging
import math
from dataclasses import dataclass, asdict
from enum import Enum
from typing import Any

import numpy as np
from scipy.optimize import brentq
from scipy.special import wrightomega

from waning_interest.errors import DomainError, InvalidParameterError

log = logging.getLogger(__name__)

# All times are in days.
INVERSE_RTOL = 1e-10
INVERSE_MAX_ITER = 100


# ----------------------------
# Parameters / regimes
# ----------------------------
@dataclass(frozen=True)
class ModelParams:
    """Intensity lambda(t) = beta + alpha / (b t + 1), rates per day.

    alpha: initial excess interest, decays away
    beta:  long-run interest level (the rate lambda tends to)
    b:     decay speed; b = 0 makes lambda constant at alpha + beta
    """
    alpha: float
    beta: float
    b: float

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "b"):
            v = getattr(self, name)
            try:
                v = float(v)
            except (TypeError, ValueError):
                raise InvalidParameterError(f"{name} must be a real number, got {v!r}") from None
            if not math.isfinite(v) or v < 0:
                raise InvalidParameterError(f"{name} must be finite and >= 0, got {v}")
            object.__setattr__(self, name, v)
        if self.alpha + self.beta <= 0:
            raise InvalidParameterError("alpha + beta must be > 0 (zero intensity everywhere)")

    @classmethod
    def from_cutoff_form(cls, gamma: float, t0: float, beta: float) -> "ModelParams":
        """Model behind c (t + t0)^-gamma e^(-beta t): b = 1/t0, alpha = gamma/t0."""
        if t0 <= 0:
            raise InvalidParameterError(f"t0 must be > 0, got {t0}")
        return cls(alpha=gamma / t0, beta=beta, b=1.0 / t0)

    @property
    def is_constant(self) -> bool:
        return self.alpha == 0 or self.b == 0

    @property
    def gamma(self) -> float:
        """Power-law exponent alpha/b of the interarrival tail (0 when lambda is constant)."""
        return 0.0 if self.is_constant else self.alpha / self.b

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


class RegimeClass(str, Enum):
    EXPONENTIAL_BETA = "ExponentialBeta"
    EXPONENTIAL_ALPHA = "ExponentialAlpha"
    EXPONENTIAL_ALPHA_PLUS_BETA = "ExponentialAlphaPlusBeta"
    PURE_FAT_TAIL = "PureFatTail"
    POWER_LAW_EXP_CUTOFF = "PowerLawExpCutoff"

    @property
    def is_exponential(self) -> bool:
        return self in (
            RegimeClass.EXPONENTIAL_BETA,
            RegimeClass.EXPONENTIAL_ALPHA,
            RegimeClass.EXPONENTIAL_ALPHA_PLUS_BETA,
        )


def classify_regime(params: ModelParams) -> RegimeClass:
    a, beta, b = params.alpha, params.beta, params.b
    if a == 0 and beta == 0:
        raise InvalidParameterError("alpha = beta = 0 has no regime")
    if a == 0:
        return RegimeClass.EXPONENTIAL_BETA
    if b == 0:
        return RegimeClass.EXPONENTIAL_ALPHA if beta == 0 else RegimeClass.EXPONENTIAL_ALPHA_PLUS_BETA
    return RegimeClass.PURE_FAT_TAIL if beta == 0 else RegimeClass.POWER_LAW_EXP_CUTOFF


def regime_rate(params: ModelParams) -> float | None:
    """Rate of the exponential interarrival law, or None when the tail is not exponential."""
    regime = classify_regime(params)
    if regime is RegimeClass.EXPONENTIAL_BETA:
        return params.beta
    if regime is RegimeClass.EXPONENTIAL_ALPHA:
        return params.alpha
    if regime is RegimeClass.EXPONENTIAL_ALPHA_PLUS_BETA:
        return params.alpha + params.beta
    return None


# ----------------------------
# Helpers
# ----------------------------
def _nonneg(value: Any, name: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(value, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} must be >= 0")
    return arr, arr.ndim == 0


def _ret(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


# ----------------------------
# Intensity / cumulative intensity
# ----------------------------
def intensity(params: ModelParams, t):
    """lambda(t) = beta + alpha/(b t + 1). Non-increasing, tends to beta."""
    t, scalar = _nonneg(t, "t")
    out = params.beta + params.alpha / (params.b * t + 1.0)
    return _ret(out, scalar)


def cumulative_intensity(params: ModelParams, t):
    """Lambda(t) = beta t + (alpha/b) ln(b t + 1); (alpha + beta) t when b == 0.

    The b == 0 branch is taken on exact zero only; the b > 0 form tends to it continuously.
    """
    t, scalar = _nonneg(t, "t")
    if params.b == 0:
        out = (params.alpha + params.beta) * t
    else:
        out = params.beta * t + (params.alpha / params.b) * np.log1p(params.b * t)
    return _ret(out, scalar)


def inverse_cumulative_intensity(params: ModelParams, y, rtol: float = INVERSE_RTOL):
    """Time t with Lambda(t) = y.

    Constant and pure fat-tail intensities invert in closed form. The general case starts
    from the Wright-omega solution of beta t + (alpha/b) ln(bt+1) = y, polishes with
    Newton steps kept inside the bracket [0, y/beta], and falls back to Brent's method
    for any entry still off by more than rtol * max(1, y).
    """
    y, scalar = _nonneg(y, "y")
    a, beta, b = params.alpha, params.beta, params.b

    if params.is_constant:
        return _ret(y / (a + beta), scalar)
    if beta == 0:
        with np.errstate(over="ignore"):
            return _ret(np.expm1(y * b / a) / b, scalar)

    z = math.log(beta / a) + (y * b + beta) / a
    u = (a / beta) * np.real(wrightomega(z))
    t = np.maximum((u - 1.0) / b, 0.0)
    hi = y / beta

    for _ in range(3):
        resid = cumulative_intensity(params, t) - y
        t = np.clip(t - resid / intensity(params, t), 0.0, hi)

    tol = rtol * np.maximum(1.0, y)
    bad = np.abs(cumulative_intensity(params, t) - y) > tol
    if np.any(bad):
        t = np.array(t, dtype=float, copy=True)
        flat_t, flat_y = t.reshape(-1), y.reshape(-1)
        for i in np.flatnonzero(bad.reshape(-1)):
            yi = float(flat_y[i])
            log.debug("inverse_cumulative_intensity: Brent fallback at y=%r", yi)
            flat_t[i] = brentq(
                lambda s: cumulative_intensity(params, s) - yi,
                0.0, yi / beta,
                rtol=rtol, maxiter=INVERSE_MAX_ITER,
            )
    return _ret(t, scalar)


# ----------------------------
# Conditional survival
# ----------------------------
def conditional_survival(params: ModelParams, x, t):
    """P{T_(n+1) > t | S_n = x} = e^(-beta t) ((b(x+t)+1)/(bx+1))^(-alpha/b).

    Evaluated in log space and clamped to [0, 1]. With x = 0 it is the exact
    survival function of the first interarrival time.
    """
    x, xs = _nonneg(x, "x")
    t, ts = _nonneg(t, "t")
    a, beta, b = params.alpha, params.beta, params.b
    if b == 0:
        log_s = -(a + beta) * t
    else:
        log_s = -beta * t - (a / b) * np.log1p(b * t / (b * x + 1.0))
    out = np.clip(np.exp(log_s), 0.0, 1.0)
    return _ret(out, xs and ts)
