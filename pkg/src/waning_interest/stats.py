from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
import pandas as pd
from scipy.stats import kstest

from waning_interest.errors import DomainError, EmptySampleError, TooFewEventsError
from waning_interest.model import ModelParams, cumulative_intensity
from waning_interest.simulator import EventStream

DEFAULT_LOG_BINS = 25
KS_1PCT = 1.628
MIN_GOF_EVENTS = 10


# ----------------------------
# Interarrival samples
# ----------------------------
@dataclass(frozen=True, eq=False)
class InterarrivalSample:
    values: np.ndarray
    zero_count: int

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def positive(self) -> np.ndarray:
        return self.values[self.values > 0]


def interarrival_sample(values) -> InterarrivalSample:
    """Wrap raw gap values (days); exact zeros are kept but counted."""
    arr = np.asarray(values, dtype=float).reshape(-1)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("interarrival times must be >= 0")
    return InterarrivalSample(values=arr, zero_count=int(np.count_nonzero(arr == 0)))


def interarrivals(stream: EventStream, include_first: bool = False) -> InterarrivalSample:
    """T_i = S_i - S_(i-1). With include_first the origin S_0 = 0 opens the first gap.

    Off for real data (the first post is the origin, not a gap), on for theory checks.
    """
    times = stream.times
    if include_first:
        if times.size == 0:
            raise EmptySampleError("stream has no events")
        return interarrival_sample(np.diff(times, prepend=0.0))
    if times.size < 2:
        raise EmptySampleError(f"need at least 2 events for a gap, got {times.size}")
    return interarrival_sample(np.diff(times))


def summarize(sample: InterarrivalSample) -> dict[str, Any]:
    s = pd.Series(sample.values, dtype=float)
    mean, std = float(s.mean()), float(s.std(ddof=0))
    return {
        "count": int(s.size),
        "zero_count": sample.zero_count,
        "mean_days": mean,
        "median_days": float(s.median()),
        "max_days": float(s.max()),
        "cv": std / mean if mean > 0 else float("nan"),
        # -1 periodic, 0 Poisson, -> 1 bursty
        "burstiness": (std - mean) / (std + mean) if std + mean > 0 else float("nan"),
    }


# ----------------------------
# Empirical CCDF
# ----------------------------
@dataclass(frozen=True, eq=False)
class EmpiricalCcdf:
    t: np.ndarray
    survival: np.ndarray
    sample_size: int

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float).reshape(-1)
        s = np.asarray(self.survival, dtype=float).reshape(-1)
        if t.shape != s.shape:
            raise DomainError("t and survival must have the same length")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "survival", s)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.t.tolist(), self.survival.tolist()))

    def __len__(self) -> int:
        return int(self.t.size)

    def survival_at(self, t):
        """Right-continuous step evaluation; 1 before the first abscissa."""
        idx = np.searchsorted(self.t, np.asarray(t, dtype=float), side="right") - 1
        out = np.where(idx >= 0, self.survival[np.clip(idx, 0, None)], 1.0)
        return float(out) if np.ndim(out) == 0 else out


def empirical_ccdf(sample: InterarrivalSample, log_bins: Optional[int] = None) -> EmpiricalCcdf:
    """survival(t) = #{values > t} / n over the positive values.

    Unbinned: evaluated at each distinct value. Log-binned: at `log_bins` geometrically
    spaced abscissae between the smallest and largest positive value.
    Zero gaps are left out (log axes cannot show them); see sample.zero_count.
    """
    pos = np.sort(sample.positive)
    n = pos.size
    if n == 0:
        raise EmptySampleError("no positive interarrival times")
    if log_bins is None:
        grid = np.unique(pos)
    else:
        if log_bins < 1:
            raise DomainError(f"log_bins must be >= 1, got {log_bins}")
        lo, hi = pos[0], pos[-1]
        grid = np.array([lo]) if lo == hi else np.unique(np.geomspace(lo, hi, int(log_bins)))
        grid[-1] = hi
    above = n - np.searchsorted(pos, grid, side="right")
    return EmpiricalCcdf(t=grid, survival=above / n, sample_size=n)


def dkw_bound(n: int, delta: float = 0.01) -> float:
    """Dvoretzky-Kiefer-Wolfowitz band half-width at confidence 1 - delta."""
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


# ----------------------------
# Time-rescaling goodness of fit
# ----------------------------
@dataclass(frozen=True)
class GofReport:
    ks_statistic: float
    sample_size: int
    critical_value_1pct: float
    passed: bool

    def as_record(self) -> dict[str, Any]:
        return {
            "ks_statistic": self.ks_statistic,
            "sample_size": self.sample_size,
            "critical_value_1pct": self.critical_value_1pct,
            "pass": self.passed,
        }


def rescaled_gaps(stream: EventStream, params: ModelParams) -> np.ndarray:
    """Lambda(S_k) - Lambda(S_(k-1)) with S_0 = 0; iid Exp(1) when params are the truth."""
    return np.diff(cumulative_intensity(params, stream.times), prepend=0.0)


def rescale_and_test(stream: EventStream, params: ModelParams) -> GofReport:
    n = len(stream)
    if n < MIN_GOF_EVENTS:
        raise TooFewEventsError(MIN_GOF_EVENTS, n, "time-rescaling test")
    stat = float(kstest(rescaled_gaps(stream, params), "expon").statistic)
    crit = KS_1PCT / math.sqrt(n)
    return GofReport(ks_statistic=stat, sample_size=n, critical_value_1pct=crit, passed=stat < crit)
