from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime
from typing import Literal, Optional

import numpy as np

from waning_interest.errors import InvalidParameterError, UnsupportedConfigurationError
from waning_interest.model import (
    ModelParams,
    cumulative_intensity,
    intensity,
    inverse_cumulative_intensity,
)

log = logging.getLogger(__name__)

# Random numbers come from numpy's PCG64 (np.random.default_rng(seed)). Draws are taken
# in blocks of CHUNK; a sampler only ever consumes whole blocks, in this order:
#   inversion: CHUNK standard exponentials per block
#   thinning:  CHUNK standard exponentials, then CHUNK uniforms, per block
# Changing CHUNK changes every seeded stream.
CHUNK = 4096
ENSEMBLE_BATCH = 10_000
# thinning refuses event-count runs that would need more proposals than this
THINNING_MAX_PROPOSALS = 1e9

Method = Literal["inversion", "thinning"]


# ----------------------------
# Types
# ----------------------------
@dataclass(frozen=True, eq=False)
class EventStream:
    """Arrival times S_1 < S_2 < ... <= horizon, in days since the origin t = 0."""
    times: np.ndarray
    horizon: float
    origin_label: Optional[datetime] = None

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=float, copy=True).reshape(-1)
        horizon = float(self.horizon)
        if not np.isfinite(horizon) or horizon <= 0:
            raise InvalidParameterError(f"horizon must be > 0, got {horizon}")
        if times.size:
            if times[0] <= 0:
                raise InvalidParameterError("arrival times must be > 0")
            if np.any(np.diff(times) <= 0):
                raise InvalidParameterError("arrival times must be strictly increasing")
            if times[-1] > horizon:
                raise InvalidParameterError("last arrival is past the horizon")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "horizon", horizon)

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def duration(self) -> float:
        """Length of the observed window (0, horizon]."""
        return self.horizon

    def count_at(self, t: float) -> int:
        """N(t): number of arrivals in (0, t]."""
        return int(np.searchsorted(self.times, t, side="right"))


@dataclass(frozen=True)
class SimulationSpec:
    params: ModelParams
    horizon: Optional[float] = None
    event_count: Optional[int] = None
    seed: int = 0

    def __post_init__(self) -> None:
        if (self.horizon is None) == (self.event_count is None):
            raise InvalidParameterError("set exactly one of horizon / event_count")
        if self.horizon is not None and not self.horizon > 0:
            raise InvalidParameterError(f"horizon must be > 0, got {self.horizon}")
        if self.event_count is not None and int(self.event_count) < 1:
            raise InvalidParameterError(f"event_count must be >= 1, got {self.event_count}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))


def _unreachable(spec: SimulationSpec) -> UnsupportedConfigurationError:
    return UnsupportedConfigurationError(
        f"{spec.event_count} events are not reachable in finite double-precision time for "
        f"{spec.params}: with beta = 0 the expected count only grows like (alpha/b) ln(b t)"
    )


def _count_time(spec: SimulationSpec) -> float:
    """Time at which the expected count reaches event_count."""
    t = float(inverse_cumulative_intensity(spec.params, float(spec.event_count)))
    if not np.isfinite(t):
        raise _unreachable(spec)
    return t


def _finish(spec: SimulationSpec, times: np.ndarray) -> EventStream:
    if spec.event_count is not None:
        times = times[: int(spec.event_count)]
        if not np.isfinite(times[-1]):
            raise _unreachable(spec)
        return EventStream(times=times, horizon=float(times[-1]))
    return EventStream(times=times, horizon=float(spec.horizon))


# ----------------------------
# Samplers
# ----------------------------
def sample_stream_inversion(spec: SimulationSpec) -> EventStream:
    """Exact NHPP draw by time change: S_k = Lambda^-1(E_1 + ... + E_k), E_i ~ Exp(1)."""
    if spec.event_count is not None:
        _count_time(spec)
    rng = _rng(spec.seed)
    params = spec.params
    target_y = None if spec.horizon is None else cumulative_intensity(params, spec.horizon)

    blocks: list[np.ndarray] = []
    total, n = 0.0, 0
    while True:
        gamma = total + np.cumsum(rng.standard_exponential(CHUNK))
        total = float(gamma[-1])
        if target_y is not None:
            keep = gamma[gamma <= target_y]
            blocks.append(keep)
            if keep.size < CHUNK:
                break
        else:
            blocks.append(gamma)
            n += CHUNK
            if n >= spec.event_count:
                break

    y = np.concatenate(blocks)
    times = inverse_cumulative_intensity(params, y)
    if target_y is not None:
        times = times[times <= spec.horizon]
    # Lambda^-1 is strictly increasing, but keep the stream valid if rounding ties two points
    times = times[np.concatenate(([True], np.diff(times) > 0))] if times.size else times
    return _finish(spec, times[times > 0])


def sample_stream_thinning(spec: SimulationSpec) -> EventStream:
    """Lewis-Shedler thinning against the global majorant lambda(0) = alpha + beta.

    Proposals arrive at rate lambda(0); a proposal at s is kept when
    U * lambda(0) < lambda(s). Valid because lambda is non-increasing.
    """
    rng = _rng(spec.seed)
    params = spec.params
    lam_bar = params.alpha + params.beta
    proposals_needed = 0.0 if spec.event_count is None else lam_bar * _count_time(spec)
    if proposals_needed > THINNING_MAX_PROPOSALS:
        raise UnsupportedConfigurationError(
            f"thinning would need about {proposals_needed:.3g} proposals for {spec.event_count} events; "
            "use the inversion sampler"
        )

    blocks: list[np.ndarray] = []
    last, n = 0.0, 0
    while True:
        proposals = last + np.cumsum(rng.standard_exponential(CHUNK) / lam_bar)
        u = rng.random(CHUNK)
        last = float(proposals[-1])
        accepted = proposals[u * lam_bar < intensity(params, proposals)]
        if spec.horizon is not None:
            blocks.append(accepted[accepted <= spec.horizon])
            if last > spec.horizon:
                break
        else:
            blocks.append(accepted)
            n += accepted.size
            if n >= spec.event_count:
                break

    times = np.concatenate(blocks)
    return _finish(spec, times[times > 0])


SAMPLERS = {
    "inversion": sample_stream_inversion,
    "thinning": sample_stream_thinning,
}


def simulate(spec: SimulationSpec, method: Method = "inversion") -> EventStream:
    try:
        sampler = SAMPLERS[method]
    except KeyError:
        raise InvalidParameterError(f"unknown sampler {method!r}; expected one of {sorted(SAMPLERS)}") from None
    stream = sampler(spec)
    log.debug("simulate(%s): %d events, horizon %.6g", method, len(stream), stream.horizon)
    return stream


# ----------------------------
# Ensembles (many short streams)
# ----------------------------
def _ensemble_batch(params: ModelParams, n: int, reps: int, seed_seq: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    gamma = np.cumsum(rng.standard_exponential((reps, n + 1)), axis=1)
    arrivals = inverse_cumulative_intensity(params, gamma)
    if n == 0:
        return arrivals[:, 0]
    return arrivals[:, n] - arrivals[:, n - 1]


def sample_interarrival_ensemble(
    params: ModelParams,
    n: int,
    reps: int,
    seed: int = 0,
    workers: int = 1,
) -> np.ndarray:
    """T_(n+1) from `reps` independent streams, each run until event n+1.

    Replications are split in fixed batches of ENSEMBLE_BATCH, each seeded from
    SeedSequence(seed).spawn(...), so the result does not depend on `workers`.
    """
    if n < 0:
        raise InvalidParameterError(f"n must be >= 0, got {n}")
    if reps < 1:
        raise InvalidParameterError(f"reps must be >= 1, got {reps}")
    if workers < 1:
        raise InvalidParameterError(f"workers must be >= 1, got {workers}")
    sizes = [ENSEMBLE_BATCH] * (reps // ENSEMBLE_BATCH)
    if reps % ENSEMBLE_BATCH:
        sizes.append(reps % ENSEMBLE_BATCH)
    children = np.random.SeedSequence(int(seed)).spawn(len(sizes))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _ensemble_batch(params, n, *job), zip(sizes, children)))
    else:
        parts = [_ensemble_batch(params, n, size, child) for size, child in zip(sizes, children)]
    return np.concatenate(parts)
