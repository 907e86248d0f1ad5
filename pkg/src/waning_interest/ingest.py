from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Literal, Optional, Union

import numpy as np
import pandas as pd

from waning_interest.dates import days_between, parse_timestamp
from waning_interest.errors import EmptySampleError, InvalidParameterError, ParseError
from waning_interest.simulator import EventStream

log = logging.getLogger(__name__)

DedupPolicy = Literal["drop", "jitter"]
SECOND = 1.0 / 86400.0


class SourceFormat(str, Enum):
    ISO8601_LINES = "iso8601_lines"
    NUMERIC_LINES = "numeric_lines"
    CSV_COLUMN = "csv_column"


FORMAT_ALIASES = {
    "iso": SourceFormat.ISO8601_LINES,
    "numeric": SourceFormat.NUMERIC_LINES,
    "csv": SourceFormat.CSV_COLUMN,
}


@dataclass(frozen=True)
class IngestedSeries:
    """A timestamp file turned into an EventStream (days since origin).

    raw_count = len(stream) + dropped_duplicates + (1 if origin_consumed else 0)
    """
    stream: EventStream
    source_format: SourceFormat
    raw_count: int
    dropped_duplicates: int
    origin_consumed: bool
    resolution: float


# ----------------------------
# Record readers
# ----------------------------
def _records_from_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for i, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if s and not s.startswith("#"):
            out.append((i, s))
    return out


def _records_from_csv(text: str, column: str) -> list[tuple[int, str]]:
    try:
        df = pd.read_csv(io.StringIO(text), dtype=str, skip_blank_lines=True, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"unreadable CSV: {e}") from None
    if column not in df.columns:
        raise ParseError(f"column {column!r} not found (columns: {', '.join(map(str, df.columns))})", 1)
    # header is line 1
    return [(i + 2, str(v).strip()) for i, v in enumerate(df[column].tolist()) if str(v).strip()]


def _as_number(s: str) -> Optional[float]:
    try:
        v = float(s)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _parse_numeric(records: list[tuple[int, str]]) -> np.ndarray:
    values = []
    for line, s in records:
        v = _as_number(s)
        if v is None:
            raise ParseError(f"not a decimal number of days: {s!r}", line)
        if v < 0:
            raise ParseError(f"negative time {v}", line)
        values.append(v)
    return np.asarray(values, dtype=float)


def _parse_iso(records: list[tuple[int, str]]) -> tuple[list[datetime], bool]:
    stamps, all_dates = [], True
    aware = None
    for line, s in records:
        parsed = parse_timestamp(s)
        if parsed is None:
            raise ParseError(f"not an ISO-8601 date or datetime: {s!r}", line)
        dt, date_only = parsed
        is_aware = dt.tzinfo is not None
        if aware is None:
            aware = is_aware
        elif aware != is_aware:
            raise ParseError("mixes timezone-aware and naive timestamps", line)
        stamps.append(dt)
        all_dates &= date_only
    return stamps, all_dates


def _resolve_format(fmt: Union[str, SourceFormat], column: Optional[str], first: Optional[str]) -> SourceFormat:
    if isinstance(fmt, SourceFormat):
        return fmt
    if fmt == "auto":
        if column:
            return SourceFormat.CSV_COLUMN
        return SourceFormat.NUMERIC_LINES if first is not None and _as_number(first) is not None else SourceFormat.ISO8601_LINES
    try:
        return FORMAT_ALIASES.get(fmt) or SourceFormat(fmt)
    except ValueError:
        raise InvalidParameterError(f"unknown format {fmt!r}") from None


# ----------------------------
# Duplicates
# ----------------------------
def _dedup(times: np.ndarray, policy: DedupPolicy, resolution: float, seed: int) -> tuple[np.ndarray, int]:
    """Sorted input -> strictly increasing output and the number of records dropped."""
    if policy == "drop":
        uniq = np.unique(times)
        return uniq, int(times.size - uniq.size)
    if policy != "jitter":
        raise InvalidParameterError(f"unknown duplicate policy {policy!r}")
    if not resolution > 0:
        raise InvalidParameterError("jitter needs a positive resolution")
    rng = np.random.default_rng(int(seed))
    # a record at 0 duplicates the origin
    dup = np.diff(times, prepend=0.0) == 0
    out = times.copy()
    out[dup] += rng.uniform(0.0, resolution, size=int(dup.sum()))
    out.sort()
    uniq = np.unique(out)
    return uniq, int(out.size - uniq.size)


# ----------------------------
# Entry point
# ----------------------------
def parse_timestamps(
    text: str,
    fmt: Union[str, SourceFormat] = "auto",
    *,
    column: Optional[str] = None,
    origin: Union[None, float, str, datetime] = None,
    dedup: DedupPolicy = "drop",
    resolution: Optional[float] = None,
    horizon: Optional[float] = None,
    seed: int = 0,
) -> IngestedSeries:
    """Convert a timestamp document into an EventStream in days.

    Without `origin` the earliest record becomes t = 0 and is not an event. With an
    explicit `origin` every later record is an event (the include-first reading);
    records exactly at the origin are consumed as the origin. Duplicate times are
    dropped and counted, or jittered by U(0, resolution) days; resolution defaults to
    1 day for date-only or numeric data and 1 second for datetimes.
    """
    if not text or not text.strip():
        raise ParseError("empty input")

    lines = _records_from_lines(text)
    source = _resolve_format(fmt, column, lines[0][1] if lines else None)
    if source is SourceFormat.CSV_COLUMN:
        if not column:
            raise InvalidParameterError("csv input needs a column name")
        records = _records_from_csv(text, column)
    else:
        records = lines
    if not records:
        raise ParseError("no timestamp records")

    origin_label: Optional[datetime] = None
    numeric = all(_as_number(s) is not None for _, s in records) if source is SourceFormat.CSV_COLUMN else (
        source is SourceFormat.NUMERIC_LINES)
    if numeric:
        values = np.sort(_parse_numeric(records))
        default_res = 1.0
        if origin is None:
            zero = float(values[0])
        else:
            zero = _as_number(str(origin))
            if zero is None:
                raise InvalidParameterError(f"numeric data needs a numeric origin, got {origin!r}")
        days = values - zero
    else:
        stamps, date_only = _parse_iso(records)
        stamps.sort()
        default_res = 1.0 if date_only else SECOND
        if origin is None:
            origin_label = stamps[0]
        elif isinstance(origin, datetime):
            origin_label = origin
        else:
            parsed = parse_timestamp(str(origin))
            if parsed is None:
                raise InvalidParameterError(f"unparseable origin {origin!r}")
            origin_label = parsed[0]
        try:
            days = np.array([days_between(origin_label, s) for s in stamps], dtype=float)
        except TypeError:
            raise ParseError("origin and records disagree on timezone awareness") from None

    if np.any(days < 0):
        raise ParseError("records before the origin")
    raw_count = int(days.size)

    origin_consumed = bool(days[0] == 0)
    if origin_consumed:
        days = days[1:]
    times, dropped = _dedup(days, dedup, resolution if resolution is not None else default_res, seed)
    if dedup == "drop" and times.size and times[0] == 0:
        # further copies of the origin record
        times = times[1:]
        dropped += 1
    if times.size == 0:
        raise EmptySampleError("no events after the origin")

    end = float(times[-1]) if horizon is None else float(horizon)
    if end < times[-1]:
        raise InvalidParameterError(f"horizon {end} is before the last event {times[-1]}")
    stream = EventStream(times=times, horizon=end, origin_label=origin_label)
    log.debug("parse_timestamps: %s raw=%d events=%d dropped=%d", source.value, raw_count, len(stream), dropped)
    return IngestedSeries(
        stream=stream,
        source_format=source,
        raw_count=raw_count,
        dropped_duplicates=dropped,
        origin_consumed=origin_consumed,
        resolution=resolution if resolution is not None else default_res,
    )
