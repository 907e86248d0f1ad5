from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

from waning_interest.simulator import EventStream
from waning_interest.stats import EmpiricalCcdf
from waning_interest.theory import SurvivalCurve

STREAM_HEADER = ["time_days"]
CCDF_HEADER = ["t_days", "survival"]
CURVE_HEADER = ["t_days", "survival", "method", "n"]
INTENSITY_HEADER = ["t_days", "intensity"]


def fmt_float(v: float) -> str:
    return format(float(v), ".15g")


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_atomic(path: Path, text: str) -> Path:
    """Write UTF-8 text with LF endings via a temp file in the same folder + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt_float(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


# ----------------------------
# Artifacts
# ----------------------------
def write_stream_csv(stream: EventStream, path: Path) -> Path:
    return write_atomic(path, csv_text(STREAM_HEADER, ([float(t)] for t in stream.times)))


def write_ccdf_csv(ccdf: EmpiricalCcdf, path: Path) -> Path:
    return write_atomic(path, csv_text(CCDF_HEADER, ([float(t), float(s)] for t, s in ccdf.points)))


def write_curves_csv(curves: Iterable[SurvivalCurve], path: Path) -> Path:
    rows = []
    for c in curves:
        rows.extend([float(t), float(s), c.method.value, c.n] for t, s in c.points)
    return write_atomic(path, csv_text(CURVE_HEADER, rows))


def write_intensity_csv(ts, values, path: Path) -> Path:
    return write_atomic(path, csv_text(INTENSITY_HEADER, ([float(t), float(v)] for t, v in zip(ts, values))))


def write_record(record: dict[str, Any], path: Path) -> Path:
    """Structured key-value record as JSON (sorted keys, trailing newline)."""
    return write_atomic(path, json.dumps(record, indent=2, sort_keys=True) + "\n")
