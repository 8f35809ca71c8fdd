"""Timestamped scalar series: ingestion, daily interpolation, subsampling.

Timestamps are day offsets from an epoch date.  Raw input may be irregular;
after :func:`interpolate_daily` the grid is consecutive integer days, which
is what the spectral and moving-average machinery downstream assumes.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TimeSeries",
    "GapReport",
    "SeriesError",
    "load_csv",
    "write_series_csv",
    "interpolate_daily",
    "subsample_weekly",
]


class SeriesError(ValueError):
    """Malformed input series or CSV."""


@dataclass(frozen=True)
class TimeSeries:
    """Strictly time-ordered scalar observations.

    times : day offsets, strictly increasing, no duplicates.
    values : finite observation values (deg C or dimensionless).
    epoch : calendar date of t=0, or None for abstract series.
    """

    times: np.ndarray
    values: np.ndarray
    epoch: dt.date | None = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or values.ndim != 1:
            raise SeriesError("times and values must be one-dimensional")
        if len(times) != len(values):
            raise SeriesError("times and values must have equal length")
        if len(times) < 1:
            raise SeriesError("a series needs at least 1 observation")
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(values)):
            raise SeriesError("times and values must be finite")
        if np.any(np.diff(times) <= 0):
            raise SeriesError("times must be strictly increasing (no duplicates)")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def is_daily(self) -> bool:
        return bool(np.all(np.diff(self.times) == 1.0))

    def date_of(self, t: float) -> dt.date | None:
        if self.epoch is None:
            return None
        return self.epoch + dt.timedelta(days=int(round(t)))


@dataclass(frozen=True)
class GapReport:
    """Where daily interpolation had to insert observations."""

    gap_spans: list[tuple[float, float, int]] = field(default_factory=list)
    total_inserted: int = 0

    def __post_init__(self) -> None:
        if self.total_inserted != sum(n for _, _, n in self.gap_spans):
            raise ValueError("total_inserted must equal the sum of span counts")


def load_csv(path) -> TimeSeries:
    """Read `date,value` rows (ISO-8601 dates, optional header).

    Rows may arrive out of order; the result is sorted by date.  Duplicate
    dates are an error rather than silently averaged.  The epoch is the
    earliest date.
    """
    rows: list[tuple[dt.date, float]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) < 2:
                raise SeriesError(f"row {lineno}: expected `date,value`, got {rec!r}")
            try:
                day = dt.date.fromisoformat(rec[0].strip())
                value = float(rec[1])
            except ValueError as exc:
                if lineno == 1:
                    continue  # header row
                raise SeriesError(f"row {lineno}: {exc}") from exc
            rows.append((day, value))
    if len(rows) < 2:
        raise SeriesError("fewer than 2 rows")
    rows.sort(key=lambda r: r[0])
    for (d1, _), (d2, _) in zip(rows, rows[1:]):
        if d1 == d2:
            raise SeriesError(f"duplicate date {d1.isoformat()}")
    epoch = rows[0][0]
    times = np.array([(d - epoch).days for d, _ in rows], dtype=float)
    values = np.array([v for _, v in rows], dtype=float)
    return TimeSeries(times=times, values=values, epoch=epoch)


def write_series_csv(path, s: TimeSeries, interpolated_mask=None) -> None:
    """Emit `day_index,date,value,interpolated` rows."""
    if interpolated_mask is None:
        interpolated_mask = np.zeros(len(s), dtype=bool)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["day_index", "date", "value", "interpolated"])
        for t, v, flag in zip(s.times, s.values, interpolated_mask):
            date = s.date_of(t)
            w.writerow([int(t) if float(t).is_integer() else t,
                        date.isoformat() if date else "",
                        repr(float(v)), int(bool(flag))])


def interpolate_daily(s: TimeSeries) -> tuple[TimeSeries, GapReport]:
    """Fill the series to consecutive integer days by linear interpolation.

    Original observations are preserved exactly; inserted values lie on the
    chord between their bracketing observations.  Idempotent on daily input.
    """
    if len(s) < 2:
        raise SeriesError("interpolate_daily needs at least 2 observations")
    if not np.all(s.times == np.round(s.times)):
        raise SeriesError("interpolate_daily needs integer day offsets")
    t0, t1 = int(s.times[0]), int(s.times[-1])
    grid = np.arange(t0, t1 + 1, dtype=float)
    values = np.interp(grid, s.times, s.values)
    original = np.isin(grid, s.times)
    values[original] = s.values  # exact, no float round-trip through interp
    spans: list[tuple[float, float, int]] = []
    for a, b in zip(s.times, s.times[1:]):
        missing = int(b - a) - 1
        if missing > 0:
            spans.append((float(a), float(b), missing))
    report = GapReport(gap_spans=spans, total_inserted=int((~original).sum()))
    return TimeSeries(times=grid, values=values, epoch=s.epoch), report


def subsample_weekly(s: TimeSeries) -> TimeSeries:
    """Every 7th observation starting at index 0; requires daily spacing.

    Output length is floor(len(s)/7); the trailing partial week is dropped.
    """
    if not s.is_daily:
        raise SeriesError("subsample_weekly needs a daily-spaced series")
    n_out = len(s) // 7
    if n_out < 1:
        raise SeriesError("daily series too short for a weekly subsample")
    keep = 7 * n_out
    return TimeSeries(times=s.times[:keep:7], values=s.values[:keep:7], epoch=s.epoch)
