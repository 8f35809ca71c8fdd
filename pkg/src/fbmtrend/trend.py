"""Piecewise-linear seasonal trend with sign-alternating slopes.

The deterministic component is built in two passes: local extrema of the
daily series provide one anchor per season, then each breakpoint is refined
by sliding the segment end across the anchor's neighbours and keeping the
ordinary-least-squares fit with the highest coefficient of determination.
Segments are fit independently; the curve is not forced continuous at
breakpoints (per-breakpoint mismatch is reported instead).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .series import TimeSeries

__all__ = [
    "ExtremaSet",
    "Segment",
    "PiecewiseLinearTrend",
    "TrendError",
    "find_extrema",
    "ols_fit",
    "refine_breakpoint",
    "select_max_r2",
    "fit_trend",
    "evaluate_trend",
    "detrend",
    "trend_to_json",
    "write_breakpoints_csv",
]


class TrendError(ValueError):
    pass


@dataclass(frozen=True)
class ExtremaSet:
    """Alternating local maxima and minima, as (time, value) pairs."""

    maxima: list[tuple[float, float]]
    minima: list[tuple[float, float]]

    def __post_init__(self) -> None:
        if abs(len(self.maxima) - len(self.minima)) > 1:
            raise TrendError("maxima and minima counts must differ by at most 1")
        merged = self.ordered()
        kinds = [k for _, _, k in merged]
        if any(a == b for a, b in zip(kinds, kinds[1:])):
            raise TrendError("extrema of the same kind must alternate in time")

    def ordered(self) -> list[tuple[float, float, str]]:
        """All extrema sorted by time, tagged 'max' or 'min'."""
        tagged = [(t, v, "max") for t, v in self.maxima]
        tagged += [(t, v, "min") for t, v in self.minima]
        return sorted(tagged, key=lambda e: e[0])

    def __len__(self) -> int:
        return len(self.maxima) + len(self.minima)


@dataclass(frozen=True)
class Segment:
    """One OLS line over [start_time, end_time] (day offsets)."""

    start_time: float
    end_time: float
    slope: float
    intercept: float
    r_squared: float
    n_obs: int = 0
    degenerate: bool = False

    def __post_init__(self) -> None:
        if not self.start_time < self.end_time:
            raise TrendError("segment needs start_time < end_time")
        if not 0.0 <= self.r_squared <= 1.0 + 1e-12:
            raise TrendError(f"r_squared out of [0,1]: {self.r_squared}")

    def value_at(self, t) -> np.ndarray:
        return self.slope * np.asarray(t, dtype=float) + self.intercept


@dataclass(frozen=True)
class PiecewiseLinearTrend:
    """Contiguous segments; breakpoints are the shared segment endpoints."""

    segments: list[Segment]
    sign_warnings: list[str] = field(default_factory=list)
    discontinuities: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.segments:
            raise TrendError("trend needs at least one segment")
        for a, b in zip(self.segments, self.segments[1:]):
            if a.end_time != b.start_time:
                raise TrendError("segments must be contiguous")

    @property
    def breakpoints(self) -> np.ndarray:
        pts = [self.segments[0].start_time] + [s.end_time for s in self.segments]
        return np.asarray(pts, dtype=float)

    @property
    def domain(self) -> tuple[float, float]:
        return self.segments[0].start_time, self.segments[-1].end_time


def find_extrema(
    s: TimeSeries,
    min_separation: int = 120,
    window: int = 45,
    allow_empty: bool = False,
) -> ExtremaSet:
    """Sliding-window extrema with same-kind separation enforcement.

    A maximum is the unique largest value within +/- window days; runs of
    same-kind candidates keep the more extreme one so the output alternates.
    Same-kind extrema closer than min_separation are resolved by cancelling
    the weaker one together with the opposite extremum between them,
    starting from the tightest violation.
    """
    if window < 1 or min_separation < window:
        raise TrendError("need min_separation >= window >= 1")
    if not s.is_daily:
        raise TrendError("find_extrema needs a daily-spaced series")
    x, t = s.values, s.times
    n = len(x)
    if n < 2 * window:
        raise TrendError(f"series shorter than 2*window ({2 * window})")

    cand: list[list] = []  # [time, value, kind] with kind +1 max / -1 min
    for i in range(window, n - window):
        seg = x[i - window : i + window + 1]
        if x[i] == seg.max() and int(np.argmax(seg)) == window:
            cand.append([t[i], x[i], +1])
        elif x[i] == seg.min() and int(np.argmin(seg)) == window:
            cand.append([t[i], x[i], -1])

    alt: list[list] = []
    for c in cand:
        if alt and c[2] == alt[-1][2]:
            if (c[2] > 0) == (c[1] > alt[-1][1]) and c[1] != alt[-1][1]:
                alt[-1] = c
            continue
        alt.append(c)

    while True:
        gaps = [
            (alt[i + 2][0] - alt[i][0], i)
            for i in range(len(alt) - 2)
            if alt[i][2] == alt[i + 2][2] and alt[i + 2][0] - alt[i][0] < min_separation
        ]
        if not gaps:
            break
        _, i = min(gaps)
        a, b = alt[i], alt[i + 2]
        weaker = i if ((a[2] > 0) == (a[1] < b[1])) else i + 2
        alt = [e for j, e in enumerate(alt) if j not in (weaker, i + 1)]

    maxima = [(e[0], e[1]) for e in alt if e[2] > 0]
    minima = [(e[0], e[1]) for e in alt if e[2] < 0]
    if not maxima and not minima and not allow_empty:
        raise TrendError("no local extrema found (monotone series?)")
    return ExtremaSet(maxima=maxima, minima=minima)


def ols_fit(s: TimeSeries, from_day: float, to_day: float) -> Segment:
    """Least-squares line over observations with from_day <= t <= to_day."""
    mask = (s.times >= from_day) & (s.times <= to_day)
    t, y = s.times[mask], s.values[mask]
    if len(t) < 3:
        raise TrendError(f"window [{from_day}, {to_day}] holds fewer than 3 observations")
    if t[0] == t[-1]:
        raise TrendError("degenerate window: all observations share one time")
    tm, ym = t.mean(), y.mean()
    sxx = float(np.sum((t - tm) ** 2))
    slope = float(np.sum((t - tm) * (y - ym)) / sxx)
    intercept = float(ym - slope * tm)
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - ym) ** 2))
    degenerate = ss_tot == 0.0
    r2 = 0.0 if degenerate else 1.0 - float(resid @ resid) / ss_tot
    r2 = min(max(r2, 0.0), 1.0)
    return Segment(
        start_time=float(t[0]),
        end_time=float(t[-1]),
        slope=slope,
        intercept=intercept,
        r_squared=r2,
        n_obs=int(len(t)),
        degenerate=degenerate,
    )


def select_max_r2(r2_values, anchor_pos: int) -> int:
    """Index of the winning candidate: max R-squared, ties broken toward
    the candidate nearest the anchor, then the earlier one."""
    best = None
    for i, r2 in enumerate(r2_values):
        if r2 is None:
            continue
        key = (r2, -abs(i - anchor_pos), -i)
        if best is None or key > best[0]:
            best = (key, i)
    if best is None:
        raise TrendError("no feasible candidate")
    return best[1]


def refine_breakpoint(
    s: TimeSeries, from_day: float, anchor_day: float, radius: int
) -> tuple[float, Segment]:
    """Slide the segment end across the anchor's neighbourhood.

    Candidates are the observations radius places before through radius
    places after the anchor observation (2*radius + 1 fits); the one whose
    OLS fit on [from_day, candidate] maximises R-squared wins.
    """
    if radius < 0:
        raise TrendError("radius must be >= 0")
    anchor_idx = int(np.searchsorted(s.times, anchor_day))
    if anchor_idx >= len(s.times) or s.times[anchor_idx] != anchor_day:
        raise TrendError(f"anchor day {anchor_day} is not an observation time")
    lo, hi = anchor_idx - radius, anchor_idx + radius
    if lo < 0 or hi >= len(s.times):
        raise TrendError("candidate window extends past the series bounds")
    r2s: list[float | None] = []
    fits: list[Segment | None] = []
    for idx in range(lo, hi + 1):
        end = float(s.times[idx])
        try:
            seg = ols_fit(s, from_day, end)
        except TrendError:
            r2s.append(None)
            fits.append(None)
            continue
        r2s.append(seg.r_squared)
        fits.append(seg)
    try:
        win = select_max_r2(r2s, anchor_idx - lo)
    except TrendError:
        raise TrendError("window too small for any candidate") from None
    seg = fits[win]
    assert seg is not None
    return seg.end_time, seg


def fit_trend(s: TimeSeries, extrema: ExtremaSet, radius: int = 5) -> PiecewiseLinearTrend:
    """Sequentially refine one breakpoint per extremum.

    The first segment starts at the first observation; each chosen endpoint
    becomes the next segment's start; the last segment ends at the final
    observation and is not refined.  Slope-sign alternation is checked and
    reported as warnings, never raised.
    """
    start = float(s.times[0])
    segments: list[Segment] = []
    for anchor_t, _, _ in extrema.ordered():
        end, seg = refine_breakpoint(s, start, anchor_t, radius)
        # refinement can only shorten toward `start`; never past it
        segments.append(seg)
        start = end
    segments.append(ols_fit(s, start, float(s.times[-1])))

    warnings_: list[str] = []
    for i, (a, b) in enumerate(zip(segments, segments[1:])):
        if a.slope * b.slope >= 0:
            warnings_.append(
                f"segments {i} and {i + 1} do not alternate in slope sign "
                f"({a.slope:.6g}, {b.slope:.6g})"
            )
    discont = [
        (b.start_time, float(b.value_at(b.start_time) - a.value_at(a.end_time)))
        for a, b in zip(segments, segments[1:])
    ]
    return PiecewiseLinearTrend(segments=segments, sign_warnings=warnings_, discontinuities=discont)


def evaluate_trend(tr: PiecewiseLinearTrend, t):
    """Trend value at day offset(s) t; left segment wins at breakpoints."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    lo, hi = tr.domain
    if np.any(t_arr < lo) or np.any(t_arr > hi):
        raise TrendError(f"t outside trend domain [{lo}, {hi}]")
    ends = np.array([seg.end_time for seg in tr.segments])
    idx = np.searchsorted(ends, t_arr, side="left")
    idx = np.minimum(idx, len(tr.segments) - 1)
    slopes = np.array([seg.slope for seg in tr.segments])
    inters = np.array([seg.intercept for seg in tr.segments])
    out = slopes[idx] * t_arr + inters[idx]
    return out if np.ndim(t) else float(out[0])


def detrend(s: TimeSeries, tr: PiecewiseLinearTrend) -> TimeSeries:
    """Residual series s - trend, evaluated at every observation time."""
    lo, hi = tr.domain
    if s.times[0] < lo or s.times[-1] > hi:
        raise TrendError("trend domain does not cover the series")
    resid = s.values - evaluate_trend(tr, s.times)
    return TimeSeries(times=s.times, values=resid, epoch=s.epoch)


def trend_to_json(tr: PiecewiseLinearTrend, epoch=None) -> str:
    def day_or_date(t: float):
        if epoch is None:
            return t
        import datetime as dt

        return (epoch + dt.timedelta(days=int(round(t)))).isoformat()

    payload = [
        {
            "start_date": day_or_date(seg.start_time),
            "end_date": day_or_date(seg.end_time),
            "slope_per_day": seg.slope,
            "intercept": seg.intercept,
            "r_squared": seg.r_squared,
        }
        for seg in tr.segments
    ]
    return json.dumps(payload, indent=2, sort_keys=True)


def write_breakpoints_csv(path, tr: PiecewiseLinearTrend, epoch=None) -> None:
    """Breakpoint table: one row per segment end, with slope and R^2."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["breakpoint_day", "breakpoint_date", "slope_per_day", "r_squared"])
        for seg in tr.segments:
            date = ""
            if epoch is not None:
                import datetime as dt

                date = (epoch + dt.timedelta(days=int(round(seg.end_time)))).isoformat()
            w.writerow([seg.end_time, date, repr(seg.slope), repr(seg.r_squared)])
