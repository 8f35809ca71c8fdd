"""Synthetic dataset generator: piecewise-linear trend plus exact fBm.

The bundled demo series has the shape this package targets (several years
of daily temperature-like observations with alternating seasonal slopes),
so the whole battery can run end to end without external data, and every
generated series carries a ground-truth sidecar for self-tests.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .fbm import FbmParams, sample_fgn
from .rng import stream
from .series import TimeSeries

__all__ = ["SynthSpec", "SynthResult", "synth_generate", "seasonal_demo_spec"]


@dataclass(frozen=True)
class SynthSpec:
    """Trend breakpoints/slopes, fBm parameters, and gap injection.

    trend: list of (breakpoint_day, slope) pairs; the slope runs from the
    previous breakpoint (first entry starts at day 0) and signs must
    alternate.  missing_fraction removes interior days to exercise the
    interpolation path.
    """

    trend: list[tuple[int, float]]
    fbm: FbmParams
    n_days: int
    missing_fraction: float = 0.0
    seed: int = 0
    start_value: float = 30.0
    epoch: dt.date = dt.date(2011, 1, 1)

    def __post_init__(self) -> None:
        if self.n_days < 2:
            raise ValueError("need n_days >= 2")
        if not 0.0 <= self.missing_fraction < 0.5:
            raise ValueError("missing_fraction must lie in [0, 0.5)")
        if not self.trend:
            raise ValueError("need at least one trend segment")
        last = 0
        for bp, _ in self.trend:
            if bp <= last:
                raise ValueError("breakpoints must be strictly increasing from 0")
            last = bp
        if self.trend[-1][0] != self.n_days - 1:
            raise ValueError("last breakpoint must be the final day")
        slopes = [s for _, s in self.trend]
        if any(a * b >= 0 for a, b in zip(slopes, slopes[1:])):
            raise ValueError("segment slopes must alternate in sign")


@dataclass(frozen=True)
class SynthResult:
    series: TimeSeries
    ground_truth: dict = field(default_factory=dict)


def _trend_values(spec: SynthSpec) -> np.ndarray:
    t = np.arange(spec.n_days, dtype=float)
    out = np.empty(spec.n_days)
    level = spec.start_value
    prev = 0
    for bp, slope in spec.trend:
        mask = (t >= prev) & (t <= bp)
        out[mask] = level + slope * (t[mask] - prev)
        level += slope * (bp - prev)
        prev = bp
    return out


def synth_generate(spec: SynthSpec) -> SynthResult:
    """Series = trend + exact fBm, with optional interior days removed."""
    rng = stream(spec.seed, "synth-path")
    fgn = sample_fgn(spec.fbm.hurst, spec.n_days - 1, rng)
    path = np.concatenate(
        [[0.0], np.cumsum(np.sqrt(2.0 * spec.fbm.diffusion) * fgn)]
    )
    trend = _trend_values(spec)
    values = trend + path
    times = np.arange(spec.n_days, dtype=float)

    keep = np.ones(spec.n_days, dtype=bool)
    if spec.missing_fraction > 0.0:
        gap_rng = stream(spec.seed, "synth-gaps")
        interior = np.arange(1, spec.n_days - 1)
        n_drop = int(round(spec.missing_fraction * len(interior)))
        drop = gap_rng.choice(interior, size=n_drop, replace=False)
        keep[drop] = False

    series = TimeSeries(times=times[keep], values=values[keep], epoch=spec.epoch)
    truth = {
        "breakpoints": [0] + [bp for bp, _ in spec.trend],
        "slopes": [s for _, s in spec.trend],
        "hurst": spec.fbm.hurst,
        "diffusion": spec.fbm.diffusion,
        "seed": spec.seed,
        "n_days": spec.n_days,
        "missing_fraction": spec.missing_fraction,
        "start_value": spec.start_value,
        "epoch": spec.epoch.isoformat(),
        "fbm_path": path.tolist(),
        "trend_values": trend.tolist(),
    }
    return SynthResult(series=series, ground_truth=truth)


def seasonal_demo_spec(
    seed: int = 5, missing_fraction: float = 0.0, n_days: int = 2348
) -> SynthSpec:
    """Fourteen alternating seasonal segments over 2348 days.

    Seven annual peaks with slope magnitudes around 0.02-0.04 deg C per
    day, counter-persistent noise (H = 0.427, D = 0.0846).  Seed 5 is the
    bundled demo seed: its realisation shows all seven peaks cleanly.
    """
    breaks = [49, 213, 412, 586, 772, 952, 1152, 1334, 1513, 1696, 1875, 2048, 2239, n_days - 1]
    slopes = [
        0.0213, -0.0264, 0.0262, -0.0311, 0.0287, -0.0256, 0.0237,
        -0.0418, 0.0294, -0.0145, 0.0238, -0.0261, 0.0228, -0.0346,
    ]
    return SynthSpec(
        trend=list(zip(breaks, slopes)),
        fbm=FbmParams(hurst=0.427, diffusion=0.0846),
        n_days=n_days,
        missing_fraction=missing_fraction,
        seed=seed,
    )
