"""Pydantic request/response models for the HTTP service.

These mirror the library's domain types; converters keep the numpy world
out of the wire format.
"""

from __future__ import annotations

import datetime as dt
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..fbm import FbmParams
from ..series import TimeSeries
from ..synth import SynthSpec, seasonal_demo_spec
from ..trend import PiecewiseLinearTrend, Segment

__all__ = [
    "SeriesPayload",
    "FbmParamsPayload",
    "SegmentPayload",
    "TrendPayload",
    "SynthRequest",
    "TrendFitRequest",
    "HurstRequest",
    "BmTestRequest",
    "GaussTestRequest",
    "DmaTestRequest",
    "PipelineRequest",
    "PlotRequest",
    "TestReportPayload",
]


class SeriesPayload(BaseModel):
    times: list[float]
    values: list[float]
    epoch: str | None = None

    @model_validator(mode="after")
    def _lengths(self) -> "SeriesPayload":
        if len(self.times) != len(self.values):
            raise ValueError("times and values must have equal length")
        return self

    def to_series(self) -> TimeSeries:
        epoch = dt.date.fromisoformat(self.epoch) if self.epoch else None
        return TimeSeries(
            times=np.asarray(self.times, dtype=float),
            values=np.asarray(self.values, dtype=float),
            epoch=epoch,
        )

    @classmethod
    def from_series(cls, s: TimeSeries) -> "SeriesPayload":
        return cls(
            times=[float(t) for t in s.times],
            values=[float(v) for v in s.values],
            epoch=s.epoch.isoformat() if s.epoch else None,
        )


class FbmParamsPayload(BaseModel):
    hurst: float = Field(gt=0.0, lt=1.0)
    diffusion: float = Field(gt=0.0)

    def to_params(self) -> FbmParams:
        return FbmParams(hurst=self.hurst, diffusion=self.diffusion)


class SegmentPayload(BaseModel):
    start_time: float
    end_time: float
    slope: float
    intercept: float
    r_squared: float
    n_obs: int = 0

    @classmethod
    def from_segment(cls, seg: Segment) -> "SegmentPayload":
        return cls(
            start_time=seg.start_time,
            end_time=seg.end_time,
            slope=seg.slope,
            intercept=seg.intercept,
            r_squared=seg.r_squared,
            n_obs=seg.n_obs,
        )


class TrendPayload(BaseModel):
    segments: list[SegmentPayload]
    sign_warnings: list[str] = []

    def to_trend(self) -> PiecewiseLinearTrend:
        return PiecewiseLinearTrend(
            segments=[
                Segment(
                    start_time=s.start_time,
                    end_time=s.end_time,
                    slope=s.slope,
                    intercept=s.intercept,
                    r_squared=s.r_squared,
                    n_obs=s.n_obs,
                )
                for s in self.segments
            ],
            sign_warnings=list(self.sign_warnings),
        )

    @classmethod
    def from_trend(cls, tr: PiecewiseLinearTrend) -> "TrendPayload":
        return cls(
            segments=[SegmentPayload.from_segment(s) for s in tr.segments],
            sign_warnings=list(tr.sign_warnings),
        )


class SynthRequest(BaseModel):
    """Either the bundled demo spec (with optional tweaks) or a custom one."""

    demo: bool = True
    seed: int = 5
    n_days: int = 2348
    missing_fraction: float = 0.0
    trend: list[tuple[int, float]] | None = None
    fbm: FbmParamsPayload | None = None
    start_value: float = 30.0
    epoch: str | None = None

    def to_spec(self) -> SynthSpec:
        if self.demo:
            return seasonal_demo_spec(
                seed=self.seed,
                missing_fraction=self.missing_fraction,
                n_days=self.n_days,
            )
        if self.trend is None or self.fbm is None:
            raise ValueError("custom synth needs both trend and fbm")
        return SynthSpec(
            trend=[(int(b), float(s)) for b, s in self.trend],
            fbm=self.fbm.to_params(),
            n_days=self.n_days,
            missing_fraction=self.missing_fraction,
            seed=self.seed,
            start_value=self.start_value,
            epoch=dt.date.fromisoformat(self.epoch) if self.epoch else dt.date(2011, 1, 1),
        )


class TrendFitRequest(BaseModel):
    series: SeriesPayload
    window: int = 45
    min_separation: int = 120
    radius: int = 5
    interpolate: bool = True


class HurstRequest(BaseModel):
    series: SeriesPayload
    segment_length: int | None = None
    overlap: float = 0.5
    window: str = "hamming"
    f_min: float | None = 0.015
    f_max: float | None = 0.1


class BmTestRequest(BaseModel):
    series: SeriesPayload
    alpha: float = 0.05


class GaussTestRequest(BaseModel):
    """Weekly-residual Gaussianity protocols.

    trend/params may be omitted; they are then fitted/estimated from the
    series with the same defaults the pipeline uses.
    """

    series: SeriesPayload
    trend: TrendPayload | None = None
    params: FbmParamsPayload | None = None
    sw_sims: int = 1000
    rjb_blocks: int = 10
    rjb_sims_per_block: int = 100
    rjb_mc_iterations: int = 10_000
    alpha: float = 0.02
    seed: int = 0
    window: int = 45
    min_separation: int = 120
    radius: int = 5


class DmaTestRequest(BaseModel):
    series: SeriesPayload
    params: FbmParamsPayload | None = None
    window_m: int | None = None  # run a single window instead of the sweep
    subsets: int = 10
    chi_square_samples: int = 1000
    covariance_mode: str = "detrended"
    m_step: int = 1
    alpha: float = 0.02
    seed: int = 0


class PipelineRequest(BaseModel):
    """Flat config mapping, same keys as the config file."""

    config: dict[str, Any]


class PlotRequest(BaseModel):
    report: dict[str, Any]


class TestReportPayload(BaseModel):
    test: str
    statistic: float
    decision: str
    alpha: float
    p_value: float | None = None
    region: list[float] | None = None
    metadata: dict[str, Any] = {}
