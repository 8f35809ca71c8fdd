"""FastAPI application exposing the analysis operations.

The service is stateless apart from in-process Monte Carlo caches (the
Brownian quantile sample, robust-Jarque-Bera null tables, DMA eigenvalue
decompositions), which is the point of running it long-lived: repeated
analyses share the expensive calibrations.
"""

from __future__ import annotations

import dataclasses

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..brownian import briane_bm_test
from ..dma import DmaConfig, dma_subset_protocol, dma_test
from ..fbm import FbmParams, estimate_diffusion
from ..gaussian import rjb_block_protocol, sw_simulation_protocol
from ..pipeline import REPORT_SCHEMA, run_pipeline
from ..configfile import build_pipeline_config
from ..series import interpolate_daily, subsample_weekly
from ..spectral import fit_loglog, welch_periodogram
from ..svgplots import PLOT_BUILDERS
from ..synth import synth_generate
from ..trend import detrend, find_extrema, fit_trend
from .schemas import (
    BmTestRequest,
    DmaTestRequest,
    GaussTestRequest,
    HurstRequest,
    PipelineRequest,
    PlotRequest,
    SeriesPayload,
    SynthRequest,
    TrendFitRequest,
    TrendPayload,
)

__all__ = ["create_app", "app"]


def _jsonable(obj):
    import numpy as np

    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def create_app() -> FastAPI:
    app = FastAPI(
        title="fbmtrend",
        version=__version__,
        description=(
            "Seasonal piecewise-linear trend fitting and fractional-Brownian-"
            "motion residual testing for daily series"
        ),
    )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/schema/run-report")
    def report_schema() -> dict:
        return REPORT_SCHEMA

    @app.post("/synth")
    def synth(req: SynthRequest) -> dict:
        try:
            result = synth_generate(req.to_spec())
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {
            "series": SeriesPayload.from_series(result.series).model_dump(),
            "ground_truth": _jsonable(result.ground_truth),
        }

    def _fit_trend_for(series, window, min_separation, radius, interpolate=True):
        s = series.to_series()
        if interpolate and not s.is_daily:
            s, _ = interpolate_daily(s)
        extrema = find_extrema(s, min_separation=min_separation, window=window)
        return s, extrema, fit_trend(s, extrema, radius=radius)

    @app.post("/trend/fit")
    def trend_fit(req: TrendFitRequest) -> dict:
        try:
            s, extrema, trend = _fit_trend_for(
                req.series, req.window, req.min_separation, req.radius, req.interpolate
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {
            "extrema": {
                "maxima": _jsonable(extrema.maxima),
                "minima": _jsonable(extrema.minima),
            },
            "trend": TrendPayload.from_trend(trend).model_dump(),
            "breakpoints": _jsonable(trend.breakpoints),
            "discontinuities": _jsonable(trend.discontinuities),
        }

    @app.post("/hurst/estimate")
    def hurst_estimate(req: HurstRequest) -> dict:
        try:
            pgram = welch_periodogram(
                req.series.to_series(),
                segment_length=req.segment_length,
                overlap=req.overlap,
                window=req.window,
            )
            fit = fit_loglog(pgram, f_min=req.f_min, f_max=req.f_max)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {
            "periodogram": {
                "frequencies": _jsonable(pgram.frequencies),
                "power": _jsonable(pgram.power),
                "segment_length": pgram.segment_length,
                "overlap": pgram.overlap_fraction,
                "window": pgram.window_name,
            },
            "fit": _jsonable(dataclasses.asdict(fit)),
        }

    @app.post("/tests/bm")
    def tests_bm(req: BmTestRequest) -> dict:
        try:
            report = briane_bm_test(req.series.to_series(), alpha=req.alpha)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return _jsonable(report.to_dict())

    def _params_for(series, req) -> FbmParams:
        pgram = welch_periodogram(series)
        fit = fit_loglog(pgram)
        d_hat = estimate_diffusion(series)
        if fit.hurst_estimate is None or d_hat <= 0:
            raise ValueError(
                f"cannot estimate parameters: classification {fit.classification}, "
                f"d_hat {d_hat}"
            )
        return FbmParams(hurst=fit.hurst_estimate, diffusion=d_hat)

    @app.post("/tests/gauss")
    def tests_gauss(req: GaussTestRequest) -> dict:
        try:
            s = req.series.to_series()
            if not s.is_daily:
                s, _ = interpolate_daily(s)
            if req.trend is not None:
                trend = req.trend.to_trend()
            else:
                _, _, trend = _fit_trend_for(
                    SeriesPayload.from_series(s), req.window, req.min_separation, req.radius
                )
            residual = detrend(s, trend)
            params = req.params.to_params() if req.params else _params_for(residual, req)
            weekly = subsample_weekly(s)
            sw = sw_simulation_protocol(
                weekly, trend, params, n_sims=req.sw_sims, seed=req.seed
            )
            rjb = rjb_block_protocol(
                weekly,
                trend,
                params,
                n=req.rjb_sims_per_block,
                blocks=req.rjb_blocks,
                alpha=req.alpha,
                mc_iterations=req.rjb_mc_iterations,
                seed=req.seed,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {
            "params_used": {"hurst": params.hurst, "diffusion": params.diffusion},
            "sw": {
                "n_sims": sw.n_sims,
                "threshold": sw.threshold,
                "fraction_passing": sw.fraction_passing,
                "histogram": _jsonable(sw.histogram),
            },
            "rjb": _jsonable(dataclasses.asdict(rjb)),
        }

    @app.post("/tests/dma")
    def tests_dma(req: DmaTestRequest) -> dict:
        try:
            s = req.series.to_series()
            params = req.params.to_params() if req.params else _params_for(s, req)
            if req.window_m is not None:
                cfg = DmaConfig(
                    window_m=req.window_m,
                    chi_square_samples=req.chi_square_samples,
                    covariance_mode=req.covariance_mode,
                )
                rep = dma_test(s, params, cfg, alpha=req.alpha, seed=req.seed)
                return {
                    "params_used": {"hurst": params.hurst, "diffusion": params.diffusion},
                    "report": _jsonable(rep.to_dict()),
                }
            summary = dma_subset_protocol(
                s,
                params,
                subsets=req.subsets,
                cfg_base=DmaConfig(
                    window_m=2,
                    chi_square_samples=req.chi_square_samples,
                    covariance_mode=req.covariance_mode,
                ),
                seed=req.seed,
                m_step=req.m_step,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {
            "params_used": {"hurst": params.hurst, "diffusion": params.diffusion},
            "protocol": {
                "subsets": summary.subsets,
                "alpha": summary.alpha,
                "warning_alpha": summary.warning_alpha,
                "counts": _jsonable(summary.counts),
                "p_values": _jsonable(summary.p_values),
                "overall_accept_fraction": summary.overall_accept_fraction,
            },
        }

    @app.post("/pipeline/run")
    def pipeline_run(req: PipelineRequest) -> dict:
        try:
            # Persistence is the client's business; the service only computes.
            cfg = build_pipeline_config(req.config, output_dir=None)
            cfg = dataclasses.replace(cfg, output_dir=None)
            report, artifacts = run_pipeline(cfg)
        except (ValueError, KeyError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {"report": report, "artifacts": artifacts}

    @app.post("/plots/render")
    def plots_render(req: PlotRequest) -> dict:
        svgs: dict[str, str] = {}
        notices: list[str] = []
        for name, builder in PLOT_BUILDERS.items():
            svg = builder(req.report)
            if svg is None:
                notices.append(f"{name}: stage data missing, plot skipped")
            else:
                svgs[name] = svg
        return {"svgs": svgs, "notices": notices}

    return app


app = create_app()
