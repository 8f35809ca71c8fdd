"""End-to-end workflow: ingest, detrend, estimate, test, report.

Stages run sequentially, each consuming the previous stage's output.  A
stage failure is recorded under its stage name and dependent stages are
skipped, but everything already computed stays in the report (statistical
rejection is report content, never a failure).  All randomness fans out
from the single config seed by stage name, so identical (input, config,
seed) produce identical reports and artifacts, byte for byte.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .brownian import briane_bm_test
from .dma import DmaConfig, dma_subset_protocol
from .fbm import FbmParams, estimate_diffusion
from .gaussian import rjb_block_protocol, sw_simulation_protocol
from .rng import spawn_key
from .series import (
    TimeSeries,
    interpolate_daily,
    load_csv,
    subsample_weekly,
)
from .spectral import fit_loglog, welch_periodogram
from .svgplots import PLOT_BUILDERS
from .synth import SynthSpec, synth_generate
from .trend import detrend, find_extrema, fit_trend, trend_to_json

__all__ = ["PipelineConfig", "run_pipeline", "write_artifacts", "REPORT_SCHEMA"]


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one run needs; exactly one of input_csv / synth."""

    input_csv: str | None = None
    synth: SynthSpec | None = None
    extrema_window: int = 45
    extrema_min_separation: int = 120
    refinement_radius: int = 5
    welch_segment_length: int | None = None
    welch_overlap: float = 0.5
    welch_window: str = "hamming"
    band_f_min: float | None = 0.015
    band_f_max: float | None = 0.1
    alpha_bm: float = 0.05
    alpha_gauss: float = 0.02
    alpha_dma: float = 0.02
    sw_sims: int = 10_000
    rjb_blocks: int = 10
    rjb_sims_per_block: int = 100
    rjb_mc_iterations: int = 10_000
    dma_subsets: int = 10
    dma_chi_samples: int = 1000
    dma_mode: str = "detrended"
    dma_m_step: int = 1
    diffusion_convention: str = "half"
    seed: int = 0
    output_dir: str | None = None

    def __post_init__(self) -> None:
        if (self.input_csv is None) == (self.synth is None):
            raise ValueError("exactly one of input_csv / synth is required")
        if self.refinement_radius < 0:
            raise ValueError("refinement_radius must be >= 0")
        for a in (self.alpha_bm, self.alpha_gauss, self.alpha_dma):
            if not 0.0 < a < 1.0:
                raise ValueError("alpha levels must lie in (0, 1)")


REPORT_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["package_version", "config", "stages", "errors"],
    "properties": {
        "package_version": {"type": "string"},
        "config": {"type": "object"},
        "stages": {
            "type": "object",
            "properties": {
                "series": {
                    "type": "object",
                    "required": ["times", "values"],
                    "properties": {
                        "times": {"type": "array", "items": {"type": "number"}},
                        "values": {"type": "array", "items": {"type": "number"}},
                    },
                },
                "trend": {
                    "type": "object",
                    "required": ["segments", "breakpoints"],
                },
                "detrended": {"type": "object", "required": ["times", "values"]},
                "bm_test": {"type": "object", "required": ["test", "statistic", "decision"]},
                "spectral": {"type": "object", "required": ["frequencies", "power", "fit"]},
                "diffusion": {"type": "object", "required": ["d_hat"]},
                "sw_protocol": {"type": "object", "required": ["fraction_passing"]},
                "rjb_protocol": {"type": "object", "required": ["acceptance_percent"]},
                "dma_protocol": {"type": "object", "required": ["counts", "p_values"]},
            },
        },
        "errors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["stage", "error"],
                "properties": {"stage": {"type": "string"}, "error": {"type": "string"}},
            },
        },
    },
}


def _stage_seed(root: int, label: str) -> int:
    return (root * 0x9E3779B1 + spawn_key(label)) % (2**63)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dt.date):
        return obj.isoformat()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    return obj


def _config_echo(cfg: PipelineConfig) -> dict:
    # output_dir is environment, not inference input; dropping it keeps two
    # runs into different directories byte-identical.
    echo = _jsonable(dataclasses.asdict(cfg))
    echo.pop("output_dir", None)
    return echo


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def run_pipeline(cfg: PipelineConfig) -> tuple[dict, dict[str, str]]:
    """Execute every stage and return (report, artifacts).

    artifacts map file names to text content (CSV/JSON/SVG); when
    cfg.output_dir is set they are also written there along with the
    report.
    """
    report: dict = {
        "package_version": __version__,
        "config": _config_echo(cfg),
        "stages": {},
        "errors": [],
    }
    artifacts: dict[str, str] = {}
    stages = report["stages"]

    def fail(stage: str, exc: Exception) -> None:
        report["errors"].append({"stage": stage, "error": str(exc)})

    # source
    raw: TimeSeries | None = None
    try:
        if cfg.input_csv is not None:
            raw = load_csv(cfg.input_csv)
        else:
            assert cfg.synth is not None
            result = synth_generate(cfg.synth)
            raw = result.series
            truth = dict(result.ground_truth)
            stages["synth_truth"] = {
                k: truth[k]
                for k in ("breakpoints", "slopes", "hurst", "diffusion", "seed", "n_days")
            }
            artifacts["synth_truth.json"] = json.dumps(
                _jsonable(truth), indent=2, sort_keys=True
            )
    except Exception as exc:
        fail("source", exc)

    # interpolate
    daily: TimeSeries | None = None
    if raw is not None:
        try:
            daily, gaps = interpolate_daily(raw)
            inserted = ~np.isin(daily.times, raw.times)
            stages["series"] = {
                "times": _jsonable(daily.times),
                "values": _jsonable(daily.values),
                "interpolated": _jsonable(inserted.astype(int)),
                "gap_spans": _jsonable(gaps.gap_spans),
                "total_inserted": gaps.total_inserted,
                "epoch": _jsonable(daily.epoch),
            }
            artifacts["series.csv"] = _csv_text(
                ["day_index", "date", "value", "interpolated"],
                (
                    [
                        int(t),
                        daily.date_of(t).isoformat() if daily.epoch else "",
                        repr(float(v)),
                        int(flag),
                    ]
                    for t, v, flag in zip(daily.times, daily.values, inserted)
                ),
            )
        except Exception as exc:
            fail("interpolate", exc)

    # trend
    trend = None
    if daily is not None:
        try:
            # allow_empty: a monotone or constant input degrades to a single
            # OLS segment so the residual tests still run (and fail loudly
            # where the statistics are genuinely degenerate)
            extrema = find_extrema(
                daily,
                min_separation=cfg.extrema_min_separation,
                window=cfg.extrema_window,
                allow_empty=True,
            )
            stages["extrema"] = {
                "maxima": _jsonable(extrema.maxima),
                "minima": _jsonable(extrema.minima),
            }
            trend = fit_trend(daily, extrema, radius=cfg.refinement_radius)
            stages["trend"] = {
                "segments": [
                    {
                        "start_time": s.start_time,
                        "end_time": s.end_time,
                        "slope": s.slope,
                        "intercept": s.intercept,
                        "r_squared": s.r_squared,
                        "n_obs": s.n_obs,
                    }
                    for s in trend.segments
                ],
                "breakpoints": _jsonable(trend.breakpoints),
                "sign_warnings": list(trend.sign_warnings),
                "discontinuities": _jsonable(trend.discontinuities),
            }
            artifacts["trend.json"] = trend_to_json(trend, epoch=daily.epoch)
            artifacts["breakpoints.csv"] = _csv_text(
                ["breakpoint_day", "breakpoint_date", "slope_per_day", "r_squared"],
                (
                    [
                        seg.end_time,
                        (
                            daily.date_of(seg.end_time).isoformat()
                            if daily.epoch
                            else ""
                        ),
                        repr(seg.slope),
                        repr(seg.r_squared),
                    ]
                    for seg in trend.segments
                ),
            )
        except Exception as exc:
            fail("trend", exc)

    # detrend
    residual: TimeSeries | None = None
    if daily is not None and trend is not None:
        try:
            residual = detrend(daily, trend)
            stages["detrended"] = {
                "times": _jsonable(residual.times),
                "values": _jsonable(residual.values),
            }
        except Exception as exc:
            fail("detrend", exc)

    # Brownian-motion test
    if residual is not None:
        try:
            stages["bm_test"] = _jsonable(
                briane_bm_test(residual, alpha=cfg.alpha_bm).to_dict()
            )
            artifacts["bm_test.json"] = json.dumps(
                stages["bm_test"], indent=2, sort_keys=True
            )
        except Exception as exc:
            fail("bm_test", exc)

    # spectral estimation
    fit = None
    if residual is not None:
        try:
            pgram = welch_periodogram(
                residual,
                segment_length=cfg.welch_segment_length,
                overlap=cfg.welch_overlap,
                window=cfg.welch_window,
            )
            fit = fit_loglog(pgram, f_min=cfg.band_f_min, f_max=cfg.band_f_max)
            stages["spectral"] = {
                "frequencies": _jsonable(pgram.frequencies),
                "power": _jsonable(pgram.power),
                "segment_length": pgram.segment_length,
                "overlap": pgram.overlap_fraction,
                "window": pgram.window_name,
                "fit": _jsonable(dataclasses.asdict(fit)),
            }
            artifacts["periodogram.csv"] = _csv_text(
                ["frequency", "power"],
                ([repr(float(f)), repr(float(p))] for f, p in zip(pgram.frequencies, pgram.power)),
            )
            artifacts["spectral_fit.json"] = json.dumps(
                _jsonable(dataclasses.asdict(fit)), indent=2, sort_keys=True
            )
        except Exception as exc:
            fail("spectral", exc)

    # diffusion estimate and fitted parameters
    params: FbmParams | None = None
    if residual is not None:
        try:
            d_hat = estimate_diffusion(residual, convention=cfg.diffusion_convention)
            stages["diffusion"] = {
                "d_hat": d_hat,
                "convention": cfg.diffusion_convention,
            }
            if fit is not None and fit.hurst_estimate is not None and d_hat > 0:
                params = FbmParams(hurst=fit.hurst_estimate, diffusion=d_hat)
            else:
                raise ValueError(
                    "no usable (H, D) estimate: spectral classification "
                    f"{fit.classification if fit else 'missing'}, d_hat {d_hat}"
                )
        except Exception as exc:
            fail("params", exc)

    # weekly subsample + Gaussianity protocols
    if daily is not None and trend is not None and params is not None:
        try:
            weekly = subsample_weekly(daily)
            sw = sw_simulation_protocol(
                weekly,
                trend,
                params,
                n_sims=cfg.sw_sims,
                seed=_stage_seed(cfg.seed, "sw-protocol"),
            )
            stages["sw_protocol"] = {
                "n_sims": sw.n_sims,
                "threshold": sw.threshold,
                "fraction_passing": sw.fraction_passing,
                "histogram": _jsonable(sw.histogram),
                "seed": sw.seed,
            }
            artifacts["sw_w_values.csv"] = _csv_text(
                ["i", "w"], ([i, repr(float(w))] for i, w in enumerate(sw.w_values))
            )
        except Exception as exc:
            fail("sw_protocol", exc)

        try:
            weekly = subsample_weekly(daily)
            rjb = rjb_block_protocol(
                weekly,
                trend,
                params,
                n=cfg.rjb_sims_per_block,
                blocks=cfg.rjb_blocks,
                alpha=cfg.alpha_gauss,
                mc_iterations=cfg.rjb_mc_iterations,
                seed=_stage_seed(cfg.seed, "rjb-protocol"),
            )
            stages["rjb_protocol"] = _jsonable(dataclasses.asdict(rjb))
            artifacts["rjb_table.csv"] = _csv_text(
                ["block", "acceptance_percent"],
                ([h + 1, repr(p)] for h, p in enumerate(rjb.acceptance_percent)),
            )
        except Exception as exc:
            fail("rjb_protocol", exc)

    # DMA subset protocol
    if residual is not None and params is not None:
        try:
            dma = dma_subset_protocol(
                residual,
                params,
                subsets=cfg.dma_subsets,
                cfg_base=DmaConfig(
                    window_m=2,
                    chi_square_samples=cfg.dma_chi_samples,
                    covariance_mode=cfg.dma_mode,
                ),
                seed=_stage_seed(cfg.seed, "dma-protocol"),
                m_step=cfg.dma_m_step,
            )
            stages["dma_protocol"] = {
                "subsets": dma.subsets,
                "alpha": dma.alpha,
                "warning_alpha": dma.warning_alpha,
                "counts": _jsonable(dma.counts),
                "p_values": _jsonable(dma.p_values),
                "overall_accept_fraction": dma.overall_accept_fraction,
            }
            artifacts["dma_protocol.csv"] = _csv_text(
                ["set", "reject", "reject_pct", "warning", "warning_pct", "accept", "accept_pct", "n_obs"],
                (
                    [
                        i + 1,
                        c["reject"],
                        repr(round(100.0 * c["reject"] / tot, 4)),
                        c["warning"],
                        repr(round(100.0 * c["warning"] / tot, 4)),
                        c["accept"],
                        repr(round(100.0 * c["accept"] / tot, 4)),
                        c["n_obs"],
                    ]
                    for i, c in enumerate(dma.counts)
                    for tot in [max(c["reject"] + c["warning"] + c["accept"], 1)]
                ),
            )
            artifacts["dma_pvalues.csv"] = _csv_text(
                ["subset", "m", "p"],
                ([s + 1, m, repr(float(p))] for s, m, p in dma.p_values),
            )
        except Exception as exc:
            fail("dma_protocol", exc)

    jsonschema.validate(report, REPORT_SCHEMA)
    artifacts["run_report.json"] = json.dumps(report, indent=2, sort_keys=True)

    for name, builder in PLOT_BUILDERS.items():
        svg = builder(report)
        if svg is not None:
            artifacts[name] = svg

    if cfg.output_dir is not None:
        write_artifacts(artifacts, cfg.output_dir)
    return report, artifacts


def write_artifacts(artifacts: dict[str, str], outdir) -> list[Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, content in artifacts.items():
        p = out / name
        p.write_text(content, encoding="utf-8")
        written.append(p)
    return sorted(written)
