"""Flat `key = value` run-configuration files.

Lines are `key = value`; blank lines and `#` comments are ignored.  Keys
mirror :class:`fbmtrend.pipeline.PipelineConfig` fields; synthetic inputs
are described by `synth_*` keys (`synth = demo` selects the bundled
seven-season demo spec).  See the README for the full key table.
"""

from __future__ import annotations

import datetime as dt

from .fbm import FbmParams
from .pipeline import PipelineConfig
from .synth import SynthSpec, seasonal_demo_spec

__all__ = ["parse_config_text", "build_pipeline_config", "load_config"]

_INT_KEYS = {
    "extrema_window", "extrema_min_separation", "refinement_radius",
    "welch_segment_length", "sw_sims", "rjb_blocks", "rjb_sims_per_block",
    "rjb_mc_iterations", "dma_subsets", "dma_chi_samples", "dma_m_step",
    "seed", "synth_seed", "synth_n_days",
}
_FLOAT_KEYS = {
    "welch_overlap", "band_f_min", "band_f_max", "alpha_bm", "alpha_gauss",
    "alpha_dma", "synth_missing_fraction", "synth_hurst", "synth_diffusion",
    "synth_start_value",
}
_STR_KEYS = {
    "input_csv", "welch_window", "dma_mode", "diffusion_convention",
    "output_dir", "synth", "synth_breakpoints", "synth_slopes", "synth_epoch",
}


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValueError(f"config line {lineno}: expected `key = value`")
        key, value = (part.strip() for part in body.split("=", 1))
        if not key:
            raise ValueError(f"config line {lineno}: empty key")
        if key in out:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _typed(key: str, raw):
    if key not in _INT_KEYS | _FLOAT_KEYS | _STR_KEYS:
        raise ValueError(f"unknown config key {key!r}")
    if raw is None or (isinstance(raw, str) and raw.lower() in ("none", "")):
        return None
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    return str(raw)


def _build_synth(kv: dict) -> SynthSpec | None:
    kind = kv.get("synth")
    if kind is None:
        return None
    seed = kv.get("synth_seed", 5)
    if kind == "demo":
        n_days = kv.get("synth_n_days", 2348)
        return seasonal_demo_spec(
            seed=seed,
            missing_fraction=kv.get("synth_missing_fraction", 0.0),
            n_days=n_days,
        )
    if kind != "custom":
        raise ValueError("synth must be `demo` or `custom`")
    breaks = [int(v) for v in kv["synth_breakpoints"].split(",")]
    slopes = [float(v) for v in kv["synth_slopes"].split(",")]
    if len(breaks) != len(slopes):
        raise ValueError("synth_breakpoints and synth_slopes must pair up")
    epoch = kv.get("synth_epoch")
    return SynthSpec(
        trend=list(zip(breaks, slopes)),
        fbm=FbmParams(hurst=kv["synth_hurst"], diffusion=kv["synth_diffusion"]),
        n_days=kv["synth_n_days"],
        missing_fraction=kv.get("synth_missing_fraction", 0.0),
        seed=seed,
        start_value=kv.get("synth_start_value", 30.0),
        epoch=dt.date.fromisoformat(epoch) if epoch else dt.date(2011, 1, 1),
    )


def build_pipeline_config(raw: dict[str, str], **overrides) -> PipelineConfig:
    """Typed PipelineConfig from parsed key/value pairs plus overrides."""
    kv = {key: _typed(key, value) for key, value in raw.items()}
    kv = {k: v for k, v in kv.items() if v is not None}
    kv.update({k: v for k, v in overrides.items() if v is not None})
    synth = _build_synth(kv)
    pipeline_keys = {f.name for f in PipelineConfig.__dataclass_fields__.values()}
    args = {k: v for k, v in kv.items() if k in pipeline_keys and k != "synth"}
    return PipelineConfig(synth=synth, **args)


def load_config(path, **overrides) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return build_pipeline_config(parse_config_text(fh.read()), **overrides)
