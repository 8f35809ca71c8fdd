import csv
import datetime as dt
import json

import jsonschema
import numpy as np
import pytest

from fbmtrend.fbm import FbmParams
from fbmtrend.pipeline import REPORT_SCHEMA, PipelineConfig, run_pipeline, write_artifacts
from fbmtrend.synth import SynthSpec

STEEP = SynthSpec(
    trend=[(210, 0.25), (400, -0.30), (620, 0.28), (800, -0.26), (999, 0.27)],
    fbm=FbmParams(hurst=0.427, diffusion=0.0846),
    n_days=1000,
    missing_fraction=0.05,
    seed=11,
)


def small_config(**overrides) -> PipelineConfig:
    base = dict(
        synth=STEEP,
        extrema_window=45,
        extrema_min_separation=120,
        welch_segment_length=128,
        band_f_min=0.015,
        band_f_max=0.2,
        sw_sims=100,
        rjb_blocks=2,
        rjb_sims_per_block=10,
        rjb_mc_iterations=1000,
        dma_subsets=3,
        dma_m_step=25,
        seed=7,
    )
    base.update(overrides)
    return PipelineConfig(**base)


@pytest.fixture(scope="module")
def small_run():
    return run_pipeline(small_config())


class TestRunPipeline:
    def test_all_stages_present(self, small_run):
        report, artifacts = small_run
        assert report["errors"] == []
        for stage in (
            "series",
            "extrema",
            "trend",
            "detrended",
            "bm_test",
            "spectral",
            "diffusion",
            "sw_protocol",
            "rjb_protocol",
            "dma_protocol",
            "synth_truth",
        ):
            assert stage in report["stages"], stage

    def test_report_schema_validates(self, small_run):
        report, _ = small_run
        jsonschema.validate(report, REPORT_SCHEMA)

    def test_artifact_inventory(self, small_run):
        _, artifacts = small_run
        expected = {
            "run_report.json",
            "series.csv",
            "synth_truth.json",
            "trend.json",
            "breakpoints.csv",
            "bm_test.json",
            "periodogram.csv",
            "spectral_fit.json",
            "sw_w_values.csv",
            "rjb_table.csv",
            "dma_protocol.csv",
            "dma_pvalues.csv",
            "scatter_trend.svg",
            "detrended.svg",
            "residual_hist_qq.svg",
            "periodogram.svg",
            "periodogram_loglog.svg",
            "sw_w_histogram.svg",
            "dma_pvalues.svg",
        }
        assert expected == set(artifacts)

    def test_deterministic_reports_and_svgs(self, small_run):
        report_a, artifacts_a = small_run
        _, artifacts_b = run_pipeline(small_config())
        assert artifacts_a == artifacts_b

    def test_seed_changes_output(self, small_run):
        _, artifacts_a = small_run
        _, artifacts_b = run_pipeline(small_config(seed=8))
        assert artifacts_a["run_report.json"] != artifacts_b["run_report.json"]

    def test_recovers_sensible_estimates(self, small_run):
        report, _ = small_run
        stages = report["stages"]
        assert len(stages["trend"]["segments"]) == 5
        fit = stages["spectral"]["fit"]
        assert fit["classification"] == "fBm"
        assert abs(fit["hurst_estimate"] - 0.427) < 0.15
        assert abs(stages["diffusion"]["d_hat"] - 0.0846) / 0.0846 < 0.25

    def test_series_csv_shape(self, small_run):
        _, artifacts = small_run
        rows = list(csv.reader(artifacts["series.csv"].splitlines()))
        assert rows[0] == ["day_index", "date", "value", "interpolated"]
        assert len(rows) == 1001
        flags = {r[3] for r in rows[1:]}
        assert flags == {"0", "1"}

    def test_dma_protocol_csv_percentages(self, small_run):
        _, artifacts = small_run
        rows = list(csv.reader(artifacts["dma_protocol.csv"].splitlines()))
        header = rows[0]
        assert header[:2] == ["set", "reject"]
        for row in rows[1:]:
            rej, warn, acc = int(row[1]), int(row[3]), int(row[5])
            tot = rej + warn + acc
            assert float(row[2]) == pytest.approx(100.0 * rej / tot, abs=0.01)

    def test_config_echo_excludes_output_dir(self, small_run):
        report, _ = small_run
        assert "output_dir" not in report["config"]
        assert report["config"]["seed"] == 7


class TestPipelineFailureModes:
    def test_constant_input_fails_at_bm_stage(self, tmp_path):
        p = tmp_path / "flat.csv"
        rows = "\n".join(
            f"{dt.date(2020, 1, 1) + dt.timedelta(days=i)},21.5" for i in range(400)
        )
        p.write_text(rows + "\n")
        report, artifacts = run_pipeline(
            PipelineConfig(input_csv=str(p), welch_segment_length=64, seed=1)
        )
        failed = {e["stage"]: e["error"] for e in report["errors"]}
        assert "bm_test" in failed
        assert "sigma" in failed["bm_test"]
        # partial outputs retained
        assert "series" in report["stages"]
        assert "trend" in report["stages"]
        assert "detrended" in report["stages"]
        assert "run_report.json" in artifacts

    def test_radius_zero_keeps_raw_extrema(self):
        report, _ = run_pipeline(small_config(refinement_radius=0))
        stages = report["stages"]
        anchor_times = sorted(
            [t for t, _ in stages["extrema"]["maxima"]]
            + [t for t, _ in stages["extrema"]["minima"]]
        )
        interior = stages["trend"]["breakpoints"][1:-1]
        assert interior == anchor_times

    def test_missing_input_file(self):
        report, artifacts = run_pipeline(
            PipelineConfig(input_csv="/does/not/exist.csv", seed=0)
        )
        assert report["errors"][0]["stage"] == "source"
        assert "run_report.json" in artifacts

    def test_config_validation(self):
        with pytest.raises(ValueError, match="exactly one"):
            PipelineConfig()
        with pytest.raises(ValueError, match="exactly one"):
            PipelineConfig(input_csv="x.csv", synth=STEEP)
        with pytest.raises(ValueError, match="alpha"):
            PipelineConfig(synth=STEEP, alpha_bm=1.5)


def test_write_artifacts_round_trip(tmp_path, small_run):
    _, artifacts = small_run
    written = write_artifacts(artifacts, tmp_path / "out")
    assert len(written) == len(artifacts)
    report = json.loads((tmp_path / "out" / "run_report.json").read_text())
    assert report["stages"]["spectral"]["fit"]["classification"] == "fBm"
