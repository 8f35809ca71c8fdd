import numpy as np
import pytest
from fastapi.testclient import TestClient

from fbmtrend import __version__
from fbmtrend.fbm import FbmParams, simulate_fbm
from fbmtrend.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def _series_payload(values, times=None):
    values = [float(v) for v in values]
    times = list(range(len(values))) if times is None else [float(t) for t in times]
    return {"times": times, "values": values, "epoch": None}


def _fbm_payload(n, seed, params=FbmParams(0.427, 0.0846)):
    path = simulate_fbm(params, n, seed)
    return _series_payload(path.values)


SAWTOOTH = {
    "demo": False,
    "seed": 3,
    "n_days": 500,
    "missing_fraction": 0.0,
    "trend": [[150, 0.3], [320, -0.25], [499, 0.28]],
    "fbm": {"hurst": 0.427, "diffusion": 0.0846},
}


class TestHealthAndSchema:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body == {"status": "ok", "version": __version__}

    def test_report_schema_exposed(self, client):
        schema = client.get("/schema/run-report").json()
        assert schema["required"] == ["package_version", "config", "stages", "errors"]


class TestSynthEndpoint:
    def test_demo_series(self, client):
        resp = client.post("/synth", json={"demo": True, "seed": 5, "n_days": 2348})
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["series"]["values"]) == 2348
        assert body["ground_truth"]["hurst"] == 0.427

    def test_custom_series_deterministic(self, client):
        a = client.post("/synth", json=SAWTOOTH).json()
        b = client.post("/synth", json=SAWTOOTH).json()
        assert a["series"]["values"] == b["series"]["values"]

    def test_invalid_spec_rejected(self, client):
        bad = dict(SAWTOOTH, trend=[[150, 0.3], [320, 0.25], [499, 0.28]])
        assert client.post("/synth", json=bad).status_code == 422


class TestTrendEndpoint:
    def test_fit_on_synth(self, client):
        series = client.post("/synth", json=SAWTOOTH).json()["series"]
        resp = client.post(
            "/trend/fit",
            json={"series": series, "window": 45, "min_separation": 120, "radius": 5},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["trend"]["segments"]) == 3
        assert len(body["breakpoints"]) == 4

    def test_monotone_series_rejected(self, client):
        resp = client.post(
            "/trend/fit", json={"series": _series_payload(np.arange(300.0))}
        )
        assert resp.status_code == 422
        assert "extrema" in resp.json()["detail"]


class TestHurstEndpoint:
    def test_fbm_classification(self, client):
        resp = client.post(
            "/hurst/estimate",
            json={"series": _fbm_payload(4096, seed=21), "segment_length": 1024},
        )
        assert resp.status_code == 200
        fit = resp.json()["fit"]
        assert fit["classification"] == "fBm"
        assert abs(fit["hurst_estimate"] - 0.427) < 0.15

    def test_too_short_rejected(self, client):
        resp = client.post(
            "/hurst/estimate", json={"series": _series_payload(np.arange(10.0))}
        )
        assert resp.status_code == 422


class TestBmEndpoint:
    def test_wiener_path(self, client):
        resp = client.post(
            "/tests/bm",
            json={"series": _fbm_payload(500, seed=4, params=FbmParams(0.5, 0.5))},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["test"] == "briane_bm"
        assert body["region"][0] == pytest.approx(0.834, abs=0.01)
        assert body["decision"] in ("accept", "reject")

    def test_constant_rejected(self, client):
        resp = client.post("/tests/bm", json={"series": _series_payload(np.ones(50))})
        assert resp.status_code == 422


class TestDmaEndpoint:
    def test_single_window_with_params(self, client):
        resp = client.post(
            "/tests/dma",
            json={
                "series": _fbm_payload(251, seed=8),
                "params": {"hurst": 0.427, "diffusion": 0.0846},
                "window_m": 20,
                "seed": 8,
            },
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["report"]["metadata"]["m"] == 20
        assert 0.0 <= body["report"]["p_value"] <= 1.0

    def test_subset_protocol(self, client):
        resp = client.post(
            "/tests/dma",
            json={
                "series": _fbm_payload(400, seed=9),
                "params": {"hurst": 0.427, "diffusion": 0.0846},
                "subsets": 2,
                "m_step": 20,
                "seed": 9,
            },
        )
        assert resp.status_code == 200
        proto = resp.json()["protocol"]
        assert len(proto["counts"]) == 2
        assert proto["overall_accept_fraction"] >= 0.0


class TestGaussEndpoint:
    def test_protocols_run(self, client):
        series = client.post("/synth", json=SAWTOOTH).json()["series"]
        resp = client.post(
            "/tests/gauss",
            json={
                "series": series,
                "sw_sims": 20,
                "rjb_blocks": 2,
                "rjb_sims_per_block": 5,
                "rjb_mc_iterations": 1000,
                "seed": 1,
            },
        )
        assert resp.status_code == 200
        body = resp.json()
        assert 0.0 <= body["sw"]["fraction_passing"] <= 1.0
        assert len(body["rjb"]["acceptance_percent"]) == 2
        assert 0.0 < body["params_used"]["hurst"] < 1.0


class TestPipelineEndpoint:
    CONFIG = {
        "synth": "custom",
        "synth_breakpoints": "150,320,499",
        "synth_slopes": "0.3,-0.25,0.28",
        "synth_hurst": 0.427,
        "synth_diffusion": 0.0846,
        "synth_n_days": 500,
        "synth_seed": 3,
        "welch_segment_length": 128,
        "band_f_max": 0.2,
        "sw_sims": 50,
        "rjb_blocks": 2,
        "rjb_sims_per_block": 5,
        "rjb_mc_iterations": 1000,
        "dma_subsets": 2,
        "dma_m_step": 40,
        "seed": 12,
    }

    def test_run_and_artifacts(self, client):
        resp = client.post("/pipeline/run", json={"config": self.CONFIG})
        assert resp.status_code == 200
        body = resp.json()
        assert body["report"]["errors"] == []
        assert "run_report.json" in body["artifacts"]
        assert "scatter_trend.svg" in body["artifacts"]

    def test_unknown_key_rejected(self, client):
        resp = client.post("/pipeline/run", json={"config": {"bogus_key": 1}})
        assert resp.status_code == 422

    def test_plots_render_from_report(self, client):
        report = client.post("/pipeline/run", json={"config": self.CONFIG}).json()["report"]
        resp = client.post("/plots/render", json={"report": report})
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["svgs"]) == 7
        assert body["notices"] == []
