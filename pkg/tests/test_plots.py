import numpy as np

from fbmtrend.svgplots import PLOT_BUILDERS, emit_plots


def _report_with(*stage_names):
    t = list(np.linspace(0.0, 99.0, 100))
    v = list(np.sin(np.linspace(0.0, 9.0, 100)) * 2.0 + 30.0)
    stages = {}
    if "series" in stage_names:
        stages["series"] = {"times": t, "values": v}
    if "trend" in stage_names:
        stages["trend"] = {
            "segments": [
                {"start_time": 0.0, "end_time": 50.0, "slope": 0.1, "intercept": 30.0},
                {"start_time": 50.0, "end_time": 99.0, "slope": -0.1, "intercept": 40.0},
            ],
            "breakpoints": [0.0, 50.0, 99.0],
        }
    if "detrended" in stage_names:
        stages["detrended"] = {"times": t, "values": list(np.sin(np.arange(100.0)))}
    if "spectral" in stage_names:
        f = list(np.linspace(0.01, 0.5, 64))
        stages["spectral"] = {
            "frequencies": f,
            "power": [2.0 * fi**-1.8 for fi in f],
            "fit": {"beta": 1.8, "log_intercept": np.log(2.0), "f_min": 0.01, "f_max": 0.5},
        }
    if "sw_protocol" in stage_names:
        stages["sw_protocol"] = {
            "histogram": {
                "bin_edges": list(np.linspace(0.8, 1.0, 11)),
                "counts": [0, 1, 2, 3, 5, 8, 13, 21, 34, 13],
            },
            "threshold": 0.98,
            "fraction_passing": 0.47,
        }
    if "dma_protocol" in stage_names:
        stages["dma_protocol"] = {
            "counts": [],
            "p_values": [[s, m, (m % 19) / 19.0] for s in range(3) for m in range(2, 40)],
        }
    return {"stages": stages}


ALL_STAGES = ("series", "trend", "detrended", "spectral", "sw_protocol", "dma_protocol")


def test_trend_only_report_yields_single_svg(tmp_path):
    written, notices = emit_plots(_report_with("series", "trend"), tmp_path)
    assert [p.name for p in written] == ["scatter_trend.svg"]
    assert len(notices) == len(PLOT_BUILDERS) - 1


def test_full_report_yields_seven_svgs(tmp_path):
    written, notices = emit_plots(_report_with(*ALL_STAGES), tmp_path)
    assert len(written) == 7
    assert notices == []
    for p in written:
        text = p.read_text()
        assert text.startswith("<svg")
        assert text.rstrip().endswith("</svg>")


def test_byte_identical_re_render(tmp_path):
    report = _report_with(*ALL_STAGES)
    first, _ = emit_plots(report, tmp_path / "a")
    second, _ = emit_plots(report, tmp_path / "b")
    for pa, pb in zip(first, second):
        assert pa.read_bytes() == pb.read_bytes()


def test_empty_report_writes_nothing(tmp_path):
    written, notices = emit_plots({"stages": {}}, tmp_path)
    assert written == []
    assert len(notices) == len(PLOT_BUILDERS)
