import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbmtrend.fbm import FbmParams, simulate_fbm
from fbmtrend.series import TimeSeries
from fbmtrend.trend import (
    ExtremaSet,
    PiecewiseLinearTrend,
    Segment,
    TrendError,
    detrend,
    evaluate_trend,
    find_extrema,
    fit_trend,
    ols_fit,
    refine_breakpoint,
    select_max_r2,
)

# R-squared column of the candidate table for the first breakpoint; the
# winner is the anchor itself at position 5.
CANDIDATE_R2 = [
    0.9302, 0.9326, 0.9341, 0.9369, 0.9405, 0.9442,
    0.9021, 0.8787, 0.8574, 0.8369, 0.7880,
]


def _series(values, times=None):
    values = np.asarray(values, dtype=float)
    times = np.arange(len(values), dtype=float) if times is None else np.asarray(times, dtype=float)
    return TimeSeries(times=times, values=values)


def _sawtooth(breaks, slopes, n, start=30.0):
    t = np.arange(n, dtype=float)
    out = np.empty(n)
    level, prev = start, 0
    for b, sl in zip(breaks, slopes):
        m = (t >= prev) & (t <= b)
        out[m] = level + sl * (t[m] - prev)
        level += sl * (b - prev)
        prev = b
    return out


class TestOlsFit:
    def test_exact_line(self):
        s = _series(2.0 * np.arange(10.0) + 1.0)
        seg = ols_fit(s, 0, 9)
        assert seg.slope == pytest.approx(2.0)
        assert seg.intercept == pytest.approx(1.0)
        assert seg.r_squared == pytest.approx(1.0)

    def test_hand_normal_equations(self):
        # (0,0),(1,1),(2,0): slope 0, intercept 1/3, R^2 = 0
        s = _series([0.0, 1.0, 0.0])
        seg = ols_fit(s, 0, 2)
        assert seg.slope == pytest.approx(0.0)
        assert seg.intercept == pytest.approx(1.0 / 3.0)
        assert seg.r_squared == pytest.approx(0.0)

    def test_constant_values_degenerate(self):
        s = _series([5.0, 5.0, 5.0, 5.0])
        seg = ols_fit(s, 0, 3)
        assert seg.degenerate
        assert seg.r_squared == 0.0

    def test_too_few_observations(self):
        s = _series([1.0, 2.0, 3.0, 4.0])
        with pytest.raises(TrendError, match="fewer than 3"):
            ols_fit(s, 0, 1)

    @settings(max_examples=60, deadline=None)
    @given(
        shift=st.floats(-50, 50),
        seed=st.integers(0, 10_000),
    )
    def test_shift_invariance(self, shift, seed):
        rng = np.random.default_rng(seed)
        y = rng.normal(size=12)
        if np.allclose(y, y[0]):
            return
        base = ols_fit(_series(y), 0, 11)
        moved = ols_fit(_series(y + shift), 0, 11)
        assert moved.slope == pytest.approx(base.slope, abs=1e-9)
        assert moved.r_squared == pytest.approx(base.r_squared, abs=1e-9)
        assert moved.intercept == pytest.approx(base.intercept + shift, abs=1e-7)


class TestSelectMaxR2:
    def test_candidate_table_selects_anchor(self):
        assert select_max_r2(CANDIDATE_R2, anchor_pos=5) == 5

    def test_tie_prefers_nearest_to_anchor(self):
        assert select_max_r2([0.9, 0.9, 0.9], anchor_pos=1) == 1
        assert select_max_r2([0.5, 0.9, 0.9, 0.9], anchor_pos=0) == 1

    def test_tie_at_equal_distance_prefers_earlier(self):
        assert select_max_r2([0.9, 0.1, 0.9], anchor_pos=1) == 0

    def test_none_entries_skipped(self):
        assert select_max_r2([None, 0.3, None], anchor_pos=0) == 1

    def test_all_none_raises(self):
        with pytest.raises(TrendError):
            select_max_r2([None, None], anchor_pos=0)


class TestRefineBreakpoint:
    def test_noiseless_kink_selected_exactly(self):
        y = _sawtooth([30, 59], [1.0, -0.5], 60)
        s = _series(y)
        end, seg = refine_breakpoint(s, 0, 30, radius=5)
        assert end == 30
        assert seg.r_squared == pytest.approx(1.0)
        assert seg.slope == pytest.approx(1.0)

    def test_all_ties_resolve_to_anchor(self):
        s = _series(3.0 * np.arange(40.0))  # any window fits perfectly
        end, _ = refine_breakpoint(s, 0, 20, radius=5)
        assert end == 20

    def test_agrees_with_brute_force(self, rng):
        y = _sawtooth([25, 49], [0.8, -0.6], 50) + rng.normal(0, 0.4, size=50)
        s = _series(y)
        radius = 5
        end, seg = refine_breakpoint(s, 0, 25, radius=radius)
        best = max(
            range(25 - radius, 25 + radius + 1),
            key=lambda c: ols_fit(s, 0, c).r_squared,
        )
        assert end == best
        assert seg.r_squared == pytest.approx(ols_fit(s, 0, best).r_squared)

    def test_out_of_bounds_candidates_rejected(self):
        s = _series(np.arange(20.0))
        with pytest.raises(TrendError, match="bounds"):
            refine_breakpoint(s, 0, 18, radius=5)

    def test_anchor_not_observation(self):
        s = _series(np.arange(30.0))
        with pytest.raises(TrendError, match="not an observation"):
            refine_breakpoint(s, 0, 14.5, radius=2)


class TestFindExtrema:
    def test_triangle_wave(self):
        n = 1200
        t = np.arange(n, dtype=float)
        # period-365 triangle, peaks at 91 + 365k, troughs at 274 + 365k
        phase = (t + 91.25) % 365
        tri = 3.0 * (1.0 - np.abs(phase / 182.5 - 1.0) * 2.0)
        ext = find_extrema(_series(tri), min_separation=120, window=45)
        merged = ext.ordered()
        kinds = [k for _, _, k in merged]
        assert all(a != b for a, b in zip(kinds, kinds[1:]))
        assert len(ext.maxima) >= 2 and len(ext.minima) >= 2

    def test_monotone_series_error_or_empty(self):
        s = _series(np.arange(200.0))
        with pytest.raises(TrendError, match="extrema"):
            find_extrema(s, min_separation=10, window=5)
        ext = find_extrema(s, min_separation=10, window=5, allow_empty=True)
        assert len(ext) == 0

    def test_demo_dataset_seasonal_counts(self, demo_extrema):
        assert len(demo_extrema.maxima) == 7
        assert len(demo_extrema.minima) == 6

    def test_same_kind_separation_enforced(self, demo_extrema):
        for seq in (demo_extrema.maxima, demo_extrema.minima):
            gaps = np.diff([t for t, _ in seq])
            assert np.all(gaps >= 250)

    def test_window_larger_than_series(self):
        with pytest.raises(TrendError, match="shorter"):
            find_extrema(_series(np.zeros(50)), min_separation=60, window=30)


class TestExtremaSet:
    def test_rejects_non_alternating(self):
        with pytest.raises(TrendError, match="alternate"):
            ExtremaSet(maxima=[(0.0, 1.0), (10.0, 2.0)], minima=[(20.0, 0.0)])

    def test_rejects_unbalanced_counts(self):
        with pytest.raises(TrendError, match="differ"):
            ExtremaSet(
                maxima=[(0.0, 1.0), (20.0, 2.0), (40.0, 3.0)], minima=[]
            )


class TestFitTrend:
    def test_noiseless_recovery_exact(self):
        breaks = [210, 400, 620, 800, 1000]
        slopes = [0.25, -0.30, 0.28, -0.26, 0.27]
        y = _sawtooth(breaks, slopes, 1001)
        s = _series(y)
        ext = find_extrema(s, min_separation=120, window=45)
        tr = fit_trend(s, ext, radius=5)
        assert [seg.end_time for seg in tr.segments] == [210, 400, 620, 800, 1000]
        for seg, true_slope in zip(tr.segments, slopes):
            assert seg.slope == pytest.approx(true_slope, abs=1e-6)
            assert seg.r_squared == pytest.approx(1.0, abs=1e-12)
        assert tr.sign_warnings == []

    def test_thirteen_extrema_make_fourteen_segments(self, demo_trend):
        assert len(demo_trend.segments) == 14

    def test_single_maximum_two_segments(self):
        y = _sawtooth([50, 99], [1.0, -1.0], 100)
        s = _series(y)
        ext = find_extrema(s, min_separation=30, window=20)
        assert len(ext.maxima) == 1 and len(ext.minima) == 0
        tr = fit_trend(s, ext, radius=3)
        assert len(tr.segments) == 2

    def test_noisy_recovery_within_tolerances(self):
        breaks = [210, 400, 620, 800, 1000]
        slopes = [0.25, -0.30, 0.28, -0.26, 0.27]
        base = _sawtooth(breaks, slopes, 1001)
        bp_errs, slope_errs = [], []
        for seed in range(15):
            noise = simulate_fbm(FbmParams(0.427, 0.0846), 1001, seed=90_000 + seed)
            s = _series(base + noise.values)
            ext = find_extrema(s, min_separation=120, window=45)
            tr = fit_trend(s, ext, radius=5)
            if len(tr.segments) != 5:
                continue
            fitted = [seg.end_time for seg in tr.segments[:-1]]
            bp_errs.append(np.median([abs(f - b) for f, b in zip(fitted, breaks)]))
            slope_errs.append(
                np.median(
                    [abs(seg.slope - sl) / abs(sl) for seg, sl in zip(tr.segments, slopes)]
                )
            )
        assert len(bp_errs) >= 12
        assert np.median(bp_errs) <= 5
        assert np.median(slope_errs) <= 0.10


class TestEvaluateAndDetrend:
    def _trend(self):
        return PiecewiseLinearTrend(
            segments=[
                Segment(start_time=0, end_time=5, slope=2.0, intercept=1.0, r_squared=1.0),
                Segment(start_time=5, end_time=10, slope=-1.0, intercept=16.0, r_squared=1.0),
            ]
        )

    def test_single_segment_value(self):
        tr = PiecewiseLinearTrend(
            segments=[Segment(start_time=0, end_time=10, slope=2.0, intercept=1.0, r_squared=1.0)]
        )
        assert evaluate_trend(tr, 3.0) == pytest.approx(7.0)

    def test_breakpoint_takes_left_segment(self):
        tr = self._trend()
        assert evaluate_trend(tr, 5.0) == pytest.approx(11.0)  # left: 2*5+1
        assert evaluate_trend(tr, 5.0 + 1e-9) == pytest.approx(16.0 - 5.0, abs=1e-6)

    def test_outside_domain_raises(self):
        tr = self._trend()
        with pytest.raises(TrendError, match="domain"):
            evaluate_trend(tr, 11.0)
        with pytest.raises(TrendError, match="domain"):
            evaluate_trend(tr, -0.5)

    def test_detrend_of_own_trend_is_zero(self):
        tr = self._trend()
        t = np.arange(11.0)
        s = TimeSeries(times=t, values=evaluate_trend(tr, t))
        assert np.allclose(detrend(s, tr).values, 0.0, atol=1e-12)

    def test_detrend_constant_offset(self):
        tr = self._trend()
        t = np.arange(11.0)
        s = TimeSeries(times=t, values=evaluate_trend(tr, t) + 2.5)
        assert np.allclose(detrend(s, tr).values, 2.5)

    def test_detrend_roundtrip_exact(self, demo_daily, demo_trend):
        resid = detrend(demo_daily, demo_trend)
        recon = resid.values + evaluate_trend(demo_trend, demo_daily.times)
        assert np.array_equal(recon, demo_daily.values)

    def test_residual_mean_near_zero_per_segment(self, demo_daily, demo_trend, demo_residual):
        # OLS residuals sum to ~0 inside each fitted window
        for seg in demo_trend.segments:
            m = (demo_residual.times >= seg.start_time) & (demo_residual.times <= seg.end_time)
            assert abs(demo_residual.values[m].mean()) < 0.05

    def test_detrended_matches_injected_path(self, demo_result, demo_trend, demo_residual):
        # The fitted trend absorbs each segment's linear component of the
        # injected path, so the residual should equal the path minus its own
        # per-window OLS line (exactly, where fitted windows align with true
        # segments; loosely near kinks).
        truth_path = np.asarray(demo_result.ground_truth["fbm_path"])
        t = demo_residual.times
        path_series = TimeSeries(times=t, values=truth_path)
        diffs = []
        for seg in demo_trend.segments:
            m = (t >= seg.start_time) & (t <= seg.end_time)
            own = ols_fit(path_series, seg.start_time, seg.end_time)
            expected = truth_path[m] - own.value_at(t[m])
            inner = slice(10, -10) if m.sum() > 40 else slice(None)
            diffs.append(np.abs(demo_residual.values[m][inner] - expected[inner]).max())
        assert np.median(diffs) < 0.5


def test_segment_validation():
    with pytest.raises(TrendError):
        Segment(start_time=5, end_time=5, slope=1.0, intercept=0.0, r_squared=0.5)
    with pytest.raises(TrendError):
        Segment(start_time=0, end_time=5, slope=1.0, intercept=0.0, r_squared=1.5)


def test_trend_contiguity_enforced():
    with pytest.raises(TrendError, match="contiguous"):
        PiecewiseLinearTrend(
            segments=[
                Segment(start_time=0, end_time=5, slope=1.0, intercept=0.0, r_squared=1.0),
                Segment(start_time=6, end_time=10, slope=-1.0, intercept=0.0, r_squared=1.0),
            ]
        )
