"""Shared fixtures: the bundled demo dataset and its fitted pieces."""

from __future__ import annotations

import numpy as np
import pytest

from fbmtrend.series import interpolate_daily
from fbmtrend.synth import seasonal_demo_spec, synth_generate
from fbmtrend.trend import detrend, find_extrema, fit_trend

DEMO_EXTREMA_KW = dict(min_separation=250, window=45)


@pytest.fixture(scope="session")
def demo_result():
    return synth_generate(seasonal_demo_spec())


@pytest.fixture(scope="session")
def demo_daily(demo_result):
    daily, _ = interpolate_daily(demo_result.series)
    return daily


@pytest.fixture(scope="session")
def demo_extrema(demo_daily):
    return find_extrema(demo_daily, **DEMO_EXTREMA_KW)


@pytest.fixture(scope="session")
def demo_trend(demo_daily, demo_extrema):
    return fit_trend(demo_daily, demo_extrema, radius=5)


@pytest.fixture(scope="session")
def demo_residual(demo_daily, demo_trend):
    return detrend(demo_daily, demo_trend)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240810)
