"""Seasonal piecewise-linear trend fitting and fBm residual testing.

Library layout:

- :mod:`fbmtrend.series` - series ingestion, daily interpolation, weekly
  subsampling.
- :mod:`fbmtrend.trend` - extrema detection and breakpoint-refined
  piecewise-linear trend fitting.
- :mod:`fbmtrend.fbm` - fractional Brownian motion covariance, exact
  simulation, diffusion estimation.
- :mod:`fbmtrend.spectral` - Welch periodogram and spectral-slope Hurst
  estimation.
- :mod:`fbmtrend.brownian`, :mod:`fbmtrend.gaussian`, :mod:`fbmtrend.dma` -
  the hypothesis-test battery.
- :mod:`fbmtrend.pipeline` - end-to-end orchestration; served over HTTP by
  :mod:`fbmtrend.service` with :mod:`fbmtrend.cli` as a thin client.
"""

__version__ = "0.1.0"

from .fbm import FbmParams, FbmPath  # noqa: F401
from .series import GapReport, TimeSeries  # noqa: F401
from .trend import ExtremaSet, PiecewiseLinearTrend, Segment  # noqa: F401
