"""Fractional Brownian motion under the covariance convention

    Cov[B(t), B(s)] = D * (t^{2H} + s^{2H} - |t - s|^{2H}),

so Var[B(t)] = 2*D*t^{2H} and unit-lag increments have variance 2*D.
With D = 1/2 and H = 1/2 this is the standard Wiener process.

Sampling uses circulant embedding of the increment (fGn) covariance, which
is exact: the simulated vector's covariance equals :func:`fbm_cov` on the
grid.  A dense-Cholesky fallback covers embeddings that fail to be
nonnegative definite (does not happen for fGn in practice, but the guard is
cheap).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .rng import stream
from .series import TimeSeries

__all__ = [
    "FbmParams",
    "FbmPath",
    "fbm_cov",
    "fbm_cov_matrix",
    "fgn_autocovariance",
    "sample_fgn",
    "simulate_fbm",
    "increments",
    "estimate_diffusion",
    "autocorr_tail_exponent",
]


@dataclass(frozen=True)
class FbmParams:
    """Hurst exponent H in (0,1) and diffusion constant D > 0."""

    hurst: float
    diffusion: float

    def __post_init__(self) -> None:
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0,1), got {self.hurst}")
        if not self.diffusion > 0.0:
            raise ValueError(f"diffusion must be positive, got {self.diffusion}")


@dataclass(frozen=True)
class FbmPath:
    """Simulated path on the unit-spaced grid 0..n-1 with value(0) = 0."""

    params: FbmParams
    times: np.ndarray
    values: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        if len(self.values) < 2:
            raise ValueError("a path needs at least 2 points")
        if self.values[0] != 0.0:
            raise ValueError("a path must start at 0")

    def __len__(self) -> int:
        return len(self.values)


def fbm_cov(p: FbmParams, t: float, s: float) -> float:
    """Covariance of the path at day offsets t, s >= 0."""
    if t < 0 or s < 0:
        raise ValueError("fbm_cov needs t, s >= 0")
    h2 = 2.0 * p.hurst
    return p.diffusion * (t**h2 + s**h2 - abs(t - s) ** h2)


def fbm_cov_matrix(p: FbmParams, times: np.ndarray) -> np.ndarray:
    """Covariance matrix of the path on an arbitrary nonnegative grid."""
    t = np.asarray(times, dtype=float)
    if np.any(t < 0):
        raise ValueError("fbm_cov_matrix needs nonnegative times")
    h2 = 2.0 * p.hurst
    tp = t**h2
    return p.diffusion * (tp[:, None] + tp[None, :] - np.abs(t[:, None] - t[None, :]) ** h2)


def fgn_autocovariance(lag, hurst: float) -> np.ndarray:
    """Autocovariance of *standard* fGn (unit variance at lag 0)."""
    k = np.abs(np.asarray(lag, dtype=float))
    h2 = 2.0 * hurst
    return 0.5 * ((k + 1.0) ** h2 - 2.0 * k**h2 + np.abs(k - 1.0) ** h2)


def sample_fgn(hurst: float, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw m consecutive standard-fGn values by circulant embedding.

    Falls back to Cholesky of the dense fBm covariance when the embedding
    has materially negative eigenvalues.
    """
    if m < 1:
        raise ValueError("need at least one increment")
    if m == 1:
        return rng.standard_normal(1)
    gamma = fgn_autocovariance(np.arange(m), hurst)
    first_row = np.concatenate([gamma, [float(fgn_autocovariance(m, hurst))], gamma[:0:-1]])
    lam = np.fft.fft(first_row).real
    big = 2 * m
    if lam.min() < -1e-8 * lam.max():
        return _fgn_cholesky_fallback(hurst, m, rng)
    lam = np.clip(lam, 0.0, None)
    z = rng.standard_normal(big) + 1j * rng.standard_normal(big)
    return np.fft.fft(np.sqrt(lam / big) * z).real[:m]


def _fgn_cholesky_fallback(hurst: float, m: int, rng: np.random.Generator) -> np.ndarray:
    if m > 4096:
        raise RuntimeError(
            "circulant embedding not nonnegative definite and the series is "
            "too long for the dense Cholesky fallback"
        )
    lags = np.arange(m)
    cov = fgn_autocovariance(np.abs(lags[:, None] - lags[None, :]), hurst)
    chol = np.linalg.cholesky(cov + 1e-12 * np.eye(m))
    return chol @ rng.standard_normal(m)


def simulate_fbm(p: FbmParams, n: int, seed: int) -> FbmPath:
    """Exact mean-zero Gaussian path of length n, deterministic in seed."""
    if n < 2:
        raise ValueError("need n >= 2")
    rng = stream(seed, "fbm-path")
    fgn = sample_fgn(p.hurst, n - 1, rng)
    values = np.concatenate([[0.0], np.cumsum(np.sqrt(2.0 * p.diffusion) * fgn)])
    return FbmPath(params=p, times=np.arange(n, dtype=float), values=values, seed=seed)


def increments(path: FbmPath) -> TimeSeries:
    """Unit-lag increment series (the fGn of the path), length n-1."""
    vals = np.diff(path.values)
    return TimeSeries(times=path.times[:-1], values=vals, epoch=None)


def estimate_diffusion(detrended: TimeSeries, convention: str = "half") -> float:
    """D-hat from the sample variance of unit increments.

    convention="half" divides the increment variance by 2, matching
    Var[B(t+1)-B(t)] = 2*D under this package's covariance.  "raw" keeps
    the plain variance for comparison against sources that use the other
    normalization.
    """
    if not detrended.is_daily:
        raise ValueError("estimate_diffusion needs a unit-spaced series")
    if len(detrended) < 3:
        raise ValueError("need at least 3 observations")
    if convention not in ("half", "raw"):
        raise ValueError(f"unknown convention {convention!r}")
    var = float(np.var(np.diff(detrended.values), ddof=1))
    d_hat = var / 2.0 if convention == "half" else var
    if d_hat == 0.0:
        warnings.warn("degenerate series: estimated diffusion is 0", RuntimeWarning)
    return d_hat


def autocorr_tail_exponent(p: FbmParams) -> float:
    """Power-law decay exponent of the increment autocorrelation, 2H - 2."""
    return 2.0 * p.hurst - 2.0
