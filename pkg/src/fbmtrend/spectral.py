"""Welch power spectral density and log-log spectral regression.

The spectral exponent beta (power-law slope of the density) classifies the
series: beta in (-1, 1) marks stationary noise with Hurst H = (beta + 1)/2,
beta in (1, 3) marks a cumulative (motion-type) path with H = (beta - 1)/2.
Interval boundaries are open; a slope landing exactly on one is reported as
out_of_range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import TimeSeries

__all__ = [
    "Periodogram",
    "SpectralFit",
    "SpectralConfig",
    "SpectralError",
    "welch_periodogram",
    "fit_loglog",
    "estimate_hurst",
    "default_segment_length",
    "classify_beta",
]

_WINDOWS = {
    "hamming": np.hamming,
    "hann": np.hanning,
    "blackman": np.blackman,
    "rectangular": np.ones,
}


class SpectralError(ValueError):
    pass


@dataclass(frozen=True)
class Periodogram:
    """One-sided density estimate; frequencies in cycles/day, f=0 excluded."""

    frequencies: np.ndarray
    power: np.ndarray
    segment_length: int
    overlap_fraction: float
    window_name: str

    def __post_init__(self) -> None:
        if len(self.frequencies) != len(self.power):
            raise SpectralError("frequency/power length mismatch")
        if np.any(self.frequencies <= 0):
            raise SpectralError("frequencies must be positive (f=0 excluded)")
        if np.any(np.diff(self.frequencies) <= 0):
            raise SpectralError("frequencies must be strictly increasing")
        if np.any(self.power < 0):
            raise SpectralError("power must be nonnegative")


@dataclass(frozen=True)
class SpectralFit:
    """Log-log OLS of the density: log S(f) = log S(f0) - beta log f."""

    beta: float
    log_intercept: float
    r_squared: float
    classification: str  # "fGn" | "fBm" | "out_of_range"
    hurst_estimate: float | None
    f_min: float
    f_max: float
    n_bins: int
    zero_bins_excluded: int = 0


@dataclass(frozen=True)
class SpectralConfig:
    """Welch settings plus the regression band.

    The default band starts at 0.015 cycles/day: below that, piecewise
    detrending of series at the seasonal scale suppresses power, and above
    0.1 the sampled-path spectrum flattens toward Nyquist; both would bias
    the slope.
    """

    segment_length: int | None = None
    overlap: float = 0.5
    window: str = "hamming"
    f_min: float | None = 0.015
    f_max: float | None = 0.1


def default_segment_length(n: int) -> int:
    """Largest power of two <= n/4, raised to 256 when the series allows."""
    if n < 16:
        raise SpectralError("series too short for spectral estimation")
    seg = 1 << max(int(np.floor(np.log2(n / 4))), 3)
    if seg < 256 <= n:
        seg = 256
    return min(seg, 1 << int(np.floor(np.log2(n))))


def _window(name: str, length: int) -> np.ndarray:
    try:
        fn = _WINDOWS[name]
    except KeyError:
        raise SpectralError(f"unknown window {name!r}") from None
    if name == "rectangular":
        return np.ones(length)
    return fn(length + 1)[:-1]  # periodic form, standard for PSD estimation


def welch_periodogram(
    s: TimeSeries,
    segment_length: int | None = None,
    overlap: float = 0.5,
    window: str = "hamming",
) -> Periodogram:
    """Averaged modified periodogram over overlapping segments.

    Each segment is mean-removed, windowed and transformed; squared
    magnitudes are averaged in fixed segment order and scaled by the window
    power so a unit-variance white-noise input has flat expected density
    (one-sided, sampling rate 1/day).  The f=0 bin is dropped.
    """
    if not s.is_daily:
        raise SpectralError("welch_periodogram needs a unit-spaced series")
    n = len(s)
    if segment_length is None:
        segment_length = default_segment_length(n)
    if segment_length < 8:
        raise SpectralError("segment_length must be at least 8")
    if segment_length > n:
        raise SpectralError("segment_length exceeds the series length")
    if not 0.0 <= overlap < 1.0:
        raise SpectralError("overlap must lie in [0, 1)")

    w = _window(window, segment_length)
    step = segment_length - int(np.floor(overlap * segment_length))
    step = max(step, 1)
    starts = range(0, n - segment_length + 1, step)

    acc = np.zeros(segment_length // 2 + 1)
    count = 0
    for st in starts:
        seg = s.values[st : st + segment_length]
        seg = seg - seg.mean()
        spec = np.fft.rfft(w * seg)
        acc += np.abs(spec) ** 2
        count += 1
    if count == 0:
        raise SpectralError("fewer than one full segment")

    scale = 1.0 / (count * float(w @ w))  # fs = 1/day
    pxx = acc * scale
    pxx[1:] *= 2.0  # one-sided doubling, DC excluded
    if segment_length % 2 == 0:
        pxx[-1] /= 2.0  # Nyquist bin is not mirrored
    freqs = np.fft.rfftfreq(segment_length, d=1.0)
    return Periodogram(
        frequencies=freqs[1:],
        power=pxx[1:],
        segment_length=int(segment_length),
        overlap_fraction=float(overlap),
        window_name=window,
    )


def classify_beta(beta: float) -> tuple[str, float | None]:
    """(classification, hurst) from the spectral exponent.

    Both intervals are open; a slope exactly on a boundary is
    out_of_range.
    """
    if -1.0 < beta < 1.0:
        return "fGn", (beta + 1.0) / 2.0
    if 1.0 < beta < 3.0:
        return "fBm", (beta - 1.0) / 2.0
    return "out_of_range", None


def fit_loglog(
    p: Periodogram, f_min: float | None = None, f_max: float | None = None
) -> SpectralFit:
    """OLS of log power on log frequency over [f_min, f_max]."""
    keep = np.ones(len(p.frequencies), dtype=bool)
    if f_min is not None:
        keep &= p.frequencies >= f_min
    if f_max is not None:
        keep &= p.frequencies <= f_max
    if not keep.any():
        raise SpectralError("empty frequency range")
    zero = keep & (p.power == 0.0)
    n_zero = int(zero.sum())
    keep &= p.power > 0.0
    if keep.sum() < 8:
        raise SpectralError("need at least 8 positive-power bins in range")

    f_kept = p.frequencies[keep]
    lf = np.log(f_kept)
    lp = np.log(p.power[keep])
    lf_m, lp_m = lf.mean(), lp.mean()
    sxx = float(np.sum((lf - lf_m) ** 2))
    slope = float(np.sum((lf - lf_m) * (lp - lp_m)) / sxx)
    intercept = float(lp_m - slope * lf_m)
    resid = lp - (slope * lf + intercept)
    ss_tot = float(np.sum((lp - lp_m) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(resid @ resid) / ss_tot
    beta = -slope
    classification, hurst = classify_beta(beta)
    return SpectralFit(
        beta=beta,
        log_intercept=intercept,
        r_squared=r2,
        classification=classification,
        hurst_estimate=hurst,
        f_min=float(f_kept[0]),
        f_max=float(f_kept[-1]),
        n_bins=int(keep.sum()),
        zero_bins_excluded=n_zero,
    )


def estimate_hurst(s: TimeSeries, config: SpectralConfig | None = None) -> SpectralFit:
    """Welch periodogram followed by the log-log regression."""
    cfg = config or SpectralConfig()
    pgram = welch_periodogram(
        s,
        segment_length=cfg.segment_length,
        overlap=cfg.overlap,
        window=cfg.window,
    )
    return fit_loglog(pgram, f_min=cfg.f_min, f_max=cfg.f_max)
