"""Normality testing of model residuals.

Two procedures run against simulated-residual collections: Shapiro-Wilk
with Royston's coefficient approximation and a fixed acceptance threshold
on W, and a robust Jarque-Bera variant whose spread estimate is the scaled
mean absolute deviation from the median and whose null distribution (and
scaling constants) come from seeded Monte Carlo rather than the chi-squared
asymptotics.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .fbm import FbmParams, sample_fgn
from .reports import TestReport
from .rng import stream
from .series import TimeSeries
from .trend import PiecewiseLinearTrend, evaluate_trend

__all__ = [
    "shapiro_wilk",
    "royston_coefficients",
    "median_deviation_spread",
    "robust_jarque_bera",
    "sw_simulation_protocol",
    "rjb_block_protocol",
    "SwProtocolSummary",
    "RjbProtocolTable",
]

_norm = NormalDist()

# Royston's small-sample corrections for the two outermost coefficients,
# polynomials in 1/sqrt(n) (constant term zero), highest degree first.
_C1 = (-2.706056, 4.434685, -2.07119, -0.147981, 0.221157, 0.0)
_C2 = (-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0)


def royston_coefficients(n: int) -> np.ndarray:
    """Order-statistic weights a_1..a_n for the Shapiro-Wilk statistic.

    Valid for 3 <= n <= 5000.  The vector is antisymmetric with a_n > 0.
    """
    if not 3 <= n <= 5000:
        raise ValueError("Shapiro-Wilk coefficients are valid for 3 <= n <= 5000")
    if n == 3:
        r = np.sqrt(0.5)
        return np.array([-r, 0.0, r])
    m = np.array([_norm.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)])
    ssq = float(m @ m)
    u = 1.0 / np.sqrt(n)
    a = m / np.sqrt(ssq)
    a_n = a[-1] + np.polyval(_C1, u)
    if n > 5:
        a_n1 = a[-2] + np.polyval(_C2, u)
        phi = (ssq - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (
            1.0 - 2.0 * a_n**2 - 2.0 * a_n1**2
        )
        a = m / np.sqrt(phi)
        a[-1], a[-2] = a_n, a_n1
        a[0], a[1] = -a_n, -a_n1
    else:
        phi = (ssq - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n**2)
        a = m / np.sqrt(phi)
        a[-1] = a_n
        a[0] = -a_n
    return a


_coeff_lock = threading.Lock()
_coeff_cache: dict[int, np.ndarray] = {}


def _coefficients(n: int) -> np.ndarray:
    with _coeff_lock:
        hit = _coeff_cache.get(n)
    if hit is not None:
        return hit
    a = royston_coefficients(n)
    with _coeff_lock:
        _coeff_cache[n] = a
    return a


def shapiro_wilk(z, threshold: float = 0.98) -> tuple[float, bool]:
    """(W, passed) where passed applies the fixed W >= threshold rule."""
    x = np.sort(np.asarray(z, dtype=float))
    n = len(x)
    a = _coefficients(n)
    denom = float(np.sum((x - x.mean()) ** 2))
    if denom == 0.0:
        raise ValueError("constant sample")
    w = float((a @ x) ** 2 / denom)
    w = min(w, 1.0)
    return w, w >= threshold


def median_deviation_spread(z) -> float:
    """sqrt(pi/2) times the mean absolute deviation from the median."""
    x = np.asarray(z, dtype=float)
    return float(np.sqrt(np.pi / 2.0) * np.mean(np.abs(x - np.median(x))))


def _robust_moments(x: np.ndarray) -> tuple[float, float]:
    """(mu3 / J^3, mu4 / J^4) with J the median-based spread."""
    j = median_deviation_spread(x)
    if j == 0.0:
        raise ValueError("median-based spread is zero")
    c = x - x.mean()
    return float(np.mean(c**3) / j**3), float(np.mean(c**4) / j**4)


_rjb_lock = threading.Lock()
_rjb_cache: dict[tuple, tuple[float, float, np.ndarray]] = {}


def _rjb_null(n: int, k: int, seed: int, constants: str) -> tuple[float, float, np.ndarray]:
    """(C1, C2, sorted null statistics) for sample size n, cached."""
    key = (n, k, seed, constants)
    with _rjb_lock:
        hit = _rjb_cache.get(key)
    if hit is not None:
        return hit
    rng = stream(seed, "rjb-null", n, k)
    skews = np.empty(k)
    kurts = np.empty(k)
    for i in range(k):
        zi = rng.standard_normal(n)
        skews[i], kurts[i] = _robust_moments(zi)
    if constants == "monte_carlo":
        c1 = float(n * np.mean(skews**2))
        c2 = float(n * np.mean((kurts - 3.0) ** 2))
    elif constants == "literature":
        c1, c2 = 6.0, 64.0
    else:
        raise ValueError(f"unknown constants mode {constants!r}")
    null = np.sort(n / c1 * skews**2 + n / c2 * (kurts - 3.0) ** 2)
    out = (c1, c2, null)
    with _rjb_lock:
        _rjb_cache[key] = out
    return out


def robust_jarque_bera(
    z,
    mc_iterations: int = 10_000,
    seed: int = 0,
    alpha: float = 0.02,
    constants: str = "monte_carlo",
) -> TestReport:
    """Median-spread Jarque-Bera with a Monte Carlo p-value.

    The statistic is (n/C1) * skew_M^2 + (n/C2) * (kurt_M - 3)^2 using
    robust (J_M-normalised) skewness and kurtosis; C1, C2 are calibrated
    per sample size under the null and cached, as is the null sample the
    p-value ranks against.
    """
    x = np.asarray(z, dtype=float)
    n = len(x)
    if n < 8:
        raise ValueError("need at least 8 observations")
    if mc_iterations < 1000:
        raise ValueError("need at least 1000 Monte Carlo iterations")
    skew, kurt = _robust_moments(x)
    c1, c2, null = _rjb_null(n, mc_iterations, seed, constants)
    stat = float(n / c1 * skew**2 + n / c2 * (kurt - 3.0) ** 2)
    p = float(np.mean(null > stat))
    return TestReport(
        test_name="robust_jarque_bera",
        statistic=stat,
        decision="accept" if p > alpha else "reject",
        alpha=alpha,
        p_value=p,
        metadata={
            "n": n,
            "c1": c1,
            "c2": c2,
            "mc_iterations": mc_iterations,
            "seed": seed,
            "constants": constants,
        },
    )


def _fbm_on_grid(params: FbmParams, length: int, spacing: float, rng: np.random.Generator) -> np.ndarray:
    """fBm path values on {0, spacing, ..., (length-1)*spacing}.

    Self-similarity turns the grid spacing into the scale factor
    spacing^H on a unit-grid path.
    """
    fgn = sample_fgn(params.hurst, length - 1, rng)
    inc = np.sqrt(2.0 * params.diffusion) * spacing**params.hurst * fgn
    return np.concatenate([[0.0], np.cumsum(inc)])


def _weekly_residual_base(x_weekly: TimeSeries, trend: PiecewiseLinearTrend) -> tuple[np.ndarray, float]:
    steps = np.diff(x_weekly.times)
    if len(steps) == 0 or np.any(steps != steps[0]):
        raise ValueError("x_weekly must be uniformly spaced")
    base = x_weekly.values - evaluate_trend(trend, x_weekly.times)
    return base, float(steps[0])


@dataclass(frozen=True)
class SwProtocolSummary:
    n_sims: int
    threshold: float
    fraction_passing: float
    w_values: np.ndarray
    seed: int
    histogram: dict = field(default_factory=dict)


def sw_simulation_protocol(
    x_weekly: TimeSeries,
    trend: PiecewiseLinearTrend,
    params: FbmParams,
    n_sims: int,
    seed: int,
    threshold: float = 0.98,
) -> SwProtocolSummary:
    """Shapiro-Wilk over replicate residuals x - trend - simulated path.

    Each replicate subtracts a fresh path with the estimated parameters on
    the weekly grid; the summary carries the W collection, the fraction
    meeting the threshold rule, and fixed-bin histogram data.
    """
    if n_sims < 1:
        raise ValueError("need n_sims >= 1")
    base, spacing = _weekly_residual_base(x_weekly, trend)
    m = len(base)
    ws = np.empty(n_sims)
    for i in range(n_sims):
        rng = stream(seed, "sw-protocol", i)
        path = _fbm_on_grid(params, m, spacing, rng)
        ws[i], _ = shapiro_wilk(base - path, threshold)
    edges = np.linspace(0.8, 1.0, 41)
    counts, _ = np.histogram(np.clip(ws, 0.8, 1.0), bins=edges)
    return SwProtocolSummary(
        n_sims=n_sims,
        threshold=threshold,
        fraction_passing=float(np.mean(ws >= threshold)),
        w_values=ws,
        seed=seed,
        histogram={"bin_edges": edges.tolist(), "counts": counts.tolist()},
    )


@dataclass(frozen=True)
class RjbProtocolTable:
    blocks: int
    sims_per_block: int
    alpha: float
    acceptance_percent: list[float]
    seed: int
    mc_iterations: int


def rjb_block_protocol(
    x_weekly: TimeSeries,
    trend: PiecewiseLinearTrend,
    params: FbmParams,
    n: int = 100,
    blocks: int = 10,
    alpha: float = 0.02,
    mc_iterations: int = 10_000,
    seed: int = 0,
) -> RjbProtocolTable:
    """Blocks of n replicate residual simulations, each RJB-tested.

    Reports the percentage of replicates per block whose Monte Carlo
    p-value exceeds alpha.  The RJB null table is shared across replicates
    (one calibration per sample size).
    """
    if blocks < 1 or n < 1:
        raise ValueError("need blocks >= 1 and n >= 1")
    base, spacing = _weekly_residual_base(x_weekly, trend)
    m = len(base)
    percents: list[float] = []
    for h in range(blocks):
        accepted = 0
        for i in range(n):
            rng = stream(seed, "rjb-protocol", h, i)
            path = _fbm_on_grid(params, m, spacing, rng)
            rep = robust_jarque_bera(
                base - path, mc_iterations=mc_iterations, seed=seed, alpha=alpha
            )
            accepted += rep.decision == "accept"
        percents.append(100.0 * accepted / n)
    return RjbProtocolTable(
        blocks=blocks,
        sims_per_block=n,
        alpha=alpha,
        acceptance_percent=percents,
        seed=seed,
        mc_iterations=mc_iterations,
    )
