"""Goodness-of-fit test for fBm built on the detrending moving average.

S^2(m) is the mean squared deviation of the series from its m-point
backward moving average.  Under the null hypothesis the statistic is a
quadratic form in a Gaussian vector, so its law is a weighted sum of
independent chi-squared(1) variables; the weights are eigenvalues of the
quadratic form's covariance and the p-value is an empirical two-sided rank
among simulated weighted sums.

Two eigenvalue conventions are kept side by side: "detrended" (default)
uses the covariance of the deviation vector Y_j = B(t_j) - MA_m(t_j), which
is the matrix the quadratic form actually contracts against and makes the
null exact; "paper_literal" uses the raw path covariance E[B(t_j) B(t_k)]
truncated to the same size, kept for comparison with sources that print
that matrix.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .fbm import FbmParams
from .reports import TestReport
from .rng import stream
from .series import TimeSeries

__all__ = [
    "DmaConfig",
    "DmaSubsetSummary",
    "dma_statistic",
    "dma_eigenvalues",
    "dma_null_distribution",
    "dma_test",
    "dma_subset_protocol",
    "empirical_two_sided_p",
]

_NEG_EIG_TOL = 1e-8


@dataclass(frozen=True)
class DmaConfig:
    """Window size m, null sample size L, and eigenvalue convention."""

    window_m: int
    chi_square_samples: int = 1000
    covariance_mode: str = "detrended"

    def __post_init__(self) -> None:
        if self.window_m < 2:
            raise ValueError("window_m must exceed 1")
        if self.chi_square_samples < 100:
            raise ValueError("need at least 100 chi-square samples")
        if self.covariance_mode not in ("detrended", "paper_literal"):
            raise ValueError(f"unknown covariance mode {self.covariance_mode!r}")


def dma_statistic(b, m: int) -> float:
    """Mean squared deviation from the m-point backward moving average.

    For values x_1..x_N the deviations run over j = m..N (N - m + 1 terms)
    and are normalised by N - m.
    """
    x = np.asarray(b.values if isinstance(b, TimeSeries) else b, dtype=float)
    n = len(x)
    if not 1 < m < n:
        raise ValueError(f"need 1 < m < {n}, got m={m}")
    if isinstance(b, TimeSeries) and not b.is_daily:
        raise ValueError("dma_statistic needs a unit-spaced series")
    x = x - x.mean()  # deviations cancel constants; centring conditions the cumsum
    csum = np.cumsum(np.concatenate([[0.0], x]))
    ma = (csum[m:] - csum[:-m]) / m  # ma[j] = mean(x[j : j + m])
    dev = x[m - 1 :] - ma
    return float(dev @ dev / (n - m))


_eig_lock = threading.Lock()
_eig_cache: dict[tuple, np.ndarray] = {}


def dma_eigenvalues(params: FbmParams, n: int, m: int, mode: str = "detrended") -> np.ndarray:
    """Eigenvalue weights of the null quadratic form, descending order.

    The diffusion constant scales all eigenvalues linearly, so the cache is
    keyed on (H, n, m, mode) with D factored out.
    """
    if not 1 < m < n:
        raise ValueError(f"need 1 < m < {n}, got m={m}")
    if mode not in ("detrended", "paper_literal"):
        raise ValueError(f"unknown covariance mode {mode!r}")
    key = (round(params.hurst, 12), n, m, mode)
    with _eig_lock:
        lam1 = _eig_cache.get(key)
    if lam1 is None:
        t = np.arange(1, n + 1, dtype=float)
        h2 = 2.0 * params.hurst
        tp = t**h2
        cov = tp[:, None] + tp[None, :] - np.abs(t[:, None] - t[None, :]) ** h2  # D = 1
        k = n - m + 1
        if mode == "paper_literal":
            quad = cov[:k, :k]
        else:
            rows = np.arange(k)
            a = np.zeros((k, n))
            a[rows, rows + m - 1] += 1.0
            for j in range(m):
                a[rows, rows + j] -= 1.0 / m
            quad = a @ cov @ a.T
        lam1 = np.linalg.eigvalsh(quad)[::-1].copy()
        trace = float(lam1.sum())
        if lam1[-1] < -_NEG_EIG_TOL * trace:
            raise RuntimeError(
                f"covariance matrix has a materially negative eigenvalue "
                f"({lam1[-1]:.3e} vs trace {trace:.3e})"
            )
        lam1 = np.clip(lam1, 0.0, None)
        with _eig_lock:
            _eig_cache[key] = lam1
    return params.diffusion * lam1


def dma_null_distribution(
    params: FbmParams,
    n: int,
    m: int,
    L: int = 1000,
    mode: str = "detrended",
    seed: int = 0,
) -> np.ndarray:
    """Sorted sample of L weighted chi-squared sums sigma^2_l(m)."""
    if L < 100:
        raise ValueError("need L >= 100")
    lam = dma_eigenvalues(params, n, m, mode)
    rng = stream(seed, "dma-null", n, m)
    u = rng.chisquare(1.0, size=(L, len(lam)))
    sample = u @ lam / (n - m)
    sample.sort()
    return sample


def empirical_two_sided_p(null, observed: float) -> float:
    """Two-sided rank p-value: (2/L) * min(#below, #above)."""
    null = np.asarray(null, dtype=float)
    L = len(null)
    below = int(np.sum(null < observed))
    above = int(np.sum(null > observed))
    return 2.0 / L * min(below, above)


def dma_test(
    b: TimeSeries,
    params: FbmParams,
    cfg: DmaConfig,
    alpha: float = 0.02,
    seed: int = 0,
    warning_alpha: float = 0.05,
) -> TestReport:
    """DMA test with the three-band decision rule.

    p <= alpha rejects, alpha < p <= warning_alpha is a warning, larger p
    accepts.
    """
    n = len(b)
    if not 1 < cfg.window_m < n:
        raise ValueError("window not valid for this series length")
    s2 = dma_statistic(b, cfg.window_m)
    null = dma_null_distribution(
        params, n, cfg.window_m, cfg.chi_square_samples, cfg.covariance_mode, seed
    )
    p = empirical_two_sided_p(null, s2)
    if p <= alpha:
        decision = "reject"
    elif p <= warning_alpha:
        decision = "warning"
    else:
        decision = "accept"
    return TestReport(
        test_name="dma",
        statistic=s2,
        decision=decision,
        alpha=alpha,
        p_value=p,
        metadata={
            "m": cfg.window_m,
            "mode": cfg.covariance_mode,
            "L": cfg.chi_square_samples,
            "warning_alpha": warning_alpha,
            "seed": seed,
        },
    )


@dataclass(frozen=True)
class DmaSubsetSummary:
    """Per-subset decision counts plus every (subset, m, p) triple."""

    subsets: int
    alpha: float
    warning_alpha: float
    counts: list[dict]  # per subset: {"reject": r, "warning": w, "accept": a, "n_obs": ...}
    p_values: list[tuple[int, int, float]] = field(default_factory=list)

    @property
    def overall_accept_fraction(self) -> float:
        acc = sum(c["accept"] for c in self.counts)
        tot = sum(c["reject"] + c["warning"] + c["accept"] for c in self.counts)
        return acc / tot if tot else float("nan")


def dma_subset_protocol(
    b: TimeSeries,
    params: FbmParams,
    subsets: int = 10,
    cfg_base: DmaConfig | None = None,
    seed: int = 0,
    m_step: int = 1,
) -> DmaSubsetSummary:
    """Run the test over contiguous blocks for every admissible window.

    The series splits into `subsets` equal blocks (the last absorbs the
    remainder); each block is tested for every m in [2, block_length - 2]
    (optionally strided).  Eigenvalue decompositions are shared across
    blocks of equal length through the module cache.
    """
    n = len(b)
    if subsets < 1 or n < subsets * 20:
        raise ValueError("series too short for the requested subset count")
    if m_step < 1:
        raise ValueError("m_step must be >= 1")
    base = cfg_base or DmaConfig(window_m=2)
    block = int(np.ceil(n / subsets))
    counts: list[dict] = []
    p_values: list[tuple[int, int, float]] = []
    for si in range(subsets):
        lo = si * block
        hi = min(lo + block, n) if si < subsets - 1 else n
        blk = TimeSeries(
            times=np.arange(hi - lo, dtype=float),
            values=b.values[lo:hi],
            epoch=None,
        )
        tally = {"reject": 0, "warning": 0, "accept": 0, "n_obs": hi - lo}
        for m in range(2, len(blk) - 1, m_step):
            cfg = DmaConfig(
                window_m=m,
                chi_square_samples=base.chi_square_samples,
                covariance_mode=base.covariance_mode,
            )
            rep = dma_test(blk, params, cfg, seed=_derived_seed(seed, si, m))
            tally[rep.decision] += 1
            p_values.append((si, m, rep.p_value))
        counts.append(tally)
    return DmaSubsetSummary(
        subsets=subsets,
        alpha=0.02,
        warning_alpha=0.05,
        counts=counts,
        p_values=p_values,
    )


def _derived_seed(seed: int, subset: int, m: int) -> int:
    """Distinct deterministic sub-seed per (subset, window)."""
    return (seed * 1_000_003 + subset * 10_007 + m) % (2**63)
