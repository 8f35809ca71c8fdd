"""Static SVG emission for run reports.

Plots are generated as plain SVG text with fixed float formatting, so two
runs from the same report are byte-identical.  Each plot reads one stage of
the run report; missing stages are skipped with a notice instead of
failing the whole emission.
"""

from __future__ import annotations

import math
from pathlib import Path
from statistics import NormalDist

__all__ = ["emit_plots", "PLOT_BUILDERS"]

_W, _H = 720, 420
_ML, _MR, _MT, _MB = 64, 16, 28, 44


def _fmt(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.6g}"


class _Canvas:
    """Tiny deterministic SVG builder with one data-coordinate frame."""

    def __init__(self, x_range, y_range, title, x_label="", y_label="", log_x=False, log_y=False):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        self.log_x, self.log_y = log_x, log_y
        if log_x:
            self.x0, self.x1 = math.log10(self.x0), math.log10(self.x1)
        if log_y:
            self.y0, self.y1 = math.log10(self.y0), math.log10(self.y1)
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0
        self.parts: list[str] = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="11">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
            f'<text x="{_W // 2}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        ]
        if x_label:
            self.parts.append(
                f'<text x="{_W // 2}" y="{_H - 8}" text-anchor="middle">{x_label}</text>'
            )
        if y_label:
            self.parts.append(
                f'<text x="14" y="{_H // 2}" text-anchor="middle" '
                f'transform="rotate(-90 14 {_H // 2})">{y_label}</text>'
            )
        self._frame()

    def px(self, x: float) -> float:
        if self.log_x:
            x = math.log10(x)
        return _ML + (x - self.x0) / (self.x1 - self.x0) * (_W - _ML - _MR)

    def py(self, y: float) -> float:
        if self.log_y:
            y = math.log10(y)
        return _H - _MB - (y - self.y0) / (self.y1 - self.y0) * (_H - _MT - _MB)

    def _frame(self) -> None:
        self.parts.append(
            f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
            f'fill="none" stroke="black" stroke-width="1"/>'
        )
        for i in range(5):
            fx = self.x0 + (self.x1 - self.x0) * i / 4
            fy = self.y0 + (self.y1 - self.y0) * i / 4
            sx = _ML + (_W - _ML - _MR) * i / 4
            sy = _H - _MB - (_H - _MT - _MB) * i / 4
            lx = 10**fx if self.log_x else fx
            ly = 10**fy if self.log_y else fy
            self.parts.append(
                f'<text x="{_fmt(sx)}" y="{_H - _MB + 14}" text-anchor="middle">{_fmt(lx)}</text>'
            )
            self.parts.append(
                f'<text x="{_ML - 6}" y="{_fmt(sy + 4)}" text-anchor="end">{_fmt(ly)}</text>'
            )

    def polyline(self, xs, ys, color="steelblue", width=1.2) -> None:
        pts = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys))
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>'
        )

    def scatter(self, xs, ys, color="black", r=1.4) -> None:
        for x, y in zip(xs, ys):
            self.parts.append(
                f'<circle cx="{_fmt(self.px(x))}" cy="{_fmt(self.py(y))}" r="{r}" fill="{color}"/>'
            )

    def vbar(self, x, width, y, color="lightsteelblue") -> None:
        x_left = self.px(x)
        x_right = self.px(x + width)
        y_top = self.py(y)
        y_base = self.py(max(self.y0, 0.0) if not self.log_y else 10**self.y0)
        self.parts.append(
            f'<rect x="{_fmt(x_left)}" y="{_fmt(y_top)}" width="{_fmt(x_right - x_left)}" '
            f'height="{_fmt(max(y_base - y_top, 0.0))}" fill="{color}" stroke="black" stroke-width="0.4"/>'
        )

    def hline(self, y, color="gray", dash="4 3") -> None:
        self.parts.append(
            f'<line x1="{_ML}" y1="{_fmt(self.py(y))}" x2="{_W - _MR}" y2="{_fmt(self.py(y))}" '
            f'stroke="{color}" stroke-dasharray="{dash}"/>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _series_stage(report: dict, name: str):
    return report.get("stages", {}).get(name)


def _plot_scatter_trend(report: dict) -> str | None:
    series = _series_stage(report, "series")
    trend = _series_stage(report, "trend")
    if not series or not trend:
        return None
    t, v = series["times"], series["values"]
    cv = _Canvas((min(t), max(t)), (min(v), max(v)), "series and fitted trend",
                 "day", "value")
    cv.scatter(t, v, color="#555555", r=1.0)
    for seg in trend["segments"]:
        xs = [seg["start_time"], seg["end_time"]]
        ys = [seg["slope"] * x + seg["intercept"] for x in xs]
        cv.polyline(xs, ys, color="crimson", width=2.0)
    return cv.render()


def _plot_detrended(report: dict) -> str | None:
    det = _series_stage(report, "detrended")
    if not det:
        return None
    t, v = det["times"], det["values"]
    cv = _Canvas((min(t), max(t)), (min(v), max(v)), "detrended series", "day", "residual")
    cv.polyline(t, v, color="steelblue", width=0.8)
    cv.hline(0.0)
    return cv.render()


def _plot_residual_hist_qq(report: dict) -> str | None:
    det = _series_stage(report, "detrended")
    if not det:
        return None
    vals = sorted(det["values"])
    n = len(vals)
    lo, hi = vals[0], vals[-1]
    nbins = 30
    width = (hi - lo) / nbins or 1.0
    counts = [0] * nbins
    for v in vals:
        idx = min(int((v - lo) / width), nbins - 1)
        counts[idx] += 1
    cv = _Canvas((lo, hi), (0, max(counts)), "residual histogram with normal quantile overlay",
                 "residual", "count")
    for i, c in enumerate(counts):
        cv.vbar(lo + i * width, width, c)
    # theoretical-vs-empirical quantile trace, rescaled into the same frame
    nd = NormalDist()
    qs = [nd.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)]
    q_lo, q_hi = qs[0], qs[-1]
    span = (q_hi - q_lo) or 1.0
    xs = [lo + (q - q_lo) / span * (hi - lo) for q in qs]
    ys = [max(counts) * (i / (n - 1)) for i in range(n)]
    cv.polyline(xs, ys, color="darkorange", width=1.0)
    cv.scatter(
        [lo + (q - q_lo) / span * (hi - lo) for q in qs[:: max(1, n // 160)]],
        [max(counts) * (sorted_rank / (n - 1)) for sorted_rank in range(0, n, max(1, n // 160))],
        color="saddlebrown",
    )
    return cv.render()


def _plot_periodogram(report: dict, loglog: bool) -> str | None:
    spec = _series_stage(report, "spectral")
    if not spec:
        return None
    f = spec["frequencies"]
    p = spec["power"]
    if loglog:
        pos = [(fi, pi) for fi, pi in zip(f, p) if pi > 0]
        if not pos:
            return None
        f = [x for x, _ in pos]
        p = [y for _, y in pos]
        cv = _Canvas((min(f), max(f)), (min(p), max(p)),
                     "periodogram (log-log) with fitted slope",
                     "frequency [1/day]", "power density", log_x=True, log_y=True)
        cv.scatter(f, p, color="#333333", r=1.6)
        fit = spec.get("fit")
        if fit:
            fa, fb = fit["f_min"], fit["f_max"]
            ya = math.exp(fit["log_intercept"] - fit["beta"] * math.log(fa))
            yb = math.exp(fit["log_intercept"] - fit["beta"] * math.log(fb))
            cv.polyline([fa, fb], [ya, yb], color="crimson", width=2.0)
        return cv.render()
    cv = _Canvas((min(f), max(f)), (0, max(p)), "periodogram", "frequency [1/day]", "power density")
    cv.polyline(f, p, color="steelblue", width=1.0)
    return cv.render()


def _plot_w_histogram(report: dict) -> str | None:
    sw = _series_stage(report, "sw_protocol")
    if not sw:
        return None
    hist = sw["histogram"]
    edges = hist["bin_edges"]
    counts = hist["counts"]
    total = sum(counts) or 1
    cv = _Canvas((edges[0], edges[-1]), (0, max(counts) or 1),
                 "Shapiro-Wilk W over residual simulations (with cumulative share)",
                 "W", "count")
    for e0, e1, c in zip(edges, edges[1:], counts):
        cv.vbar(e0, e1 - e0, c)
    acc = 0
    xs, ys = [], []
    for e0, e1, c in zip(edges, edges[1:], counts):
        acc += c
        xs.append(e1)
        ys.append(acc / total * (max(counts) or 1))
    cv.polyline(xs, ys, color="darkorange", width=1.6)
    thr = sw.get("threshold")
    if thr is not None and edges[0] <= thr <= edges[-1]:
        cv.parts.append(
            f'<line x1="{_fmt(cv.px(thr))}" y1="{_MT}" x2="{_fmt(cv.px(thr))}" '
            f'y2="{_H - _MB}" stroke="crimson" stroke-dasharray="5 3"/>'
        )
    return cv.render()


def _plot_dma_pvalues(report: dict) -> str | None:
    dma = _series_stage(report, "dma_protocol")
    if not dma:
        return None
    pvals = dma["p_values"]
    if not pvals:
        return None
    subsets = sorted({s for s, _, _ in pvals})
    cv = _Canvas((0.5, len(subsets) + 0.5), (0.0, 1.0),
                 "DMA p-values per subset (quartile boxes)", "subset", "p")
    for s in subsets:
        ps = sorted(p for si, _, p in pvals if si == s)
        n = len(ps)
        q1 = ps[n // 4]
        q2 = ps[n // 2]
        q3 = ps[(3 * n) // 4]
        x = s + 1
        xl, xr = x - 0.3, x + 0.3
        cv.parts.append(
            f'<rect x="{_fmt(cv.px(xl))}" y="{_fmt(cv.py(q3))}" '
            f'width="{_fmt(cv.px(xr) - cv.px(xl))}" height="{_fmt(cv.py(q1) - cv.py(q3))}" '
            f'fill="lightsteelblue" stroke="black" stroke-width="0.8"/>'
        )
        for q, color in ((q2, "black"), (ps[0], "gray"), (ps[-1], "gray")):
            cv.parts.append(
                f'<line x1="{_fmt(cv.px(xl))}" y1="{_fmt(cv.py(q))}" '
                f'x2="{_fmt(cv.px(xr))}" y2="{_fmt(cv.py(q))}" stroke="{color}"/>'
            )
        step = max(1, len(ps) // 60)
        cv.scatter([x] * len(ps[::step]), ps[::step], color="#00000055", r=1.2)
    cv.hline(0.02, color="crimson")
    cv.hline(0.05, color="darkorange")
    return cv.render()


PLOT_BUILDERS = {
    "scatter_trend.svg": _plot_scatter_trend,
    "detrended.svg": _plot_detrended,
    "residual_hist_qq.svg": _plot_residual_hist_qq,
    "periodogram.svg": lambda r: _plot_periodogram(r, loglog=False),
    "periodogram_loglog.svg": lambda r: _plot_periodogram(r, loglog=True),
    "sw_w_histogram.svg": _plot_w_histogram,
    "dma_pvalues.svg": _plot_dma_pvalues,
}


def emit_plots(report: dict, outdir) -> tuple[list[Path], list[str]]:
    """Write every plot whose stage data is present.

    Returns (paths written, notices for skipped plots).
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    notices: list[str] = []
    for name, builder in PLOT_BUILDERS.items():
        svg = builder(report)
        if svg is None:
            notices.append(f"{name}: stage data missing, plot skipped")
            continue
        path = outdir / name
        path.write_text(svg, encoding="utf-8")
        written.append(path)
    return written, notices
