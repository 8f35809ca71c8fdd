"""Thin-client command line: every subcommand talks to the HTTP service.

By default each invocation runs the service in-process over an ASGI
transport, so no daemon is needed; `--server URL` points the same commands
at a remote instance instead (start one with `fbmtrend serve`).  The CLI
only builds requests and writes returned artifacts under `--out`.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .configfile import parse_config_text

__all__ = ["main"]


def _request(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=3600.0) as client:
            return client.post(path, json=payload)

    # no server: run the ASGI app in-process (the transport is async-only)
    import asyncio

    from .service.app import app

    async def _call() -> httpx.Response:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://service.local", timeout=3600.0
        ) as client:
            return await client.post(path, json=payload)

    return asyncio.run(_call())


def _post(ctx, path: str, payload: dict) -> dict:
    resp = _request(ctx.obj.get("server"), path, payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        raise click.ClickException(f"{path} failed ({resp.status_code}): {detail}")
    return resp.json()


def _write(outdir: str, files: dict[str, str]) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, content in sorted(files.items()):
        (out / name).write_text(content, encoding="utf-8")
        click.echo(f"wrote {out / name}")


def _load_config_kv(config: str | None, seed: int | None) -> dict:
    kv: dict = {}
    if config:
        kv.update(parse_config_text(Path(config).read_text(encoding="utf-8")))
    if seed is not None:
        kv["seed"] = seed
    return kv


def _series_payload_from_csv(path: str) -> dict:
    from .series import load_csv

    s = load_csv(path)
    return {
        "times": [float(t) for t in s.times],
        "values": [float(v) for v in s.values],
        "epoch": s.epoch.isoformat() if s.epoch else None,
    }


@click.group()
@click.option("--server", default=None, help="Service URL; default runs in-process.")
@click.pass_context
def main(ctx, server):
    """Seasonal trend + fBm residual analysis toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8787, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("fbmtrend.service.app:app", host=host, port=port)


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None, help="Run-config file.")
@click.option("--seed", type=int, default=None, help="Override the synth seed.")
@click.option("--out", default="out", show_default=True, help="Output directory.")
@click.option("--demo/--custom", default=True, help="Bundled demo spec or synth_* config keys.")
@click.option("--n-days", type=int, default=2348, show_default=True)
@click.option("--missing-fraction", type=float, default=0.0, show_default=True)
@click.pass_context
def synth(ctx, config, seed, out, demo, n_days, missing_fraction):
    """Generate a synthetic series plus its ground-truth sidecar."""
    kv = _load_config_kv(config, None)
    payload = {
        "demo": demo and "synth_breakpoints" not in kv,
        "seed": seed if seed is not None else int(kv.get("synth_seed", 5)),
        "n_days": int(kv.get("synth_n_days", n_days)),
        "missing_fraction": float(kv.get("synth_missing_fraction", missing_fraction)),
    }
    if payload["demo"] is False:
        payload["trend"] = [
            [int(b), float(sl)]
            for b, sl in zip(
                kv["synth_breakpoints"].split(","), kv["synth_slopes"].split(",")
            )
        ]
        payload["fbm"] = {
            "hurst": float(kv["synth_hurst"]),
            "diffusion": float(kv["synth_diffusion"]),
        }
    data = _post(ctx, "/synth", payload)
    series = data["series"]
    import csv as _csv
    import datetime as _dt
    import io

    buf = io.StringIO()
    w = _csv.writer(buf, lineterminator="\n")
    epoch = _dt.date.fromisoformat(series["epoch"]) if series["epoch"] else None
    for t, v in zip(series["times"], series["values"]):
        day = epoch + _dt.timedelta(days=int(t)) if epoch else int(t)
        w.writerow([day.isoformat() if epoch else day, repr(float(v))])
    _write(out, {
        "synth_series.csv": buf.getvalue(),
        "synth_truth.json": json.dumps(data["ground_truth"], indent=2, sort_keys=True),
    })


@main.command("fit-trend")
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--out", default="out", show_default=True)
@click.option("--window", type=int, default=45, show_default=True)
@click.option("--min-separation", type=int, default=120, show_default=True)
@click.option("--radius", type=int, default=5, show_default=True)
@click.pass_context
def fit_trend_cmd(ctx, csv_path, config, out, window, min_separation, radius):
    """Fit the piecewise-linear seasonal trend to a CSV series."""
    kv = _load_config_kv(config, None)
    payload = {
        "series": _series_payload_from_csv(csv_path),
        "window": int(kv.get("extrema_window", window)),
        "min_separation": int(kv.get("extrema_min_separation", min_separation)),
        "radius": int(kv.get("refinement_radius", radius)),
    }
    data = _post(ctx, "/trend/fit", payload)
    _write(out, {"trend.json": json.dumps(data, indent=2, sort_keys=True)})


@main.command("estimate-hurst")
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--out", default="out", show_default=True)
@click.option("--segment-length", type=int, default=None)
@click.option("--f-min", type=float, default=0.015, show_default=True)
@click.option("--f-max", type=float, default=0.1, show_default=True)
@click.pass_context
def estimate_hurst_cmd(ctx, csv_path, out, segment_length, f_min, f_max):
    """Welch periodogram and spectral-slope Hurst estimate for a series."""
    payload = {
        "series": _series_payload_from_csv(csv_path),
        "segment_length": segment_length,
        "f_min": f_min,
        "f_max": f_max,
    }
    data = _post(ctx, "/hurst/estimate", payload)
    fit = data["fit"]
    click.echo(
        f"beta={fit['beta']:.4f} classification={fit['classification']} "
        f"hurst={fit['hurst_estimate']}"
    )
    pg = data["periodogram"]
    rows = "\n".join(f"{f},{p}" for f, p in zip(pg["frequencies"], pg["power"]))
    _write(out, {
        "spectral_fit.json": json.dumps(fit, indent=2, sort_keys=True),
        "periodogram.csv": "frequency,power\n" + rows + "\n",
    })


@main.command("test-bm")
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--out", default="out", show_default=True)
@click.pass_context
def test_bm_cmd(ctx, csv_path, alpha, out):
    """Maximal-excursion Brownian-motion test on a (residual) series."""
    data = _post(ctx, "/tests/bm", {"series": _series_payload_from_csv(csv_path), "alpha": alpha})
    click.echo(f"statistic={data['statistic']:.4f} region={data['region']} -> {data['decision']}")
    _write(out, {"bm_test.json": json.dumps(data, indent=2, sort_keys=True)})


@main.command("test-gauss")
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--sw-sims", type=int, default=1000, show_default=True)
@click.option("--rjb-blocks", type=int, default=10, show_default=True)
@click.option("--rjb-n", type=int, default=100, show_default=True)
@click.option("--alpha", type=float, default=0.02, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default="out", show_default=True)
@click.pass_context
def test_gauss_cmd(ctx, csv_path, sw_sims, rjb_blocks, rjb_n, alpha, seed, out):
    """Shapiro-Wilk and robust Jarque-Bera residual-simulation protocols."""
    payload = {
        "series": _series_payload_from_csv(csv_path),
        "sw_sims": sw_sims,
        "rjb_blocks": rjb_blocks,
        "rjb_sims_per_block": rjb_n,
        "alpha": alpha,
        "seed": seed,
    }
    data = _post(ctx, "/tests/gauss", payload)
    click.echo(f"SW fraction passing: {data['sw']['fraction_passing']:.3f}")
    click.echo(f"RJB per-block acceptance %: {data['rjb']['acceptance_percent']}")
    _write(out, {"gauss_tests.json": json.dumps(data, indent=2, sort_keys=True)})


@main.command("test-dma")
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--m", "window_m", type=int, default=None, help="Single window instead of the sweep.")
@click.option("--subsets", type=int, default=10, show_default=True)
@click.option("--m-step", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--hurst", type=float, default=None, help="Null H (estimated when omitted).")
@click.option("--diffusion", type=float, default=None, help="Null D (estimated when omitted).")
@click.option("--out", default="out", show_default=True)
@click.pass_context
def test_dma_cmd(ctx, csv_path, window_m, subsets, m_step, seed, hurst, diffusion, out):
    """Detrending-moving-average goodness-of-fit test for fBm."""
    payload = {
        "series": _series_payload_from_csv(csv_path),
        "window_m": window_m,
        "subsets": subsets,
        "m_step": m_step,
        "seed": seed,
    }
    if hurst is not None and diffusion is not None:
        payload["params"] = {"hurst": hurst, "diffusion": diffusion}
    data = _post(ctx, "/tests/dma", payload)
    files = {"dma.json": json.dumps(data, indent=2, sort_keys=True)}
    if "protocol" in data:
        counts = data["protocol"]["counts"]
        rows = ["set,reject,warning,accept,n_obs"]
        rows += [
            f"{i + 1},{c['reject']},{c['warning']},{c['accept']},{c['n_obs']}"
            for i, c in enumerate(counts)
        ]
        files["dma_protocol.csv"] = "\n".join(rows) + "\n"
        rows = ["subset,m,p"] + [
            f"{s + 1},{m},{p}" for s, m, p in data["protocol"]["p_values"]
        ]
        files["dma_pvalues.csv"] = "\n".join(rows) + "\n"
        click.echo(
            f"overall accept fraction: {data['protocol']['overall_accept_fraction']:.3f}"
        )
    else:
        click.echo(f"p={data['report']['p_value']} -> {data['report']['decision']}")
    _write(out, files)


@main.command()
@click.option("--config", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", default="out", show_default=True)
@click.pass_context
def pipeline(ctx, config, seed, out):
    """Run the whole workflow and write the report plus all artifacts."""
    kv = _load_config_kv(config, seed)
    kv.pop("output_dir", None)
    data = _post(ctx, "/pipeline/run", {"config": kv})
    _write(out, data["artifacts"])
    errors = data["report"].get("errors", [])
    for err in errors:
        click.echo(f"stage {err['stage']} failed: {err['error']}", err=True)
    if errors:
        sys.exit(1)


@main.command()
@click.argument("report_json", type=click.Path(exists=True))
@click.option("--out", default="out", show_default=True)
@click.pass_context
def plot(ctx, report_json, out):
    """Render the SVG plots for an existing run report."""
    report = json.loads(Path(report_json).read_text(encoding="utf-8"))
    data = _post(ctx, "/plots/render", {"report": report})
    for notice in data["notices"]:
        click.echo(notice)
    _write(out, data["svgs"])


if __name__ == "__main__":
    main()
