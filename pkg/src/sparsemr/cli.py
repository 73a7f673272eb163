"""Command-line surface: estimate -> solve -> backtest -> sweep, plus selftest.

Configuration is a flat YAML file of typed keys; command-line flags override
file values, which override shipped defaults. Exit codes: 0 success,
2 validation error, 3 numerical nonconvergence, 4 infeasible.
"""

import concurrent.futures
import importlib.util
import os
import subprocess
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import backtest as bt
from . import estimation, plotting, report_io
from .defaults import CONFIG_TYPES, DEFAULTS
from .errors import (BadParam, NoFeasiblePoint, SparseMRError, ValidationError,
                     ZeroVariance)
from .model_core import ProxyKind, SolverConfig, build_instance
from .ppc import ppc_solve

EXIT_VALIDATION = 2
EXIT_NONCONVERGED = 3
EXIT_INFEASIBLE = 4


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = dict(DEFAULTS)
    if path:
        with open(path) as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ValidationError("config file must be a flat key-value mapping")
        for key, val in loaded.items():
            if key not in CONFIG_TYPES:
                raise ValidationError(f"unknown config key: {key!r}")
            want = CONFIG_TYPES[key]
            if want is float and isinstance(val, int):
                val = float(val)
            if val is not None and not isinstance(val, want):
                raise ValidationError(f"config key {key!r}: expected {want}, got {type(val).__name__}")
            cfg[key] = val
    for key, val in overrides.items():
        if val is not None:
            cfg[key] = val
    return cfg


def hashable_config(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k in CONFIG_TYPES or k in DEFAULTS}


def _series_from_prices(prices, cfg):
    if cfg["series_kind"] == "log_prices":
        return np.log(prices.values)
    if cfg["series_kind"] == "log_returns":
        return estimation.log_returns(prices, cfg["tau"])
    raise ValidationError(f"unknown series_kind {cfg['series_kind']!r}")


def _estimate_bundle(cfg: dict) -> dict:
    if not cfg.get("prices"):
        raise ValidationError("estimate requires a 'prices' path")
    prices = estimation.read_price_csv(cfg["prices"])
    series = _series_from_prices(prices, cfg)
    aset = estimation.build_autocov_set(series, q=cfg["q"])
    provenance = {
        "source": str(cfg["prices"]),
        "source_sha256": report_io.file_sha256(cfg["prices"]),
        "series_kind": cfg["series_kind"],
        "q": cfg["q"],
        "symmetrized": True,
    }
    return report_io.bundle_from_autocov(aset, prices.asset_names, provenance)


def resolve_phi(cfg: dict, A0: np.ndarray) -> float:
    if cfg["phi_mode"] == "absolute":
        return float(cfg["phi_value"])
    if cfg["phi_mode"] == "median_variance_fraction":
        return float(cfg["phi_value"]) * float(np.median(np.diag(A0)))
    raise ValidationError(f"unknown phi_mode {cfg['phi_mode']!r}")


def _solve_from_cfg(cfg: dict, out_dir: Path) -> tuple[dict, bool]:
    """Run estimate (if needed) + solve; write report + trace; returns
    (report doc, converged)."""
    if cfg.get("bundle"):
        bundle = report_io.read_json(cfg["bundle"])
    else:
        bundle = _estimate_bundle(cfg)
    aset = report_io.autocov_from_bundle(bundle)
    phi = resolve_phi(cfg, aset[0])
    inst = build_instance(aset, ProxyKind(cfg["proxy"]), cfg["gamma"], phi, cfg["k"])
    scfg = SolverConfig(rho0=cfg["rho0"], growth_r=cfg["growth_r"],
                        eps_inner=cfg["eps_inner"], eps_outer=cfg["eps_outer"],
                        max_inner=cfg["max_inner"], max_outer=cfg["max_outer"],
                        bisect_tol=cfg["bisect_tol"],
                        upsilon_margin=cfg["upsilon_margin"])
    report = ppc_solve(inst, scfg, seed=cfg["seed"], nonconvex=cfg["nonconvex"])
    cfg_hash = report_io.config_hash(hashable_config(cfg))
    doc = report_io.portfolio_report(inst, report, bundle["asset_names"],
                                     seed=cfg["seed"], cfg_hash=cfg_hash)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_io.write_json(out_dir / "report.json", doc)
    report_io.write_outer_trace_csv(out_dir / "trace.csv", report)
    return doc, report.converged


def _backtest_from_cfg(cfg: dict, report_doc: dict, out_dir: Path) -> dict:
    prices = estimation.read_price_csv(cfg["prices"])
    weights = report_io.weights_from_report(report_doc, prices.asset_names)
    l1 = float(np.sum(np.abs(weights)))
    sp = bt.spread(weights, prices, t0=cfg["t0"])
    metrics = {}
    flags = []
    if np.all(sp.values == 0.0):
        log = bt.simulate(sp, cfg["open_mult"], cfg["close_level"], weight_l1=max(l1, 1.0))
    else:
        log = bt.simulate(sp, cfg["open_mult"], cfg["close_level"], weight_l1=l1)
    metrics["cumulative_pnl"] = bt.cumulative_pnl(log)
    try:
        metrics["sharpe"] = bt.sharpe(log)
    except ZeroVariance:
        metrics["sharpe"] = None
        flags.append("zero_variance_roi")
    try:
        metrics["dickey_fuller"] = bt.dickey_fuller(sp.values)
    except SparseMRError:
        metrics["dickey_fuller"] = None
        flags.append("degenerate_df_regression")
    metrics["trades"] = int(np.sum(np.abs(np.diff(log.positions)) > 0))
    metrics["spread_sd"] = sp.sd
    metrics["flags"] = flags

    cfg_hash = report_io.config_hash(hashable_config(cfg))
    params = {"open_mult": cfg["open_mult"], "close_level": cfg["close_level"],
              "t0": cfg["t0"], "weight_l1": l1}
    doc = report_io.backtest_report(metrics, params, cfg["seed"], cfg_hash)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_io.write_json(out_dir / "backtest.json", doc)
    bt.write_trade_csv(out_dir / "trades.csv", log)
    if cfg["figures"]:
        plotting.render_backtest_figures(str(out_dir), log,
                                         cfg["open_mult"], cfg["close_level"])
    return doc


def _fail(exc: SparseMRError) -> None:
    click.echo(f"error: {exc}", err=True)
    if isinstance(exc, NoFeasiblePoint):
        sys.exit(EXIT_INFEASIBLE)
    sys.exit(EXIT_VALIDATION)


@click.group()
def main():
    """Sparse mean-reverting portfolio toolkit."""


_cfg_opt = click.option("--config", "-c", type=click.Path(exists=True), default=None,
                        help="Flat YAML config file; flags override file values.")


@main.command()
@_cfg_opt
@click.option("--prices", type=click.Path(exists=True))
@click.option("--q", type=int)
@click.option("--series-kind", "series_kind",
              type=click.Choice(["log_prices", "log_returns"]))
@click.option("--out", type=click.Path(), required=True)
def estimate(config, prices, q, series_kind, out):
    """Estimate the autocovariance bundle from a price CSV."""
    try:
        cfg = load_config(config, {"prices": prices, "q": q, "series_kind": series_kind})
        bundle = _estimate_bundle(cfg)
        report_io.write_json(out, bundle)
    except SparseMRError as exc:
        _fail(exc)
    click.echo(f"wrote {out} (n={bundle['n']}, q={bundle['q']})")


@main.command()
@_cfg_opt
@click.option("--prices", type=click.Path(exists=True))
@click.option("--bundle", type=click.Path(exists=True))
@click.option("--proxy", type=click.Choice([p.value for p in ProxyKind]))
@click.option("--gamma", type=float)
@click.option("--phi-mode", "phi_mode", type=click.Choice(["absolute", "median_variance_fraction"]))
@click.option("--phi-value", "phi_value", type=float)
@click.option("--k", type=int)
@click.option("--seed", type=int)
@click.option("--out-dir", type=click.Path(), required=True)
def solve(config, prices, bundle, proxy, gamma, phi_mode, phi_value, k, seed, out_dir):
    """Solve for a sparse mean-reverting portfolio; writes report.json + trace.csv."""
    try:
        cfg = load_config(config, {"prices": prices, "bundle": bundle, "proxy": proxy,
                                   "gamma": gamma, "phi_mode": phi_mode,
                                   "phi_value": phi_value, "k": k, "seed": seed})
        doc, converged = _solve_from_cfg(cfg, Path(out_dir))
    except SparseMRError as exc:
        _fail(exc)
    click.echo(f"objective={doc['objective']:.6g} support={doc['extras']['kkt']['support']}")
    if not converged:
        click.echo("warning: outer loop hit its iteration cap", err=True)
        sys.exit(EXIT_NONCONVERGED)


@main.command(name="backtest")
@_cfg_opt
@click.option("--prices", type=click.Path(exists=True))
@click.option("--report", type=click.Path(exists=True), required=True)
@click.option("--open-mult", "open_mult", type=float)
@click.option("--close-level", "close_level", type=float)
@click.option("--out-dir", type=click.Path(), required=True)
def backtest_cmd(config, prices, report, open_mult, close_level, out_dir):
    """Backtest a solved portfolio over a price CSV."""
    try:
        cfg = load_config(config, {"prices": prices, "report": report,
                                   "open_mult": open_mult, "close_level": close_level})
        if not cfg.get("prices"):
            raise ValidationError("backtest requires a 'prices' path")
        doc = _backtest_from_cfg(cfg, report_io.read_json(report), Path(out_dir))
    except SparseMRError as exc:
        _fail(exc)
    m = doc["metrics"]
    sr = "n/a" if m["sharpe"] is None else f"{m['sharpe']:.4f}"
    click.echo(f"cum_pnl={m['cumulative_pnl']:.6g} sharpe={sr} trades={m['trades']}")


def _sdp_available() -> bool:
    return importlib.util.find_spec("sdp_baseline") is not None


def _run_cell(args: dict) -> dict:
    """One sweep cell: solve + backtest; returns the summary row."""
    cfg = args["cfg"]
    cell_dir = Path(args["cell_dir"])
    row = {"method": args.get("method", "ppc"), "proxy": cfg["proxy"], "q": cfg["q"],
           "gamma": cfg["gamma"], "k": cfg["k"], "error": None,
           "sharpe": None, "cum_pnl": None, "df_stat": None, "kkt_residual": None}
    try:
        if args.get("method") == "sdp":
            cmd = [sys.executable, "-m", "sdp_baseline",
                   "--bundle", cfg["bundle"], "--proxy", cfg["proxy"],
                   "--gamma", str(cfg["gamma"]), "--phi", str(args["phi"]),
                   "--k", str(cfg["k"]), "--beta", str(cfg["beta"]),
                   "--seed", str(cfg["seed"]),
                   "--out", str(cell_dir / "report.json")]
            cell_dir.mkdir(parents=True, exist_ok=True)
            proc = subprocess.run(cmd, capture_output=True, text=True)
            if proc.returncode != 0:
                raise SparseMRError(f"sdp_baseline failed: {proc.stderr.strip()[-400:]}")
            doc = report_io.read_json(cell_dir / "report.json")
        else:
            doc, _ = _solve_from_cfg(cfg, cell_dir)
            row["kkt_residual"] = doc["extras"]["kkt"]["stationarity_residual"]
        bdoc = _backtest_from_cfg(cfg, doc, cell_dir)
        m = bdoc["metrics"]
        row.update(sharpe=m["sharpe"], cum_pnl=m["cumulative_pnl"],
                   df_stat=m["dickey_fuller"])
    except (SparseMRError, OSError) as exc:
        row["error"] = str(exc)
    return row


@main.command()
@_cfg_opt
@click.option("--prices", type=click.Path(exists=True))
@click.option("--out-dir", type=click.Path(), required=True)
def sweep(config, prices, out_dir):
    """Run the (proxy, q, gamma, k) grid; emits summary.csv and figures."""
    try:
        cfg = load_config(config, {"prices": prices})
        if not cfg.get("prices"):
            raise ValidationError("sweep requires a 'prices' path")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)

        bundles = {}
        for q in cfg["q_grid"]:
            bcfg = dict(cfg, q=q)
            bundle = _estimate_bundle(bcfg)
            path = out / f"bundle_q{q}.json"
            report_io.write_json(path, bundle)
            aset = report_io.autocov_from_bundle(bundle)
            bundles[q] = (str(path), resolve_phi(cfg, aset[0]))

        with_sdp = _sdp_available()
        if not with_sdp:
            click.echo("notice: sdp_baseline not installed; skipping SDP cells", err=True)
        jobs = []
        for proxy in cfg["proxy_grid"]:
            for q in cfg["q_grid"]:
                bundle_path, phi = bundles[q]
                for gamma in cfg["gamma_grid"]:
                    for k in cfg["k_grid"]:
                        cell = f"{proxy}_q{q}_g{gamma:g}_k{k}"
                        cell_cfg = dict(cfg, proxy=proxy, q=q, gamma=gamma, k=k,
                                        bundle=bundle_path)
                        jobs.append({"cfg": cell_cfg, "method": "ppc", "phi": phi,
                                     "cell_dir": str(out / "cells" / cell)})
                        if with_sdp:
                            jobs.append({"cfg": cell_cfg, "method": "sdp", "phi": phi,
                                         "cell_dir": str(out / "cells" / f"sdp_{cell}")})
        workers = int(os.environ.get("SPARSEMR_WORKERS", "1"))
        if workers > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
                rows = list(ex.map(_run_cell, jobs))
        else:
            rows = [_run_cell(j) for j in jobs]

        import csv as _csv
        with open(out / "summary.csv", "w", newline="") as fh:
            w = _csv.DictWriter(fh, fieldnames=["method", "proxy", "q", "gamma", "k",
                                                "sharpe", "cum_pnl", "df_stat",
                                                "kkt_residual", "error"],
                                lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        if cfg["figures"]:
            plotting.render_sweep_figure(str(out), rows)
    except SparseMRError as exc:
        _fail(exc)
    failed = sum(1 for r in rows if r["error"])
    click.echo(f"sweep complete: {len(rows) - failed}/{len(rows)} cells succeeded")


@main.command()
def selftest():
    """Run the built-in oracle checks; exits nonzero on failure."""
    from .selftest import run_selftest

    ok = run_selftest(echo=click.echo)
    sys.exit(0 if ok else EXIT_NONCONVERGED)


if __name__ == "__main__":
    main()
