"""JSON/CSV persistence for autocov bundles, portfolio reports, and backtest
reports, plus config hashing. All writers are deterministic: sorted keys, no
timestamps, repr-based float formatting."""

import csv
import hashlib
import importlib.resources
import json

import jsonschema
import numpy as np

from .errors import ValidationError
from .model_core import AutocovSet, ProblemInstance
from .ppc import SolveReport

PORTFOLIO_SCHEMA = json.loads(
    importlib.resources.files("sparsemr.schemas")
    .joinpath("portfolio_report.schema.json").read_text())

BUNDLE_SCHEMA_ID = "sparsemr/autocov_bundle/v1"
BACKTEST_SCHEMA_ID = "sparsemr/backtest_report/v1"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2, allow_nan=False))
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------- autocov bundle

def bundle_from_autocov(aset: AutocovSet, asset_names, provenance: dict) -> dict:
    return {
        "schema": BUNDLE_SCHEMA_ID,
        "n": aset.dim,
        "q": aset.lag_count,
        "asset_names": list(asset_names),
        "matrices": [m.tolist() for m in aset.matrices],
        "provenance": provenance,
    }


def autocov_from_bundle(bundle: dict) -> AutocovSet:
    if bundle.get("schema") != BUNDLE_SCHEMA_ID:
        raise ValidationError(f"not an autocov bundle: schema={bundle.get('schema')!r}")
    return AutocovSet(tuple(np.asarray(m, dtype=float) for m in bundle["matrices"]))


# ---------------------------------------------------------------- portfolio report

def portfolio_report(inst: ProblemInstance, report: SolveReport, asset_names,
                     seed: int, cfg_hash: str, method: str = "ppc") -> dict:
    k = report.kkt
    doc = {
        "schema": "sparsemr/portfolio_report/v1",
        "method": method,
        "proxy": inst.proxy.value,
        "q": inst.q,
        "gamma": inst.gamma,
        "alpha": inst.alpha,
        "phi": inst.phi,
        "k": inst.k,
        "asset_names": list(asset_names),
        "portfolio": {name: float(w) for name, w in zip(asset_names, report.portfolio)},
        "objective": float(report.objective),
        "seed": int(seed),
        "config_hash": cfg_hash,
        "extras": {
            "converged": report.converged,
            "outer_iterations": report.outer_iterations,
            "rho_final": report.rho_final,
            "upsilon": report.upsilon,
            "raw_x": [float(v) for v in report.raw_x],
            "raw_z": [float(v) for v in report.raw_z],
            "kkt": {
                "stationarity_residual": k.stationarity_residual,
                "complementarity_residual": k.complementarity_residual,
                "norm_gap": k.norm_gap,
                "support": list(k.support),
                "lambda": k.lam,
                "mu": k.mu,
                "robinson_ok": k.robinson_ok,
                "robinson_condition_number": (
                    k.robinson_condition_number
                    if np.isfinite(k.robinson_condition_number) else None),
            },
        },
    }
    validate_portfolio_report(doc)
    return doc


def validate_portfolio_report(doc: dict) -> None:
    try:
        jsonschema.validate(doc, PORTFOLIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"portfolio report schema violation: {exc.message}") from exc


def weights_from_report(doc: dict, asset_names) -> np.ndarray:
    """Align report weights with a price matrix's columns; absent assets get 0."""
    validate_portfolio_report(doc)
    port = doc["portfolio"]
    return np.asarray([port.get(name, 0.0) for name in asset_names], dtype=float)


# ---------------------------------------------------------------- trace CSV

def write_outer_trace_csv(path, report: SolveReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["outer", "rho", "gap_inf", "gap_x_y", "gap_x_z", "q_rho",
                    "inner_iterations", "inner_converged", "safeguard_reset"])
        for r in report.trace:
            w.writerow([r.outer, f"{r.rho:.17g}", f"{r.gap_inf:.17g}",
                        f"{r.gap_x_y:.17g}", f"{r.gap_x_z:.17g}", f"{r.q_rho:.17g}",
                        r.inner_iterations, int(r.inner_converged),
                        int(r.safeguard_reset)])


# ---------------------------------------------------------------- backtest report

def backtest_report(metrics: dict, params: dict, seed: int, cfg_hash: str) -> dict:
    return {
        "schema": BACKTEST_SCHEMA_ID,
        "metrics": metrics,
        "params": params,
        "seed": int(seed),
        "config_hash": cfg_hash,
    }
