"""Batch entry point: read an autocovariance bundle, solve the semidefinite
relaxation, extract a sparse component, and write a portfolio report in the
shared schema (one solve per invocation)."""

import argparse
import hashlib
import json
import sys

from .core import (SdpBaselineError, extract_sparse_component,
                   portfolio_objective, proxy_weights, solve_sdp_p)

BUNDLE_SCHEMA_ID = "sparsemr/autocov_bundle/v1"
REPORT_SCHEMA_ID = "sparsemr/portfolio_report/v1"


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def build_report(bundle: dict, args) -> dict:
    alpha, gamma = proxy_weights(args.proxy, args.gamma)
    sol = solve_sdp_p(bundle["matrices"], alpha, gamma, args.phi, args.beta,
                      alpha_term=args.alpha_term)
    x = extract_sparse_component(sol.X, args.k)
    names = bundle["asset_names"]
    cfg = {"proxy": args.proxy, "gamma": args.gamma, "phi": args.phi,
           "k": args.k, "beta": args.beta, "seed": args.seed,
           "alpha_term": args.alpha_term}
    return {
        "schema": REPORT_SCHEMA_ID,
        "method": "sdp",
        "proxy": args.proxy,
        "q": int(bundle["q"]),
        "gamma": gamma,
        "alpha": alpha,
        "phi": float(args.phi),
        "k": int(args.k),
        "asset_names": list(names),
        "portfolio": {name: float(w) for name, w in zip(names, x)},
        "objective": portfolio_objective(bundle["matrices"], alpha, gamma, x),
        "seed": int(args.seed),
        "config_hash": hashlib.sha256(_canonical(cfg).encode()).hexdigest()[:16],
        "extras": {
            "sdp_objective": sol.objective,
            "solver_status": sol.solver_status,
            "beta": float(args.beta),
            "alpha_term": args.alpha_term,
        },
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="sdp_baseline")
    ap.add_argument("--bundle", required=True)
    ap.add_argument("--proxy", required=True,
                    choices=["predictability", "portmanteau", "crossing_stats"])
    ap.add_argument("--gamma", type=float, default=0.001)
    ap.add_argument("--phi", type=float, required=True)
    ap.add_argument("--k", type=int, required=True)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--alpha-term", dest="alpha_term", default="a0",
                    choices=["a0", "a1"])
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)

    try:
        with open(args.bundle) as fh:
            bundle = json.load(fh)
        if bundle.get("schema") != BUNDLE_SCHEMA_ID:
            raise SdpBaselineError(
                f"not an autocov bundle: schema={bundle.get('schema')!r}")
        doc = build_report(bundle, args)
    except (SdpBaselineError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    with open(args.out, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"objective={doc['objective']:.6g} "
          f"status={doc['extras']['solver_status']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
