"""Shipped default configuration.

These are the values a run uses when the config file or flags do not override
them. The tuning grids mirror the shipped sweep presets.
"""

import math

DEFAULTS = {
    # estimation
    "q": 3,
    "series_kind": "log_prices",     # or "log_returns"
    "tau": 1,
    # model
    "proxy": "crossing_stats",
    "gamma": 0.001,
    "phi_mode": "median_variance_fraction",   # or "absolute"
    "phi_value": 0.3,
    "k": 5,
    # solver
    "rho0": None,                    # None -> instance-dependent default
    "growth_r": math.sqrt(10.0),
    "eps_inner": 1e-3,
    "eps_outer": 1e-3,
    "max_inner": 500,
    "max_outer": 60,
    "bisect_tol": 1e-10,
    "upsilon_margin": 0.0,
    "nonconvex": False,
    # backtest
    "open_mult": 1.0,
    "close_level": 0.0,
    "t0": 0,
    # sweep grids
    "k_grid": [5, 10, 17],
    "q_grid": [3],
    "gamma_grid": [0.001],
    "proxy_grid": ["crossing_stats"],
    # SDP baseline
    "beta": 1.0,
    # misc
    "seed": 0,
    "figures": True,
}

GAMMA_GRID_START = 0.0001
GAMMA_GRID_STEP = 0.0009
GAMMA_GRID_STOP = 1.0

CONFIG_TYPES = {
    "prices": str,
    "bundle": str,
    "report": str,
    "out_dir": str,
    "q": int,
    "series_kind": str,
    "tau": int,
    "proxy": str,
    "gamma": float,
    "phi_mode": str,
    "phi_value": float,
    "k": int,
    "rho0": (float, type(None)),
    "growth_r": float,
    "eps_inner": float,
    "eps_outer": float,
    "max_inner": int,
    "max_outer": int,
    "bisect_tol": float,
    "upsilon_margin": float,
    "nonconvex": bool,
    "open_mult": float,
    "close_level": float,
    "t0": int,
    "k_grid": list,
    "q_grid": list,
    "gamma_grid": list,
    "proxy_grid": list,
    "beta": float,
    "seed": int,
    "figures": bool,
}


def full_gamma_grid():
    """The shipped gamma tuning grid: 0.0001 then steps of 0.0009 up to 1."""
    out = []
    g = GAMMA_GRID_START
    while g <= GAMMA_GRID_STOP + 1e-12:
        out.append(round(g, 10))
        g += GAMMA_GRID_STEP
    return out
