"""Autocovariance estimation from price/return series, PSD repair, and a
VAR(1) synthetic generator for desk-scale testing.

Note on the lag-s estimator: we use

    Gamma_s = 1/(T - s - 1) * sum_{t=1}^{T-s} xc_t xc_{t+s}'

with xc_t the globally demeaned series. Raw Gamma_s for s >= 1 is generally
asymmetric; ``build_autocov_set`` symmetrizes and clips eigenvalues so the
output meets the model's definiteness requirements.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import (BadParam, DimensionMismatch, NonPositivePrice,
                     SeriesTooShort, TauTooLarge)
from .model_core import AutocovSet


@dataclass(frozen=True)
class PriceMatrix:
    """T x n strictly positive prices, rows in increasing time order."""

    values: np.ndarray
    asset_names: tuple = ()
    timestamps: tuple = ()

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        if v.shape[0] < 3:
            raise SeriesTooShort(f"need at least 3 rows, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise NonPositivePrice("prices contain non-finite entries")
        if np.any(v <= 0):
            t, i = np.argwhere(v <= 0)[0]
            raise NonPositivePrice(f"non-positive price at row {t}, column {i}")
        object.__setattr__(self, "values", v)
        names = tuple(self.asset_names) or tuple(f"asset_{i}" for i in range(v.shape[1]))
        if len(names) != v.shape[1]:
            raise DimensionMismatch("asset_names length does not match column count")
        object.__setattr__(self, "asset_names", names)
        object.__setattr__(self, "timestamps", tuple(self.timestamps))

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


def log_returns(prices: PriceMatrix, tau: int = 1) -> np.ndarray:
    """Horizon-tau log returns: row t holds ln p_t - ln p_{t-tau}."""
    if tau < 1:
        raise BadParam("tau must be a positive integer")
    if tau >= prices.T:
        raise TauTooLarge(f"tau={tau} with only {prices.T} rows")
    logp = np.log(prices.values)
    return logp[tau:] - logp[:-tau]


def autocov(series: np.ndarray, s: int) -> np.ndarray:
    """Lag-s empirical autocovariance with denominator T - s - 1.

    Raw output: not symmetrized for s >= 1.
    """
    x = np.atleast_2d(np.asarray(series, dtype=float))
    if x.shape[0] == 1 and x.shape[1] > 1:
        x = x.T
    T = x.shape[0]
    if s < 0:
        raise BadParam("lag s must be >= 0")
    if T < s + 2:
        raise SeriesTooShort(f"T={T} but lag s={s} needs T >= {s + 2}")
    xc = x - x.mean(axis=0)
    return (xc[: T - s].T @ xc[s:]) / (T - s - 1)


def make_psd(M: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """Nearest symmetric matrix with eigenvalues clipped at ``floor``.

    Symmetrizes first, then clips the spectrum; identity on matrices already
    symmetric with spectrum above the floor.
    """
    M = np.asarray(M, dtype=float)
    S = 0.5 * (M + M.T)
    w, V = np.linalg.eigh(S)
    if w[0] >= floor:
        return S
    w = np.maximum(w, floor)
    out = (V * w) @ V.T
    return 0.5 * (out + out.T)


def build_autocov_set(series: np.ndarray, q: int, a0_floor: float | None = None) -> AutocovSet:
    """Assemble A_0..A_q from a series: symmetrized, PSD-clipped estimates.

    ``a0_floor`` defaults to 1e-8 * trace(Gamma_0)/n, guaranteeing A_0 > 0
    without distorting well-conditioned estimates.
    """
    if q < 2:
        raise BadParam("q must be >= 2")
    x = np.atleast_2d(np.asarray(series, dtype=float))
    if x.shape[0] == 1 and x.shape[1] > 1:
        x = x.T
    if x.shape[0] < q + 2:
        raise SeriesTooShort(f"T={x.shape[0]} but q={q} needs T >= {q + 2}")
    g0 = autocov(x, 0)
    n = g0.shape[0]
    if a0_floor is None:
        a0_floor = 1e-8 * float(np.trace(g0)) / n
    if a0_floor <= 0:
        raise BadParam("a0_floor must be > 0 (is the series constant?)")
    mats = [make_psd(g0, a0_floor)]
    for s in range(1, q + 1):
        mats.append(make_psd(autocov(x, s), 0.0))
    return AutocovSet(tuple(mats))


def synth_var1(n: int, T: int, spectral_radius: float, noise_sd: float,
               seed: int, burn_in: int = 200) -> np.ndarray:
    """Simulate x_{t+1} = B x_t + eps_t with B scaled to the given spectral radius."""
    if not (0 < spectral_radius < 1):
        raise BadParam("spectral_radius must be in (0, 1)")
    if noise_sd < 0:
        raise BadParam("noise_sd must be >= 0")
    if n < 1 or T < 1:
        raise BadParam("n and T must be positive")
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, n))
    radius = np.abs(np.linalg.eigvals(B)).max()
    B *= spectral_radius / radius
    x = np.zeros(n)
    out = np.empty((T, n))
    for t in range(-burn_in, T):
        x = B @ x + noise_sd * rng.standard_normal(n)
        if t >= 0:
            out[t] = x
    return out


def var1_stationary_cov(B: np.ndarray, noise_sd: float) -> np.ndarray:
    """Analytic stationary covariance of a VAR(1): solves the Lyapunov equation."""
    from scipy.linalg import solve_discrete_lyapunov

    return solve_discrete_lyapunov(np.asarray(B, float), noise_sd**2 * np.eye(B.shape[0]))


def var1_transition(n: int, spectral_radius: float, seed: int) -> np.ndarray:
    """The transition matrix ``synth_var1`` uses for the same (n, seed)."""
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, n))
    return B * (spectral_radius / np.abs(np.linalg.eigvals(B)).max())


def read_price_csv(path_or_buffer) -> PriceMatrix:
    """Read a price CSV: header of asset names, first column a date label,
    remaining columns positive decimal prices. Missing values are rejected."""
    if hasattr(path_or_buffer, "read"):
        fh = path_or_buffer
        close = False
    else:
        fh = open(path_or_buffer, newline="")
        close = True
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or len(header) < 2:
            raise BadParam("price CSV needs a header with a date column plus assets")
        names = tuple(h.strip() for h in header[1:])
        rows, stamps = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise BadParam(f"row {lineno}: expected {len(header)} fields, got {len(row)}")
            stamps.append(row[0])
            vals = []
            for col, cell in enumerate(row[1:], start=2):
                cell = cell.strip()
                if cell == "":
                    raise BadParam(f"row {lineno}, column {col}: missing value")
                try:
                    v = float(cell)
                except ValueError as exc:
                    raise BadParam(f"row {lineno}, column {col}: not a number: {cell!r}") from exc
                if v <= 0:
                    raise NonPositivePrice(f"row {lineno}, column {col}: non-positive price {v}")
                vals.append(v)
            rows.append(vals)
        if not rows:
            raise BadParam("price CSV has no data rows")
        return PriceMatrix(np.asarray(rows), asset_names=names, timestamps=tuple(stamps))
    finally:
        if close:
            fh.close()


def write_price_csv(path, prices: PriceMatrix) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", *prices.asset_names])
    stamps = prices.timestamps or tuple(str(t) for t in range(prices.T))
    for t in range(prices.T):
        w.writerow([stamps[t], *(f"{v:.12g}" for v in prices.values[t])])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())
