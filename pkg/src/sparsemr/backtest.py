"""Band-trading simulation and performance metrics for a fixed weight vector.

The spread is s_t = x'(ln p_t - ln p_{t0}); the trading rule normalizes it by
its standard deviation and opens a position when the normalized value leaves
the +/- open band, closing on reversion to the close level:

    flat  & z >=  open_mult -> open short
    flat  & z <= -open_mult -> open long
    short & z <=  close_level -> close
    long  & z >= -close_level -> close

Per step, P&L_t = position_{t-1} * (s_t - s_{t-1}) and ROI_t = P&L_t / ||x||_1.
All windows below are half-open [t1, t2) in 0-based indexing.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (BadParam, DegenerateRegression, DimensionMismatch,
                     ZeroVariance, ZeroVolatilitySpread)
from .estimation import PriceMatrix


@dataclass(frozen=True)
class SpreadSeries:
    values: np.ndarray
    sd: float
    mean: float

    @classmethod
    def from_values(cls, values, sd=None):
        """Build from raw values; sd defaults to the full-window sample sd."""
        v = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise BadParam("spread contains non-finite values")
        sd_eff = float(np.std(v, ddof=1)) if sd is None else float(sd)
        return cls(values=v, sd=sd_eff, mean=float(np.mean(v)))


@dataclass(frozen=True)
class TradeLog:
    positions: np.ndarray   # in {-1, 0, +1}, after the step-t decision
    pnl: np.ndarray
    roi: np.ndarray
    cum_pnl: np.ndarray
    zscores: np.ndarray
    spread: np.ndarray
    weight_l1: float


def spread(weights: np.ndarray, prices: PriceMatrix, t0: int = 0,
           sd: float | None = None, rolling_window: int | None = None) -> SpreadSeries:
    """Portfolio log-price spread relative to the epoch t0."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (prices.n,):
        raise DimensionMismatch(f"weights shape {w.shape} != ({prices.n},)")
    if not (0 <= t0 < prices.T):
        raise BadParam(f"t0={t0} outside [0, {prices.T})")
    logp = np.log(prices.values)
    s = (logp - logp[t0]) @ w
    if rolling_window is not None:
        if rolling_window < 2:
            raise BadParam("rolling_window must be >= 2")
        # rolling sd of the tail window, for normalization studies
        tail = s[-rolling_window:]
        return SpreadSeries(values=s, sd=float(np.std(tail, ddof=1)), mean=float(np.mean(s)))
    return SpreadSeries.from_values(s, sd=sd)


def simulate(spread_series: SpreadSeries, open_mult: float = 1.0,
             close_level: float = 0.0, weight_l1: float = 1.0) -> TradeLog:
    """Run the band rule over the spread; deterministic in its inputs."""
    if open_mult <= 0:
        raise BadParam("open_mult must be > 0")
    s = spread_series.values
    sd = spread_series.sd
    allzero = np.all(s == 0.0)
    if sd <= 0 and not allzero:
        raise ZeroVolatilitySpread("spread standard deviation is zero")
    z = np.zeros_like(s) if allzero else s / sd
    T = s.shape[0]
    pos = np.zeros(T, dtype=int)
    pnl = np.zeros(T)
    prev = 0
    for t in range(T):
        if t > 0:
            pnl[t] = prev * (s[t] - s[t - 1])
        cur = prev
        if prev == 0:
            if z[t] >= open_mult:
                cur = -1
            elif z[t] <= -open_mult:
                cur = 1
        elif prev == -1 and z[t] <= close_level:
            cur = 0
        elif prev == 1 and z[t] >= -close_level:
            cur = 0
        pos[t] = cur
        prev = cur
    if weight_l1 <= 0:
        raise BadParam("weight_l1 must be > 0")
    roi = pnl / weight_l1
    return TradeLog(positions=pos, pnl=pnl, roi=roi, cum_pnl=np.cumsum(pnl),
                    zscores=z, spread=s, weight_l1=weight_l1)


def cumulative_pnl(log: TradeLog, t1: int = 0, t2: int | None = None) -> float:
    """Sum of P&L over [t1, t2)."""
    t2 = log.pnl.shape[0] if t2 is None else t2
    if not (0 <= t1 < t2 <= log.pnl.shape[0]):
        raise BadParam(f"bad window [{t1}, {t2})")
    return float(np.sum(log.pnl[t1:t2]))


def sharpe(log: TradeLog, t1: int = 0, t2: int | None = None) -> float:
    """mu_ROI / sigma_ROI with population-style moments over [t1, t2)."""
    t2 = log.roi.shape[0] if t2 is None else t2
    if not (0 <= t1 < t2 <= log.roi.shape[0]):
        raise BadParam(f"bad window [{t1}, {t2})")
    r = log.roi[t1:t2]
    mu = float(np.mean(r))
    sigma = float(np.sqrt(np.mean((r - mu) ** 2)))
    if sigma == 0.0:
        raise ZeroVariance("ROI variance is zero on the window")
    return mu / sigma


def dickey_fuller(series) -> float:
    """t-statistic of the slope in the no-constant regression of ds_t on s_{t-1}.

    More negative means stronger mean reversion. Critical-value judgment is
    left to the caller.
    """
    s = np.asarray(series, dtype=float)
    if s.shape[0] < 4:
        raise BadParam("need at least 4 observations")
    lag = s[:-1]
    ds = np.diff(s)
    denom = float(lag @ lag)
    if denom == 0.0:
        raise DegenerateRegression("sum of squared lagged levels is zero")
    slope = float(lag @ ds) / denom
    resid = ds - slope * lag
    nobs = ds.shape[0]
    sigma2 = float(resid @ resid) / (nobs - 1)
    if sigma2 == 0.0:
        raise DegenerateRegression("zero residual variance")
    se = np.sqrt(sigma2 / denom)
    return slope / se


def write_trade_csv(path, log: TradeLog) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "spread", "z", "position", "pnl", "roi", "cum_pnl"])
        for t in range(log.spread.shape[0]):
            w.writerow([t, f"{log.spread[t]:.17g}", f"{log.zscores[t]:.17g}",
                        int(log.positions[t]), f"{log.pnl[t]:.17g}",
                        f"{log.roi[t]:.17g}", f"{log.cum_pnl[t]:.17g}"])
