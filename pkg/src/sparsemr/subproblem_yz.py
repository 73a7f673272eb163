"""Closed-form y-step (sparsify and normalize) and z-step (SPD linear solve)."""

import numpy as np
import scipy.linalg

from .errors import BadParam, DimensionMismatch, ZeroVector
from .model_core import ProblemInstance


def sparsify_top_k(x: np.ndarray, k: int):
    """Keep the k largest-magnitude entries, zero the rest, renormalize.

    Ties in magnitude are broken toward the lowest index so runs are
    reproducible. Returns (vector, support index tuple).
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if not (1 <= k <= n):
        raise BadParam(f"k must be in [1, {n}], got {k}")
    # stable sort on (-|x|, index) keeps the lowest index among equal magnitudes
    order = np.argsort(-np.abs(x), kind="stable")
    support = np.sort(order[:k])
    y = np.zeros_like(x)
    y[support] = x[support]
    nrm = np.linalg.norm(y)
    if nrm == 0.0:
        raise ZeroVector("all retained entries are zero; cannot normalize")
    return y / nrm, tuple(int(i) for i in support)


def solve_ystep(x: np.ndarray, k: int) -> np.ndarray:
    """Minimizer of ||x - y||^2 over unit-norm k-sparse y."""
    return sparsify_top_k(x, k)[0]


def solve_zstep(inst: ProblemInstance, x: np.ndarray, rho: float) -> np.ndarray:
    """z = rho (gamma sum_i (x'A_i x) A_i + rho I)^{-1} x, via SPD factorization."""
    if rho <= 0:
        raise BadParam("rho must be > 0")
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.n,):
        raise DimensionMismatch(f"x has shape {x.shape}, expected ({inst.n},)")
    if inst.gamma == 0:
        return x.copy()
    A = inst.autocov
    M = rho * np.eye(inst.n)
    for i in range(2, inst.q + 1):
        M = M + (inst.gamma * float(x @ A[i] @ x)) * A[i]
    c, low = scipy.linalg.cho_factor(0.5 * (M + M.T))
    return scipy.linalg.cho_solve((c, low), rho * x)
