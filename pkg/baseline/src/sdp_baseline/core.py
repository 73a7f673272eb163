"""Convex semidefinite baseline for sparse mean-reverting portfolios.

Solves the relaxation over unit-trace PSD matrices

    min  alpha Tr(A X) + gamma sum_{i=2}^{q} Tr(A_i X)^2 + beta ||X||_1
    s.t. Tr(A_0 X) >= phi,  Tr(X) = 1,  X >= 0

followed by truncated-power sparse-component extraction. The alpha term uses
A_0 by default ("a0"); "a1" switches it to the lag-1 matrix so the objective
matches the quadratic term of the cardinality-constrained problem — the two
variants disagree in the source formulation and neither is canonical here.
"""

from dataclasses import dataclass

import cvxpy as cp
import numpy as np


class SdpBaselineError(Exception):
    pass


class ZeroVector(SdpBaselineError):
    pass


class SolverFailure(SdpBaselineError):
    pass


PROXIES = {
    # proxy -> (alpha, uses caller gamma)
    "predictability": (1, False),
    "portmanteau": (0, True),
    "crossing_stats": (1, True),
}


def proxy_weights(proxy: str, gamma: float) -> tuple[int, float]:
    if proxy not in PROXIES:
        raise SdpBaselineError(f"unknown proxy {proxy!r}")
    alpha, uses_gamma = PROXIES[proxy]
    if proxy == "portmanteau":
        return alpha, 1.0
    return alpha, (float(gamma) if uses_gamma else 0.0)


@dataclass(frozen=True)
class SdpSolution:
    X: np.ndarray
    objective: float
    solver_status: str


def solve_sdp_p(matrices, alpha: int, gamma: float, phi: float, beta: float,
                alpha_term: str = "a0") -> SdpSolution:
    """Solve the semidefinite relaxation with an off-the-shelf conic solver."""
    if beta <= 0:
        raise SdpBaselineError("beta must be > 0")
    mats = [np.asarray(m, dtype=float) for m in matrices]
    n = mats[0].shape[0]
    if alpha_term not in ("a0", "a1"):
        raise SdpBaselineError(f"alpha_term must be 'a0' or 'a1', got {alpha_term!r}")
    A_alpha = mats[0] if alpha_term == "a0" else mats[1]

    X = cp.Variable((n, n), symmetric=True)
    obj = alpha * cp.trace(A_alpha @ X) + beta * cp.norm1(cp.vec(X, order="F"))
    if gamma > 0:
        obj = obj + gamma * cp.sum(
            [cp.square(cp.trace(mats[i] @ X)) for i in range(2, len(mats))])
    constraints = [X >> 0, cp.trace(X) == 1, cp.trace(mats[0] @ X) >= phi]
    prob = cp.Problem(cp.Minimize(obj), constraints)
    prob.solve(solver=cp.CLARABEL)
    if X.value is None:
        raise SolverFailure(f"conic solver returned status {prob.status!r}")
    Xv = 0.5 * (X.value + X.value.T)
    return SdpSolution(X=Xv, objective=float(prob.value),
                       solver_status=str(prob.status))


def _truncate_top_k(v: np.ndarray, k: int) -> np.ndarray:
    keep = np.argsort(-np.abs(v), kind="stable")[:k]
    out = np.zeros_like(v)
    out[keep] = v[keep]
    nrm = np.linalg.norm(out)
    if nrm == 0.0:
        raise ZeroVector("all candidate components are zero")
    return out / nrm


def extract_sparse_component(X: np.ndarray, k: int, max_iter: int = 1000,
                             tol: float = 1e-12) -> np.ndarray:
    """Truncated power iteration v <- T_k(Xv) from the top eigenvector."""
    X = np.asarray(X, dtype=float)
    if k < 1:
        raise SdpBaselineError("k must be >= 1")
    if np.allclose(X, 0.0):
        raise ZeroVector("X is the zero matrix")
    _, vecs = np.linalg.eigh(X)
    v = _truncate_top_k(vecs[:, -1], k)
    for _ in range(max_iter):
        v_new = _truncate_top_k(X @ v, k)
        if np.max(np.abs(v_new - v)) <= tol:
            return v_new
        v = v_new
    return v


def portfolio_objective(matrices, alpha: int, gamma: float, x: np.ndarray) -> float:
    """Quadratic-plus-quartic objective of the extracted portfolio itself."""
    mats = [np.asarray(m, dtype=float) for m in matrices]
    val = alpha * float(x @ mats[1] @ x)
    if gamma > 0:
        val += gamma * sum(float(x @ mats[i] @ x) ** 2
                           for i in range(2, len(mats)))
    return val
