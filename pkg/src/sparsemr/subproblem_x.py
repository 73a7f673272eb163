"""Global solver for the x-step: a convex quadratic over the exterior of an
ellipsoid, min x'Hx - 2b'x subject to x'A_0 x >= phi.

Strong duality holds for a quadratic program with a single quadratic
constraint that is strictly feasible, so the global minimizer is found on the
dual interval lambda in [0, lambda_bar), where lambda_bar is the smallest
generalized eigenvalue of (H, A_0). The secular function

    g(lambda) = x(lambda)' A_0 x(lambda) - phi,   (H - lambda A_0) x(lambda) = b

is nondecreasing there; we bisect it. When g stays negative up to lambda_bar
(the hard case) the boundary solution needs a generalized-eigenvector
correction.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import A0NotPD, BadParam, DimensionMismatch
from .model_core import ProblemInstance

BISECT_CAP = 200
PIVOT_RTOL = 1e-12
BRACKET_SHRINK = 1e-12


@dataclass(frozen=True)
class XStepSystem:
    """Quadratic data for one x-step: min x'Hx - 2b'x s.t. x'A0 x >= phi.

    ``const`` carries the y/z-dependent additive constant so that callers can
    recover the full penalty value q_rho at the minimizer.
    """

    H: np.ndarray
    b: np.ndarray
    A0: np.ndarray
    phi: float
    const: float = 0.0


@dataclass(frozen=True)
class XStepResult:
    x: np.ndarray
    lam: float
    active: bool
    kkt_residual: float
    objective: float  # x'Hx - 2b'x, without ``const``
    converged: bool = True
    branch: str = "interior"  # interior | active | hard


def assemble_xstep(inst: ProblemInstance, y: np.ndarray, z: np.ndarray,
                   rho: float) -> XStepSystem:
    """H = alpha A_1 + gamma sum_i (z'A_i z) A_i + 2 rho I;  b = rho (y + z)."""
    if rho <= 0:
        raise BadParam("rho must be > 0")
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    n = inst.n
    if y.shape != (n,) or z.shape != (n,):
        raise DimensionMismatch(f"y/z must have shape ({n},)")
    A = inst.autocov
    H = 2.0 * rho * np.eye(n)
    if inst.alpha:
        H = H + A[1]
    if inst.gamma > 0:
        for i in range(2, inst.q + 1):
            H = H + (inst.gamma * float(z @ A[i] @ z)) * A[i]
    H = 0.5 * (H + H.T)
    b = rho * (y + z)
    const = rho * (float(y @ y) + float(z @ z))
    return XStepSystem(H=H, b=b, A0=A[0], phi=inst.phi, const=const)


def min_gen_eig(H: np.ndarray, A0: np.ndarray) -> float:
    """Smallest generalized eigenvalue of (H, A0) with A0 > 0."""
    _require_pd(A0)
    w = scipy.linalg.eigh(H, A0, eigvals_only=True, subset_by_index=[0, 0])
    return float(w[0])


def _require_pd(A0: np.ndarray) -> None:
    try:
        np.linalg.cholesky(A0)
    except np.linalg.LinAlgError as exc:
        raise A0NotPD("A_0 is not positive definite") from exc


def _solve_shifted(H, A0, b, lam):
    """x(lambda) from (H - lambda A0) x = b, falling back to least squares."""
    C = H - lam * A0
    try:
        return np.linalg.solve(C, b)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(C, b, rcond=PIVOT_RTOL)[0]


def solve_xstep(sys: XStepSystem, tol: float = 1e-10) -> XStepResult:
    """Global minimizer of the x-step via the dual secular equation."""
    if tol <= 0:
        raise BadParam("tol must be > 0")
    H, b, A0, phi = sys.H, sys.b, sys.A0, sys.phi
    _require_pd(A0)

    def vol(x):
        return float(x @ A0 @ x)

    def obj(x):
        return float(x @ H @ x) - 2.0 * float(b @ x)

    def residual(x, lam):
        return float(np.linalg.norm((H - lam * A0) @ x - b))

    # (i) unconstrained minimizer
    x0 = _solve_shifted(H, A0, b, 0.0)
    g0 = vol(x0) - phi
    if g0 >= -tol:
        return XStepResult(x=x0, lam=0.0, active=abs(g0) <= tol,
                           kkt_residual=residual(x0, 0.0), objective=obj(x0),
                           branch="interior")

    lam_bar = min_gen_eig(H, A0)
    hi = lam_bar * (1.0 - BRACKET_SHRINK)
    x_hi = _solve_shifted(H, A0, b, hi)
    g_hi = vol(x_hi) - phi

    if g_hi < 0.0:
        # (iii) hard case: correct the min-norm boundary solution along a
        # generalized eigenvector for lambda_bar.
        C = H - lam_bar * A0
        x_hat = np.linalg.pinv(C, rcond=PIVOT_RTOL) @ b
        w, V = scipy.linalg.eigh(H, A0)
        v = V[:, 0]
        a = float(v @ A0 @ v)
        c = float(v @ A0 @ x_hat)
        d = vol(x_hat) - phi
        disc = max(c * c - a * d, 0.0)
        roots = [(-c + np.sqrt(disc)) / a, (-c - np.sqrt(disc)) / a]
        cands = [x_hat + t * v for t in roots]
        x_star = min(cands, key=obj)
        return XStepResult(x=x_star, lam=lam_bar, active=True,
                           kkt_residual=residual(x_star, lam_bar),
                           objective=obj(x_star), branch="hard")

    # (ii) active constraint: bisect g on [0, hi]
    lo, g_lo, x_lo = 0.0, g0, x0
    x_best, lam_best, g_best = x_hi, hi, g_hi
    converged = False
    for _ in range(BISECT_CAP):
        mid = 0.5 * (lo + hi)
        x_mid = _solve_shifted(H, A0, b, mid)
        g_mid = vol(x_mid) - phi
        if abs(g_mid) < abs(g_best):
            x_best, lam_best, g_best = x_mid, mid, g_mid
        if abs(g_mid) <= tol * phi:
            converged = True
            break
        if g_mid < 0.0:
            lo, g_lo, x_lo = mid, g_mid, x_mid
        else:
            hi, x_hi, g_hi = mid, x_mid, g_mid
    return XStepResult(x=x_best, lam=lam_best, active=True,
                       kkt_residual=residual(x_best, lam_best),
                       objective=obj(x_best), converged=converged,
                       branch="active")
