"""Problem data model: autocovariance sets, proxy mapping, objective and penalty evaluation.

The comprehensive model minimizes

    f(x) = alpha * x'A_1 x + gamma * sum_{i=2}^{q} (x'A_i x)^2

over unit-norm, k-sparse x with x'A_0 x >= phi. The penalty function q_rho
couples the split variables (x, y, z):

    q_rho(x, y, z) = alpha * x'A_1 x + gamma * sum_i (z'A_i z)(x'A_i x)
                     + rho * (||x - y||^2 + ||x - z||^2).
"""

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParam, DimensionMismatch, NonPSDInput

logger = logging.getLogger(__name__)

SYMMETRY_RTOL = 1e-12
PSD_RTOL = 1e-10


class ProxyKind(enum.Enum):
    PREDICTABILITY = "predictability"
    PORTMANTEAU = "portmanteau"
    CROSSING_STATS = "crossing_stats"


@dataclass(frozen=True)
class AutocovSet:
    """Lag-0..q autocovariance matrices A_0..A_q, validated at construction.

    A_0 must be positive definite; A_1..A_q positive semidefinite. Symmetry is
    required up to 1e-12 relative Frobenius error; violations are errors here,
    repair belongs to ``estimation.make_psd``.
    """

    matrices: tuple  # tuple of (n, n) ndarrays, length q + 1

    def __post_init__(self):
        mats = tuple(np.asarray(m, dtype=float) for m in self.matrices)
        if len(mats) < 3:
            raise BadParam("need at least A_0, A_1, A_2 (q >= 2)")
        n = mats[0].shape[0]
        for i, m in enumerate(mats):
            if m.shape != (n, n):
                raise DimensionMismatch(f"A_{i} has shape {m.shape}, expected {(n, n)}")
            fro = np.linalg.norm(m)
            if np.linalg.norm(m - m.T) > SYMMETRY_RTOL * max(fro, 1e-300):
                raise NonPSDInput(f"A_{i} is not symmetric within tolerance")
            w = np.linalg.eigvalsh(m)
            if i == 0:
                if w[0] <= 0:
                    raise NonPSDInput(f"A_0 must be positive definite; min eig = {w[0]:.3e}")
            elif w[0] < -PSD_RTOL * max(np.abs(w).max(), 1e-300):
                raise NonPSDInput(f"A_{i} is not PSD; min eig = {w[0]:.3e}")
        object.__setattr__(self, "matrices", mats)

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def lag_count(self) -> int:
        return len(self.matrices) - 1

    def __getitem__(self, i) -> np.ndarray:
        return self.matrices[i]


@dataclass(frozen=True)
class ProblemInstance:
    """A fully specified instance: (alpha, gamma, phi, k) plus the matrices."""

    autocov: AutocovSet
    alpha: int
    gamma: float
    phi: float
    k: int
    proxy: ProxyKind = ProxyKind.CROSSING_STATS

    def __post_init__(self):
        n = self.autocov.dim
        if self.alpha not in (0, 1):
            raise BadParam(f"alpha must be 0 or 1, got {self.alpha}")
        if self.gamma < 0:
            raise BadParam(f"gamma must be >= 0, got {self.gamma}")
        if self.phi <= 0:
            raise BadParam(f"phi must be > 0, got {self.phi}")
        if not (1 <= self.k <= n):
            raise BadParam(f"k must be in [1, {n}], got {self.k}")

    @property
    def n(self) -> int:
        return self.autocov.dim

    @property
    def q(self) -> int:
        return self.autocov.lag_count


@dataclass(frozen=True)
class SolverConfig:
    """Penalty-continuation and BCD tuning knobs."""

    rho0: float | None = None  # None -> instance-dependent default
    growth_r: float = float(np.sqrt(10.0))
    eps_inner: float = 1e-3
    eps_outer: float = 1e-3
    max_inner: int = 500
    max_outer: int = 60
    bisect_tol: float = 1e-10
    upsilon_margin: float = 0.0
    restarts: int = 3  # distinct feasible starts tried; best objective wins

    def __post_init__(self):
        if self.rho0 is not None and self.rho0 <= 0:
            raise BadParam("rho0 must be > 0")
        if self.growth_r <= 1:
            raise BadParam("growth_r must be > 1")
        for name in ("eps_inner", "eps_outer", "bisect_tol"):
            if getattr(self, name) <= 0:
                raise BadParam(f"{name} must be > 0")
        if self.upsilon_margin < 0:
            raise BadParam("upsilon_margin must be >= 0")
        if self.restarts < 1:
            raise BadParam("restarts must be >= 1")


@dataclass(frozen=True)
class TriplePoint:
    """The split iterate (x, y, z)."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(v)):
                raise BadParam(f"{name} has non-finite entries")
            object.__setattr__(self, name, v)
        if not (self.x.shape == self.y.shape == self.z.shape):
            raise DimensionMismatch("x, y, z must share a common length")


def build_instance(autocov: AutocovSet, proxy: ProxyKind, gamma: float,
                   phi: float, k: int) -> ProblemInstance:
    """Map a proxy choice to (alpha, gamma) and assemble the instance.

    Predictability -> (alpha=1, gamma=0); portmanteau -> (alpha=0, gamma=1);
    crossing statistics -> (alpha=1, gamma=gamma). For the first two, a
    user-supplied gamma is ignored (with a warning): it plays no role there.
    """
    if proxy is ProxyKind.PREDICTABILITY:
        if gamma not in (None, 0, 0.0):
            logger.warning("gamma=%s ignored for the predictability proxy", gamma)
        alpha, gamma_eff = 1, 0.0
    elif proxy is ProxyKind.PORTMANTEAU:
        if gamma not in (None, 1, 1.0):
            logger.warning("gamma=%s ignored for the portmanteau proxy", gamma)
        alpha, gamma_eff = 0, 1.0
    elif proxy is ProxyKind.CROSSING_STATS:
        if gamma is None or gamma < 0:
            raise BadParam("crossing_stats requires gamma >= 0")
        alpha, gamma_eff = 1, float(gamma)
    else:
        raise BadParam(f"unknown proxy {proxy!r}")
    return ProblemInstance(autocov=autocov, alpha=alpha, gamma=gamma_eff,
                           phi=float(phi), k=int(k), proxy=proxy)


def _check_vec(inst: ProblemInstance, v: np.ndarray, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (inst.n,):
        raise DimensionMismatch(f"{name} has shape {v.shape}, expected ({inst.n},)")
    return v


def eval_objective(inst: ProblemInstance, x: np.ndarray) -> float:
    """f(x) = alpha * x'A_1 x + gamma * sum_{i>=2} (x'A_i x)^2."""
    x = _check_vec(inst, x, "x")
    A = inst.autocov
    val = inst.alpha * float(x @ A[1] @ x)
    if inst.gamma > 0:
        val += inst.gamma * sum(float(x @ A[i] @ x) ** 2 for i in range(2, inst.q + 1))
    return val


def eval_qrho(inst: ProblemInstance, p: TriplePoint, rho: float) -> float:
    """Penalty objective q_rho(x, y, z)."""
    if rho <= 0:
        raise BadParam("rho must be > 0")
    x = _check_vec(inst, p.x, "x")
    y = _check_vec(inst, p.y, "y")
    z = _check_vec(inst, p.z, "z")
    A = inst.autocov
    val = inst.alpha * float(x @ A[1] @ x)
    if inst.gamma > 0:
        val += inst.gamma * sum(
            float(z @ A[i] @ z) * float(x @ A[i] @ x) for i in range(2, inst.q + 1)
        )
    dx_y = x - y
    dx_z = x - z
    return val + rho * (float(dx_y @ dx_y) + float(dx_z @ dx_z))
