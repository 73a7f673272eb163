"""Penalty continuation loop: drive rho to infinity geometrically, re-solving
the penalty subproblem by BCD at each level, with the safeguard reset and a
KKT certificate of the final point.

Safeguard: before each new level, one x-step evaluates
min_x q_{rho_next}(x, y, z) at the current warm start; if that value exceeds
the cap Upsilon, both warm starts are reset to the feasible point.
"""

from dataclasses import dataclass, field

import numpy as np

from .bcd import BcdResult, bcd_solve
from .errors import BadParam, BadSupport, MaxOuterExceeded, NoFeasiblePoint
from .model_core import ProblemInstance, SolverConfig, eval_objective
from .subproblem_x import assemble_xstep, solve_xstep
from .subproblem_yz import sparsify_top_k


@dataclass(frozen=True)
class FeasiblePoint:
    x_feas: np.ndarray
    volatility: float
    attempts_used: int


@dataclass(frozen=True)
class KktReport:
    stationarity_residual: float
    complementarity_residual: float
    norm_gap: float
    support: tuple
    lam: float
    mu: float
    w: np.ndarray
    robinson_ok: bool
    robinson_condition_number: float
    grad_norm: float


@dataclass(frozen=True)
class OuterRecord:
    outer: int
    rho: float
    gap_inf: float        # ||x-y||_inf + ||x-z||_inf
    gap_x_y: float        # ||x-y||_2
    gap_x_z: float        # ||x-z||_2
    q_rho: float
    inner_iterations: int
    inner_converged: bool
    safeguard_reset: bool


@dataclass
class SolveReport:
    portfolio: np.ndarray  # final y: exactly unit-norm and k-sparse
    raw_x: np.ndarray
    raw_z: np.ndarray
    objective: float
    outer_iterations: int
    rho_final: float
    upsilon: float
    converged: bool
    kkt: KktReport
    trace: list = field(default_factory=list)  # OuterRecord per level


def find_feasible(A0: np.ndarray, k: int, phi: float, max_attempts: int = 50,
                  seed: int = 0) -> FeasiblePoint:
    """Find a unit-norm k-sparse x with x'A_0 x >= phi by the truncated power
    method from random unit starts."""
    A0 = np.asarray(A0, dtype=float)
    n = A0.shape[0]
    lam_max = float(np.linalg.eigvalsh(A0)[-1])
    if phi > lam_max:
        raise NoFeasiblePoint(
            f"phi={phi:.6g} exceeds lambda_max(A_0)={lam_max:.6g}; no unit "
            f"vector can satisfy the volatility constraint")
    rng = np.random.default_rng(seed)
    best_vol = -np.inf
    for attempt in range(1, max_attempts + 1):
        x = rng.standard_normal(n)
        x /= np.linalg.norm(x)
        for _ in range(1000):
            x_new = sparsify_top_k(A0 @ x, k)[0]
            if np.max(np.abs(x_new - x)) <= 1e-10:
                x = x_new
                break
            x = x_new
        vol = float(x @ A0 @ x)
        best_vol = max(best_vol, vol)
        if vol >= phi:
            return FeasiblePoint(x_feas=x, volatility=vol, attempts_used=attempt)
    raise NoFeasiblePoint(
        f"no k-sparse unit vector with volatility >= {phi:.6g} found in "
        f"{max_attempts} attempts (best found: {best_vol:.6g}); phi may be too "
        f"large for sparsity k={k}")


def _power_fixed_point(A0: np.ndarray, x: np.ndarray, k: int) -> np.ndarray:
    x = x / np.linalg.norm(x)
    for _ in range(1000):
        x_new = sparsify_top_k(A0 @ x, k)[0]
        if np.max(np.abs(x_new - x)) <= 1e-10:
            return x_new
        x = x_new
    return x


def _start_pool(inst: ProblemInstance, seed: int, limit: int):
    """Feasible anchor plus up to ``limit`` k-sparse unit warm starts with
    distinct supports: truncated-power-method fixed points (feasible, lowest
    objective first) and sparsified bottom eigenvectors of the curvature
    proxy alpha A_1 + 2 gamma sum_i A_i (warm starts need not be feasible)."""
    feas = find_feasible(inst.autocov[0], inst.k, inst.phi, seed=seed)
    A0 = inst.autocov[0]
    rng = np.random.default_rng(seed)
    candidates = [feas.x_feas]
    starts = list(np.eye(inst.n)) + [rng.standard_normal(inst.n)
                                     for _ in range(inst.n)]
    for x0 in starts:
        x = _power_fixed_point(A0, x0, inst.k)
        if float(x @ A0 @ x) >= inst.phi:
            candidates.append(x)
    candidates.sort(key=lambda x: eval_objective(inst, x))
    pool, seen = [], set()

    def add(x):
        supp = tuple(np.flatnonzero(x).tolist())
        if supp not in seen:
            seen.add(supp)
            pool.append(x)

    for x in candidates:
        add(x)
        if len(pool) >= limit:
            break
    Q = inst.alpha * inst.autocov[1]
    for i in range(2, inst.q + 1):
        Q = Q + 2.0 * inst.gamma * inst.autocov[i]
    _, vecs = np.linalg.eigh(Q)
    for j in range(min(3, inst.n)):
        add(sparsify_top_k(vecs[:, j], inst.k)[0])
    return feas.x_feas, pool


def compute_upsilon(inst: ProblemInstance, x_feas: np.ndarray, rho0: float,
                    y0: np.ndarray, z0: np.ndarray, margin: float = 0.0) -> float:
    """Cap for the safeguard: (1+margin) * max{f(x_feas), min_x q_rho0(x, y0, z0)}."""
    if rho0 <= 0:
        raise BadParam("rho0 must be > 0")
    sys0 = assemble_xstep(inst, y0, z0, rho0)
    qmin = solve_xstep(sys0).objective + sys0.const
    return (1.0 + margin) * max(eval_objective(inst, x_feas), qmin)


def default_rho0(inst: ProblemInstance) -> float:
    """max(1, 1.1 * |lambda_max(A_0) - alpha * lambda_min(A_1)|); clears the
    nonconvex-mode bound so the same default serves both regimes."""
    return max(1.0, 1.1 * nonconvex_rho_bound(inst))


def nonconvex_rho_bound(inst: ProblemInstance) -> float:
    lam_max0 = float(np.linalg.eigvalsh(inst.autocov[0])[-1])
    lam_min1 = float(np.linalg.eigvalsh(inst.autocov[1])[0])
    return abs(lam_max0 - inst.alpha * lam_min1)


def _polish_support(inst: ProblemInstance, y: np.ndarray, support) -> np.ndarray:
    """Local refinement on the fixed support: sharpen y against the
    sphere-and-volatility constraints so the certificate holds tightly.
    Returns y unchanged if the refinement fails or does not improve."""
    import scipy.optimize

    support = list(support)
    A = inst.autocov

    def lift(u):
        x = np.zeros(inst.n)
        x[support] = u
        return x

    def f(u):
        return eval_objective(inst, lift(u))

    cons = [
        {"type": "eq", "fun": lambda u: float(u @ u) - 1.0},
        {"type": "ineq",
         "fun": lambda u: float(lift(u) @ A[0] @ lift(u)) - inst.phi},
    ]
    res = scipy.optimize.minimize(f, y[support], method="SLSQP",
                                  constraints=cons,
                                  options={"maxiter": 200, "ftol": 1e-14})
    if not res.success:
        return y
    u = res.x / np.linalg.norm(res.x)
    cand = lift(u)
    vol_ok = float(cand @ A[0] @ cand) >= inst.phi - 1e-10 * (1 + inst.phi)
    if vol_ok and eval_objective(inst, cand) <= eval_objective(inst, y) + 1e-12:
        return cand
    return y


def kkt_certify(inst: ProblemInstance, x: np.ndarray, support,
                tol: float = 1e-8) -> KktReport:
    """Fit multipliers (lam, mu) on the support and report first-order residuals.

    Stationarity: (alpha A_1 + 2 gamma sum_i (x'A_i x) A_i) x - lam A_0 x
    + mu x + w = 0 with w zero on the support. lam is clamped to >= 0 and set
    to 0 when the volatility constraint is inactive.
    """
    x = np.asarray(x, dtype=float)
    support = np.asarray(sorted(support), dtype=int)
    off = np.setdiff1d(np.arange(inst.n), support)
    if np.any(x[off] != 0.0):
        raise BadSupport("x is nonzero off the declared support")
    A = inst.autocov
    g = inst.alpha * (A[1] @ x)
    for i in range(2, inst.q + 1):
        g = g + (2.0 * inst.gamma * float(x @ A[i] @ x)) * (A[i] @ x)
    a0x = A[0] @ x
    vol_gap = float(x @ a0x) - inst.phi

    gs = g[support]
    cols = np.column_stack([a0x[support], -x[support]])
    inactive = vol_gap > tol

    def mu_only():
        # stationarity on the support reduces to g + mu x = 0
        return -float(x[support] @ gs) / float(x[support] @ x[support])

    if inactive:
        lam, mu = 0.0, mu_only()
    else:
        sol, *_ = np.linalg.lstsq(cols, gs, rcond=None)
        lam, mu = float(sol[0]), float(sol[1])
        if lam < 0.0:
            lam, mu = 0.0, mu_only()
    resid_on = gs - lam * a0x[support] + mu * x[support]
    w = np.zeros(inst.n)
    w[off] = -(g[off] - lam * a0x[off] + mu * x[off])

    # Robinson's condition: automatic when the volatility constraint is slack;
    # in the active case it needs {(A_0 x)_L, x_L} linearly independent.
    sv = np.linalg.svd(np.column_stack([a0x[support], x[support]]), compute_uv=False)
    sv_min = float(sv[-1]) if sv.shape[0] == 2 else 0.0
    robinson_ok = True if inactive else sv_min > tol
    cond = float(sv[0] / sv_min) if sv_min > 0 else np.inf
    return KktReport(
        stationarity_residual=float(np.linalg.norm(resid_on)),
        complementarity_residual=abs(lam * vol_gap),
        norm_gap=abs(float(np.linalg.norm(x)) - 1.0),
        support=tuple(int(i) for i in support),
        lam=lam, mu=mu, w=w,
        robinson_ok=robinson_ok,
        robinson_condition_number=cond,
        grad_norm=float(np.linalg.norm(g)),
    )


def ppc_solve(inst: ProblemInstance, cfg: SolverConfig | None = None,
              seed: int = 0, nonconvex: bool = False,
              check_gap_law: bool = False) -> SolveReport:
    """Run the penalty continuation loop; returns the certified final point.

    ``nonconvex`` enforces the starting-penalty bound
    rho0 > |lambda_max(A_0) - alpha lambda_min(A_1)| required when the
    objective is not convex. ``check_gap_law`` asserts the outer-gap bound
    ||x - y|| <= sqrt(Upsilon / rho) at every level.

    The continuation is run from up to ``cfg.restarts`` warm starts with
    distinct supports, each over a ladder of starting penalties (a single
    rung when ``cfg.rho0`` is set); the report with the lowest objective is
    returned.
    """
    cfg = cfg or SolverConfig()
    base = default_rho0(inst)
    if cfg.rho0 is not None:
        ladder = [cfg.rho0]
    elif nonconvex:
        ladder = [base]  # smaller rungs would violate the starting bound
    else:
        ladder = [base * s for s in (1e-3, 1e-2, 1e-1, 1.0)]
    if nonconvex:
        bound = nonconvex_rho_bound(inst)
        if min(ladder) <= bound:
            raise BadParam(
                f"nonconvex mode requires rho0 > |lambda_max(A_0) - "
                f"alpha*lambda_min(A_1)| = {bound:.6g}; got rho0 = "
                f"{min(ladder):.6g}")

    x_feas, pool = _start_pool(inst, seed, cfg.restarts)
    best = None
    for rho0 in ladder:
        for y0 in pool:
            rep = _ppc_single(inst, cfg, rho0, x_feas, y0, check_gap_law)
            if best is None or rep.objective < best.objective:
                best = rep
    return best


def _ppc_single(inst: ProblemInstance, cfg: SolverConfig, rho: float,
                x_feas: np.ndarray, y0: np.ndarray,
                check_gap_law: bool) -> SolveReport:
    y_warm = y0.copy()
    z_warm = y0.copy()  # ||z0|| <= 1 holds: y0 is unit-norm
    upsilon = compute_upsilon(inst, x_feas, rho, y_warm, z_warm,
                              margin=cfg.upsilon_margin)

    trace = []
    converged = False
    reset = False
    point = None
    for j in range(cfg.max_outer):
        res: BcdResult = bcd_solve(inst, rho, y_warm, z_warm,
                                   eps_inner=cfg.eps_inner,
                                   max_inner=cfg.max_inner,
                                   xstep_tol=cfg.bisect_tol)
        point = res.point
        x, y, z = point.x, point.y, point.z
        gap_inf = float(np.max(np.abs(x - y)) + np.max(np.abs(x - z)))
        gap_xy = float(np.linalg.norm(x - y))
        gap_xz = float(np.linalg.norm(x - z))
        trace.append(OuterRecord(
            outer=j, rho=rho, gap_inf=gap_inf, gap_x_y=gap_xy, gap_x_z=gap_xz,
            q_rho=res.trace.records[-1].q_after_z,
            inner_iterations=res.iterations, inner_converged=res.converged,
            safeguard_reset=reset))
        if check_gap_law and max(gap_xy, gap_xz) > np.sqrt(upsilon / rho) + 1e-8:
            raise AssertionError(
                f"outer-gap law violated at level {j}: gap {max(gap_xy, gap_xz):.3e} "
                f"> sqrt(Upsilon/rho) = {np.sqrt(upsilon / rho):.3e}")
        if gap_inf <= cfg.eps_outer:
            converged = True
            break
        rho_next = cfg.growth_r * rho
        sys_next = assemble_xstep(inst, y, z, rho_next)
        qmin_next = solve_xstep(sys_next, tol=cfg.bisect_tol).objective + sys_next.const
        reset = qmin_next > upsilon
        if reset:
            y_warm, z_warm = x_feas.copy(), x_feas.copy()
        else:
            y_warm, z_warm = y, z
        rho = rho_next

    y_final, support = sparsify_top_k(point.y, inst.k)
    y_final = _polish_support(inst, y_final, support)
    kkt = kkt_certify(inst, y_final, support, tol=max(cfg.eps_outer * 1e-3, 1e-10))
    report = SolveReport(
        portfolio=y_final, raw_x=point.x, raw_z=point.z,
        objective=eval_objective(inst, y_final),
        outer_iterations=len(trace), rho_final=rho, upsilon=upsilon,
        converged=converged, kkt=kkt, trace=trace)
    return report
