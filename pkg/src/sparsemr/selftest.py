"""Built-in oracle checks, runnable without pytest via `sparsemr selftest`."""

import numpy as np

from .backtest import SpreadSeries, cumulative_pnl, dickey_fuller, simulate
from .bcd import bcd_solve, check_monotone
from .estimation import build_autocov_set, synth_var1
from .model_core import ProxyKind, build_instance
from .ppc import find_feasible, ppc_solve
from .subproblem_x import XStepSystem, solve_xstep
from .subproblem_yz import solve_ystep


def polar_grid_min(H, b, A0, phi, n_angles=2000, n_radii=2000):
    """Brute-force minimum of x'Hx - 2b'x over {x'A0x >= phi} for n=2.

    Radii are scaled off the constraint-boundary ellipse per angle, so the
    annulus brackets the boundary exactly. Independent of the dual solver.
    """
    th = np.linspace(0, 2 * np.pi, n_angles, endpoint=False)
    U = np.stack([np.cos(th), np.sin(th)])
    quad_a = np.einsum("ij,ik,jk->k", A0, U, U)
    r_edge = np.sqrt(phi / quad_a)
    xu = np.linalg.solve(H, b)
    s_max = max(2.0, 1.5 * np.linalg.norm(xu) / r_edge.min())
    s = np.linspace(1.0, s_max, n_radii)[:, None]
    R = s * r_edge[None, :]
    X, Y = R * U[0][None, :], R * U[1][None, :]
    obj = (H[0, 0] * X**2 + 2 * H[0, 1] * X * Y + H[1, 1] * Y**2
           - 2 * (b[0] * X + b[1] * Y))
    gmin = float(obj.min())
    if xu @ A0 @ xu >= phi:
        gmin = min(gmin, float(xu @ H @ xu - 2 * b @ xu))
    return gmin


def _random_instance(rng, n=6, q=3, proxy=ProxyKind.CROSSING_STATS):
    G = rng.standard_normal((n, n))
    A0 = G @ G.T / n + 0.2 * np.eye(n)
    mats = [A0]
    for _ in range(q):
        W = rng.standard_normal((n, 2))
        mats.append(W @ W.T / n)
    from .model_core import AutocovSet
    aset = AutocovSet(tuple(mats))
    phi = 0.3 * float(np.median(np.diag(A0)))
    return build_instance(aset, proxy, 0.001, phi, k=max(1, n // 2))


def run_selftest(echo=print) -> bool:
    ok = True

    def check(name, cond):
        nonlocal ok
        echo(f"[{'PASS' if cond else 'FAIL'}] {name}")
        ok = ok and bool(cond)

    rng = np.random.default_rng(7)

    # x-step vs dense polar grid (n=2)
    worst = 0.0
    for _ in range(10):
        G = rng.standard_normal((2, 2))
        A0 = G @ G.T + 0.5 * np.eye(2)
        H = np.diag(rng.uniform(0.5, 3.0, 2)) + 2.0 * np.eye(2)
        b = rng.standard_normal(2)
        phi = float(rng.uniform(0.5, 3.0))
        res = solve_xstep(XStepSystem(H=H, b=b, A0=A0, phi=phi))
        gmin = polar_grid_min(H, b, A0, phi, n_angles=800, n_radii=800)
        worst = max(worst, abs(res.objective - gmin) / (1 + abs(gmin)))
    check(f"x-step matches polar grid (worst rel err {worst:.2e})", worst < 1e-3)

    # y-step brute-force optimality on random supports
    x = rng.standard_normal(5)
    y = solve_ystep(x, 2)
    best = min(np.linalg.norm(x - w) for w in
               (_unit_on_support(rng, 5, 2) for _ in range(3000)))
    check("y-step beats random sparse unit vectors", np.linalg.norm(x - y) <= best + 1e-9)

    # BCD monotone on a random instance
    inst = _random_instance(rng)
    y0 = find_feasible(inst.autocov[0], inst.k, inst.phi, seed=1).x_feas
    res = bcd_solve(inst, rho=2.0, y0=y0, z0=y0)
    check("BCD q_rho chain is non-increasing", check_monotone(res.trace))

    # PPC end-to-end on a synthetic basket
    series = synth_var1(5, 1500, 0.4, 1.0, seed=3)
    aset = build_autocov_set(series, q=3)
    inst2 = build_instance(aset, ProxyKind.CROSSING_STATS, 0.001,
                           0.3 * float(np.median(np.diag(aset[0]))), k=3)
    rep = ppc_solve(inst2, seed=0)
    check("PPC converged with unit-norm k-sparse portfolio",
          rep.converged and abs(np.linalg.norm(rep.portfolio) - 1) < 1e-10
          and np.count_nonzero(rep.portfolio) <= 3)

    # backtest hand fixtures
    log = simulate(SpreadSeries.from_values([0.0, 2.0, 0.0], sd=1.0), 1.0, 0.0)
    check("band-rule fixture P&L == 2", abs(cumulative_pnl(log) - 2.0) < 1e-12)
    check("Dickey-Fuller fixture == -2",
          abs(dickey_fuller([1.0, 0.0, 1.0, 0.0]) + 2.0) < 1e-12)
    return ok


def _unit_on_support(rng, n, k):
    idx = rng.choice(n, size=k, replace=False)
    w = np.zeros(n)
    w[idx] = rng.standard_normal(k)
    return w / np.linalg.norm(w)
