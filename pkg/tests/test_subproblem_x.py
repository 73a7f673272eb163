import numpy as np
import pytest

from sparsemr.errors import A0NotPD, DimensionMismatch
from sparsemr.model_core import ProxyKind, build_instance
from sparsemr.subproblem_x import (XStepSystem, assemble_xstep, min_gen_eig,
                                   solve_xstep)

from oracles import hard_case_system, polar_grid_min, random_autocov_set


def kkt_ok(sys, res, tol=1e-8):
    stat = np.linalg.norm((sys.H - res.lam * sys.A0) @ res.x - sys.b)
    vol_gap = float(res.x @ sys.A0 @ res.x) - sys.phi
    return (stat <= tol * (1 + np.linalg.norm(sys.b))
            and res.lam >= 0
            and vol_gap >= -tol * max(sys.phi, 1.0)
            and res.lam * vol_gap <= tol * (1 + abs(vol_gap)))


def test_assemble_hand_values():
    aset_1d = _scalar_set(1.0, 3.0, 0.0)
    inst = build_instance(aset_1d, ProxyKind.PREDICTABILITY, 0.0, 0.1, 1)
    sys = assemble_xstep(inst, np.array([1.0]), np.array([1.0]), rho=2.0)
    assert sys.H[0, 0] == pytest.approx(7.0)
    assert sys.b[0] == pytest.approx(4.0)


def _scalar_set(a0, a1, a2):
    from sparsemr.model_core import AutocovSet
    return AutocovSet((np.array([[a0]]), np.array([[a1]]), np.array([[a2]])))


def test_assemble_penalty_only():
    rng = np.random.default_rng(0)
    aset = random_autocov_set(rng, 3)
    inst = build_instance(aset, ProxyKind.PORTMANTEAU, 1.0, 0.1, 2)
    y, z = rng.standard_normal(3), np.zeros(3)
    sys = assemble_xstep(inst, y, z, rho=1.0)
    # z = 0 makes all z-weighted terms vanish; alpha = 0 kills A_1
    np.testing.assert_allclose(sys.H, 2.0 * np.eye(3), atol=1e-14)
    np.testing.assert_allclose(sys.b, y)


def test_assemble_dimension_check():
    rng = np.random.default_rng(0)
    inst = build_instance(random_autocov_set(rng, 3), ProxyKind.PREDICTABILITY,
                          0.0, 0.1, 2)
    with pytest.raises(DimensionMismatch):
        assemble_xstep(inst, np.zeros(2), np.zeros(3), 1.0)


def test_min_gen_eig_hand_values():
    assert min_gen_eig(3.0 * np.eye(4), np.eye(4)) == pytest.approx(3.0)
    assert min_gen_eig(np.diag([1.0, 5.0]), np.eye(2)) == pytest.approx(1.0)
    assert min_gen_eig(np.diag([4.0, 12.0]), np.diag([2.0, 3.0])) == pytest.approx(2.0)
    with pytest.raises(A0NotPD):
        min_gen_eig(np.eye(2), -np.eye(2))


def test_solve_xstep_interior():
    sys = XStepSystem(H=2.0 * np.eye(2), b=np.array([2.0, 0.0]), A0=np.eye(2), phi=0.5)
    res = solve_xstep(sys)
    np.testing.assert_allclose(res.x, [1.0, 0.0], atol=1e-12)
    assert res.lam == 0.0 and res.branch == "interior"


def test_solve_xstep_active_hand_kkt():
    sys = XStepSystem(H=2.0 * np.eye(2), b=np.array([2.0, 0.0]), A0=np.eye(2), phi=4.0)
    res = solve_xstep(sys, tol=1e-12)
    np.testing.assert_allclose(res.x, [2.0, 0.0], atol=1e-6)
    assert res.lam == pytest.approx(1.0, abs=1e-6)
    assert kkt_ok(sys, res)


def test_solve_xstep_matches_grid_oracle():
    rng = np.random.default_rng(11)
    for _ in range(25):
        G = rng.standard_normal((2, 2))
        A0 = G @ G.T + 0.3 * np.eye(2)
        H = make_random_h(rng)
        b = rng.standard_normal(2)
        phi = float(rng.uniform(0.3, 3.0))
        sys = XStepSystem(H=H, b=b, A0=A0, phi=phi)
        res = solve_xstep(sys)
        gmin = polar_grid_min(H, b, A0, phi)
        assert abs(res.objective - gmin) <= 1e-4 * (1 + abs(gmin))
        assert kkt_ok(sys, res)


def make_random_h(rng):
    W = rng.standard_normal((2, 2))
    return W @ W.T + 1.0 * np.eye(2)


def test_hard_case():
    rng = np.random.default_rng(5)
    for _ in range(10):
        sys = hard_case_system(rng)
        res = solve_xstep(sys)
        assert res.branch == "hard"
        assert float(res.x @ sys.A0 @ res.x) == pytest.approx(sys.phi, rel=1e-8)
        gmin = polar_grid_min(sys.H, sys.b, sys.A0, sys.phi)
        assert abs(res.objective - gmin) <= 1e-4 * (1 + abs(gmin))
        # global optimality certificate: H - lambda A0 >= 0 at the returned lambda
        w = np.linalg.eigvalsh(sys.H - res.lam * sys.A0)
        assert w[0] >= -1e-8


def test_dual_certificate_and_secular_monotonicity():
    rng = np.random.default_rng(7)
    for _ in range(10):
        G = rng.standard_normal((3, 3))
        A0 = G @ G.T + 0.3 * np.eye(3)
        W = rng.standard_normal((3, 3))
        H = W @ W.T + 1.0 * np.eye(3)
        b = rng.standard_normal(3)
        sys = XStepSystem(H=H, b=b, A0=A0, phi=2.0)
        res = solve_xstep(sys)
        w = np.linalg.eigvalsh(H - res.lam * A0)
        assert w[0] >= -1e-8

        lam_bar = min_gen_eig(H, A0)
        lams = np.linspace(0.0, lam_bar * 0.999, 40)
        g = [float(np.linalg.solve(H - l * A0, b) @ A0 @ np.linalg.solve(H - l * A0, b))
             for l in lams]
        assert np.all(np.diff(g) >= -1e-9 * (1 + np.abs(g[:-1])))


def test_global_vs_random_feasible_points():
    rng = np.random.default_rng(13)
    for _ in range(5):
        n = int(rng.integers(2, 4))
        G = rng.standard_normal((n, n))
        A0 = G @ G.T + 0.3 * np.eye(n)
        W = rng.standard_normal((n, n))
        H = W @ W.T + 1.0 * np.eye(n)
        b = rng.standard_normal(n)
        phi = 1.0
        res = solve_xstep(XStepSystem(H=H, b=b, A0=A0, phi=phi))
        pts = rng.standard_normal((100_000, n)) * 2.0
        vols = np.einsum("ij,jk,ik->i", pts, A0, pts)
        feas = pts[vols >= phi]
        objs = np.einsum("ij,jk,ik->i", feas, H, feas) - 2.0 * feas @ b
        assert res.objective <= objs.min() + 1e-8
