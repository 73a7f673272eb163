import numpy as np
import pytest

from sparsemr.bcd import (BcdIterRecord, BcdTrace, bcd_solve, check_monotone,
                          iterate_bound)
from sparsemr.model_core import AutocovSet, ProxyKind, build_instance
from sparsemr.ppc import find_feasible

from oracles import random_instance


def _scalar_instance(c):
    aset = AutocovSet((np.array([[1.0]]), np.array([[c]]), np.array([[0.0]])))
    return build_instance(aset, ProxyKind.PREDICTABILITY, 0.0, 1.0, 1)


def test_one_dim_instance_agrees():
    # feasible set is {-1, +1}; penalty forces x = y = z = +/- 1, q_rho = c
    c = 0.7
    inst = _scalar_instance(c)
    for y0 in (np.array([1.0]), np.array([-1.0])):
        res = bcd_solve(inst, rho=5.0, y0=y0, z0=y0, eps_inner=1e-10)
        x, y, z = res.point.x, res.point.y, res.point.z
        np.testing.assert_allclose(x, y0, atol=1e-6)
        np.testing.assert_allclose(y, y0, atol=1e-6)
        np.testing.assert_allclose(z, y0, atol=1e-6)
        assert res.trace.records[-1].q_after_z == pytest.approx(c, abs=1e-6)


def test_fixed_point_converges_in_one_iteration():
    inst = _scalar_instance(0.5)
    y0 = np.array([1.0])
    res = bcd_solve(inst, rho=5.0, y0=y0, z0=y0, eps_inner=1e-8)
    assert res.converged and res.iterations == 1
    r = res.trace.records[0]
    assert max(r.move_x, r.move_y, r.move_z) <= 1e-8


def test_y0_validation():
    inst = _scalar_instance(0.5)
    with pytest.raises(Exception):
        bcd_solve(inst, rho=1.0, y0=np.array([2.0]), z0=np.array([0.0]))


def test_chain_inequality_all_links():
    rng = np.random.default_rng(0)
    tol = 1e-8
    for seed in range(20):
        inst = random_instance(np.random.default_rng(seed), n=int(rng.integers(3, 9)))
        y0 = find_feasible(inst.autocov[0], inst.k, inst.phi, seed=seed).x_feas
        res = bcd_solve(inst, rho=1.5, y0=y0, z0=y0)
        vals = res.trace.q_values()
        assert np.all(vals[1:] <= vals[:-1] + tol * (1 + np.abs(vals[:-1])))
        assert check_monotone(res.trace, tol)


def test_iterate_norm_bound():
    # every iterate obeys max{||x||,||y||,||z||} <= max{sqrt(phi/lmin(A0)), 1}
    for seed in range(10):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, n=6)
        bound = iterate_bound(inst) + 1e-8
        y0 = find_feasible(inst.autocov[0], inst.k, inst.phi, seed=seed).x_feas
        y, z = y0.copy(), y0.copy()
        from sparsemr.subproblem_x import assemble_xstep, solve_xstep
        from sparsemr.subproblem_yz import solve_ystep, solve_zstep
        for _ in range(15):
            x = solve_xstep(assemble_xstep(inst, y, z, 2.0)).x
            y = solve_ystep(x, inst.k)
            z = solve_zstep(inst, x, 2.0)
            assert max(np.linalg.norm(v) for v in (x, y, z)) <= bound


def test_plateau_implies_saddle():
    # when q_rho plateaus, re-solving each block must not improve it
    from sparsemr.model_core import TriplePoint, eval_qrho
    from sparsemr.subproblem_x import assemble_xstep, solve_xstep
    from sparsemr.subproblem_yz import solve_ystep, solve_zstep

    rng = np.random.default_rng(42)
    inst = random_instance(rng, n=5)
    y0 = find_feasible(inst.autocov[0], inst.k, inst.phi, seed=0).x_feas
    res = bcd_solve(inst, rho=2.0, y0=y0, z0=y0, eps_inner=1e-12, max_inner=300)
    vals = [r.q_after_z for r in res.trace.records]
    plateaus = [i for i in range(1, len(vals))
                if abs(vals[i] - vals[i - 1]) <= 1e-12 * (1 + abs(vals[i - 1]))]
    if plateaus:
        p = res.point
        q0 = eval_qrho(inst, p, 2.0)
        sysx = assemble_xstep(inst, p.y, p.z, 2.0)
        qx = eval_qrho(inst, TriplePoint(solve_xstep(sysx).x, p.y, p.z), 2.0)
        qy = eval_qrho(inst, TriplePoint(p.x, solve_ystep(p.x, inst.k), p.z), 2.0)
        qz = eval_qrho(inst, TriplePoint(p.x, p.y, solve_zstep(inst, p.x, 2.0)), 2.0)
        for q_new in (qx, qy, qz):
            assert q0 - q_new <= 1e-10 * (1 + abs(q0))


def test_check_monotone_edge_cases():
    t = BcdTrace(q_start=5.0)
    assert check_monotone(t)
    t.records.append(BcdIterRecord(1, 4.0, 3.0, 2.0, 0, 0, 0, 0.0, False, "interior", 1.0))
    assert check_monotone(t)
    t.records.append(BcdIterRecord(2, 3.0, 2.5, 2.4, 0, 0, 0, 0.0, False, "interior", 1.0))
    assert not check_monotone(t)  # 2.0 -> 3.0 increase


def test_trace_csv(tmp_path):
    inst = _scalar_instance(0.5)
    res = bcd_solve(inst, rho=2.0, y0=np.array([1.0]), z0=np.array([0.5]))
    path = tmp_path / "trace.csv"
    res.trace.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("iteration,q_rho,move_x")
    assert len(lines) == len(res.trace.records) + 1
