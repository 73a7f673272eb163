"""Block coordinate descent on the penalty subproblem at fixed rho.

Blocks are visited in the fixed order x, y, z. The inner loop stops when the
relative infinity-norm move of every block drops below ``eps_inner``:

    max_b ||b_l - b_{l-1}||_inf / max(||b_l||_inf, 1) <= eps_inner.

Each iteration records the three chain values

    q(x+, y, z) >= q(x+, y+, z) >= q(x+, y+, z+)

so monotonicity can be checked link by link, not just end to end.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParam
from .model_core import ProblemInstance, TriplePoint, eval_qrho
from .subproblem_x import assemble_xstep, solve_xstep
from .subproblem_yz import solve_ystep, solve_zstep


@dataclass(frozen=True)
class BcdIterRecord:
    iteration: int
    q_after_x: float
    q_after_y: float
    q_after_z: float
    move_x: float
    move_y: float
    move_z: float
    lam: float
    active: bool
    branch: str
    max_norm: float  # max of ||x||, ||y||, ||z|| after the iteration


@dataclass
class BcdTrace:
    q_start: float
    records: list = field(default_factory=list)

    def q_values(self) -> np.ndarray:
        """Flattened chain of q_rho values: start, then (x, y, z) per iteration."""
        vals = [self.q_start]
        for r in self.records:
            vals.extend([r.q_after_x, r.q_after_y, r.q_after_z])
        return np.asarray(vals)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "q_rho", "move_x", "move_y", "move_z",
                        "lambda", "active", "branch"])
            for r in self.records:
                w.writerow([r.iteration, f"{r.q_after_z:.17g}", f"{r.move_x:.17g}",
                            f"{r.move_y:.17g}", f"{r.move_z:.17g}", f"{r.lam:.17g}",
                            int(r.active), r.branch])


@dataclass(frozen=True)
class BcdResult:
    point: TriplePoint
    trace: BcdTrace
    converged: bool
    iterations: int


def _rel_move(new: np.ndarray, old: np.ndarray) -> float:
    return float(np.max(np.abs(new - old)) / max(np.max(np.abs(new)), 1.0))


def bcd_solve(inst: ProblemInstance, rho: float, y0: np.ndarray, z0: np.ndarray,
              eps_inner: float = 1e-3, max_inner: int = 500,
              xstep_tol: float = 1e-10) -> BcdResult:
    """Run the block coordinate descent loop from (y0, z0) at penalty rho."""
    if eps_inner <= 0:
        raise BadParam("eps_inner must be > 0")
    y = np.asarray(y0, dtype=float).copy()
    z = np.asarray(z0, dtype=float).copy()
    nrm = np.linalg.norm(y)
    if abs(nrm - 1.0) > 1e-8 or np.count_nonzero(y) > inst.k:
        raise BadParam("y0 must be unit-norm with at most k nonzeros")

    x = y.copy()  # placeholder; overwritten by the first x-step
    trace = BcdTrace(q_start=eval_qrho(inst, TriplePoint(x, y, z), rho))
    converged = False
    it = 0
    while it < max_inner:
        it += 1
        x_prev, y_prev, z_prev = x, y, z

        xres = solve_xstep(assemble_xstep(inst, y, z, rho), tol=xstep_tol)
        x = xres.x
        q_x = eval_qrho(inst, TriplePoint(x, y, z), rho)

        y = solve_ystep(x, inst.k)
        q_y = eval_qrho(inst, TriplePoint(x, y, z), rho)

        z = solve_zstep(inst, x, rho)
        q_z = eval_qrho(inst, TriplePoint(x, y, z), rho)

        mx, my, mz = _rel_move(x, x_prev), _rel_move(y, y_prev), _rel_move(z, z_prev)
        trace.records.append(BcdIterRecord(
            iteration=it, q_after_x=q_x, q_after_y=q_y, q_after_z=q_z,
            move_x=mx, move_y=my, move_z=mz,
            lam=xres.lam, active=xres.active, branch=xres.branch,
            max_norm=max(np.linalg.norm(x), np.linalg.norm(y),
                         np.linalg.norm(z))))

        if max(mx, my, mz) <= eps_inner:
            converged = True
            break
    return BcdResult(point=TriplePoint(x, y, z), trace=trace,
                     converged=converged, iterations=it)


def check_monotone(trace: BcdTrace, tol: float = 1e-8) -> bool:
    """True iff the full q_rho chain never increases by more than tol*(1+|value|)."""
    vals = trace.q_values()
    if vals.size == 0:
        return True
    prev = vals[:-1]
    return bool(np.all(vals[1:] <= prev + tol * (1.0 + np.abs(prev))))


def iterate_bound(inst: ProblemInstance) -> float:
    """Explicit bound on every BCD iterate: max{sqrt(phi/lambda_min(A_0)), 1}."""
    lam_min = float(np.linalg.eigvalsh(inst.autocov[0])[0])
    return max(float(np.sqrt(inst.phi / lam_min)), 1.0)
