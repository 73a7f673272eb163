"""Sparse, volatile, mean-reverting portfolio construction via a penalty
decomposition method with block coordinate descent, plus estimation and a
band-trading backtest harness."""

from .bcd import BcdResult, bcd_solve, check_monotone
from .estimation import (PriceMatrix, autocov, build_autocov_set, log_returns,
                         make_psd, read_price_csv, synth_var1)
from .model_core import (AutocovSet, ProblemInstance, ProxyKind, SolverConfig,
                         TriplePoint, build_instance, eval_objective, eval_qrho)
from .ppc import (FeasiblePoint, KktReport, SolveReport, compute_upsilon,
                  find_feasible, kkt_certify, ppc_solve)
from .subproblem_x import XStepResult, XStepSystem, assemble_xstep, min_gen_eig, solve_xstep
from .subproblem_yz import solve_ystep, solve_zstep, sparsify_top_k

__version__ = "0.1.0"
