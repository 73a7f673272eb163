from .core import (SdpBaselineError, SdpSolution, SolverFailure, ZeroVector,
                   extract_sparse_component, portfolio_objective,
                   proxy_weights, solve_sdp_p)

__all__ = [
    "SdpBaselineError", "SdpSolution", "SolverFailure", "ZeroVector",
    "extract_sparse_component", "portfolio_objective", "proxy_weights",
    "solve_sdp_p",
]
