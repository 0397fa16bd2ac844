"""Numerical laboratory: SDE solvers, Monte Carlo estimators, variance integrals."""

from .montecarlo import (ConditionalPoint, ConditionalResult, McEstimate, mc_p0,
                         mc_pt_conditional, nadaraya_watson, silverman_bandwidth)
from .solvers import (LampertiMap, SdeProblem, chain_rule_residual, doss_sussmann_solve,
                      euler_young, euler_young_solve, lamperti_map)
from .variance import (VarianceBounds, VarianceRow, r_fn, sigma_h_sq, var_zh, var_zh_bounds,
                       variance_scan)

__all__ = [
    "ConditionalPoint", "ConditionalResult", "LampertiMap", "McEstimate", "SdeProblem",
    "VarianceBounds", "VarianceRow", "chain_rule_residual", "doss_sussmann_solve",
    "euler_young", "euler_young_solve", "lamperti_map", "mc_p0", "mc_pt_conditional",
    "nadaraya_watson", "r_fn", "sigma_h_sq", "silverman_bandwidth", "var_zh",
    "var_zh_bounds", "variance_scan",
]
