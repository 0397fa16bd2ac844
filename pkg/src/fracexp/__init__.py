"""Small-time expansions for SDEs driven by fractional Brownian motion (H > 1/2).

Words indexing iterated integrals are strings over {"0", "1"} read
innermost-first: "01" is ∫_0^1 ∫_0^{t_2} dt_1 dB_{t_2}, with "0" standing for
dt and "1" for dB.
"""

from .coefficients import CoeffResult, c_coefficient_analytic, c_coefficient_mc, c_coefficients_mc
from .errors import (DomainError, ExprDomainError, ExprSyntaxError, FracExpError, NumericalError,
                     ResourceError)
from .expansion import (ExponentPair, FractionalSeries, Term, TermList, cond_expand_driftless,
                        evaluate_truncation, expand_p0, exponent_set, merge_collisions)
from .fbm import (FbmPath, TimeGrid, c_h_const, covariance, increment_cov, kernel_k,
                  sample_fbm, sample_fbm_array)
from .gaussian import wick_moment

__all__ = [
    "CoeffResult", "DomainError", "ExponentPair", "ExprDomainError", "ExprSyntaxError",
    "FbmPath", "FracExpError", "FractionalSeries", "NumericalError", "ResourceError", "Term",
    "TermList", "TimeGrid", "c_coefficient_analytic", "c_coefficient_mc", "c_coefficients_mc",
    "c_h_const", "cond_expand_driftless", "covariance", "evaluate_truncation", "expand_p0",
    "exponent_set", "increment_cov", "kernel_k", "merge_collisions", "sample_fbm",
    "sample_fbm_array", "wick_moment",
]
