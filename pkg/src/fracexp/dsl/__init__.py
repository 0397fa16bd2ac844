from .gamma import GammaPolynomial, gamma_polynomial, gamma_value
from .jet import Jet, evaluate, jet_eval
from .parser import Expr, as_expr, parse, to_text

__all__ = [
    "Expr", "GammaPolynomial", "Jet", "as_expr", "evaluate", "gamma_polynomial",
    "gamma_value", "jet_eval", "parse", "to_text",
]
