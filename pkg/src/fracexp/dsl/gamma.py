"""The differential operators Γ_I(f, b) as formal polynomials.

A monomial is ``f^(a) * b^(b_1) * ... * b^(b_r)`` with an integer coefficient.
Letters are consumed innermost-first: the first letter builds Γ_(i_1) from
f, each further letter acts on the result as

    '1':  g -> g'
    '0':  g -> b * g'

Formal differentiation uses the product rule on the derivative symbols.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache

from ..coefficients import check_word
from ..errors import ResourceError
from .jet import jet_eval
from .parser import Expr, as_expr

MAX_WORD_LENGTH = 12

Monomial = tuple[int, tuple[int, ...]]  # (order of f, sorted orders of b factors)


@dataclass(frozen=True)
class GammaPolynomial:
    terms: tuple[tuple[Monomial, int], ...]

    def as_dict(self) -> dict[Monomial, int]:
        return dict(self.terms)

    @property
    def max_f_order(self) -> int:
        return max((a for (a, _), _ in self.terms), default=0)

    @property
    def max_b_order(self) -> int:
        return max((max(bs, default=-1) for (_, bs), _ in self.terms), default=-1)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (a, bs), coef in self.terms:
            factors = [f"b^({j})" for j in bs] + [f"f^({a})"]
            body = " ".join(factors)
            parts.append(body if coef == 1 else f"{coef} {body}")
        return " + ".join(parts)


def _differentiate(poly: dict[Monomial, int]) -> dict[Monomial, int]:
    out: dict[Monomial, int] = defaultdict(int)
    for (a, bs), coef in poly.items():
        out[(a + 1, bs)] += coef
        for i, j in enumerate(bs):
            raised = tuple(sorted(bs[:i] + (j + 1,) + bs[i + 1 :]))
            out[(a, raised)] += coef
    return out


def _times_b(poly: dict[Monomial, int]) -> dict[Monomial, int]:
    return {(a, tuple(sorted(bs + (0,)))): coef for (a, bs), coef in poly.items()}


@lru_cache(maxsize=None)
def gamma_polynomial(word: str) -> GammaPolynomial:
    """Formal polynomial of Γ_I for ``word`` (innermost letter first)."""
    word = check_word(word)
    if len(word) > MAX_WORD_LENGTH:
        raise ResourceError(f"word length {len(word)} exceeds the guard {MAX_WORD_LENGTH}")
    poly: dict[Monomial, int] = {(0, ()): 1}
    for letter in word:
        poly = _differentiate(poly)
        if letter == "0":
            poly = _times_b(poly)
    terms = tuple(sorted((m, c) for m, c in poly.items() if c))
    return GammaPolynomial(terms)


def gamma_value(word: str, f: Expr | str, b: Expr | str, x: float) -> float:
    """Numeric Γ_I(f, b)(x) from jets of f and b at x."""
    poly = gamma_polynomial(word)
    fd = jet_eval(as_expr(f), x, poly.max_f_order).derivatives()
    bd = jet_eval(as_expr(b), x, poly.max_b_order).derivatives() if poly.max_b_order >= 0 else ()
    total = 0.0
    for (a, bs), coef in poly.terms:
        total += coef * float(fd[a]) * math.prod(float(bd[j]) for j in bs)
    return total
