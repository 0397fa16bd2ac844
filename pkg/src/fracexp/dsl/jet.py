"""Truncated Taylor arithmetic ("jets") and numeric evaluation of expressions.

A jet of order d stores normalised Taylor coefficients c_j = f^{(j)}(x) / j!,
j = 0..d. Coefficients may be arrays, which evaluates many base points at
once. Elementary functions use the usual ODE recurrences, so every
coefficient is exact up to rounding.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ExprDomainError
from .parser import Add, Call, Const, Div, Expr, Mul, Neg, Num, Pow, Sub, Var, as_expr, to_text

MAX_ORDER = 32


class Jet:
    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)

    @classmethod
    def variable(cls, x, order: int) -> "Jet":
        x = np.asarray(x, dtype=float)
        c = np.zeros((order + 1,) + x.shape)
        c[0] = x
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order: int, shape=()) -> "Jet":
        c = np.zeros((order + 1,) + tuple(shape))
        c[0] = value
        return cls(c)

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def coeffs(self) -> np.ndarray:
        return self.c

    def derivative(self, j: int):
        """f^{(j)} at the base point(s)."""
        return self.c[j] * math.factorial(j)

    def derivatives(self) -> np.ndarray:
        fact = np.array([math.factorial(j) for j in range(self.order + 1)], dtype=float)
        return self.c * fact.reshape((-1,) + (1,) * (self.c.ndim - 1))

    def _like(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order, self.c.shape[1:])

    def __add__(self, other):
        return Jet(self.c + self._like(other).c)

    __radd__ = __add__

    def __sub__(self, other):
        return Jet(self.c - self._like(other).c)

    def __rsub__(self, other):
        return Jet(self._like(other).c - self.c)

    def __neg__(self):
        return Jet(-self.c)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        a, b = self.c, other.c
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for k in range(out.shape[0]):
            out[k] = sum(a[i] * b[k - i] for i in range(k + 1))
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._like(other)
        return divide(self, other)

    def __rtruediv__(self, other):
        return divide(self._like(other), self)

    def __repr__(self) -> str:
        return f"Jet({self.c.tolist()!r})"


def _new(shape_src: np.ndarray) -> np.ndarray:
    return np.zeros_like(shape_src)


def divide(a: Jet, b: Jet) -> Jet:
    a_c, b_c = np.broadcast_arrays(a.c, b.c)
    q = np.zeros(a_c.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(q.shape[0]):
            acc = a_c[k] - sum(b_c[j] * q[k - j] for j in range(1, k + 1))
            q[k] = acc / b_c[0]
    return Jet(q)


def exp(u: Jet) -> Jet:
    e = _new(u.c)
    e[0] = np.exp(u.c[0])
    for k in range(1, u.order + 1):
        e[k] = sum(j * u.c[j] * e[k - j] for j in range(1, k + 1)) / k
    return Jet(e)


def log(u: Jet) -> Jet:
    out = _new(u.c)
    out[0] = np.log(u.c[0])
    for k in range(1, u.order + 1):
        acc = u.c[k] - sum(j * out[j] * u.c[k - j] for j in range(1, k)) / k
        out[k] = acc / u.c[0]
    return Jet(out)


def sin_cos(u: Jet) -> tuple[Jet, Jet]:
    s, c = _new(u.c), _new(u.c)
    s[0], c[0] = np.sin(u.c[0]), np.cos(u.c[0])
    for k in range(1, u.order + 1):
        s[k] = sum(j * u.c[j] * c[k - j] for j in range(1, k + 1)) / k
        c[k] = -sum(j * u.c[j] * s[k - j] for j in range(1, k + 1)) / k
    return Jet(s), Jet(c)


def tanh(u: Jet) -> Jet:
    # t' = (1 - t^2) u'
    t, w = _new(u.c), _new(u.c)
    t[0] = np.tanh(u.c[0])
    w[0] = 1.0 - t[0] ** 2
    for k in range(1, u.order + 1):
        t[k] = sum(j * u.c[j] * w[k - j] for j in range(1, k + 1)) / k
        w[k] = -sum(t[i] * t[k - i] for i in range(k + 1))
    return Jet(t)


def sqrt(u: Jet) -> Jet:
    r = _new(u.c)
    r[0] = np.sqrt(u.c[0])
    for k in range(1, u.order + 1):
        r[k] = (u.c[k] - sum(r[j] * r[k - j] for j in range(1, k))) / (2.0 * r[0])
    return Jet(r)


def int_power(u: Jet, n: int) -> Jet:
    if n < 0:
        return divide(Jet.constant(1.0, u.order, u.c.shape[1:]), int_power(u, -n))
    result = Jet.constant(1.0, u.order, u.c.shape[1:])
    base = u
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def _integer_exponent(e: Expr) -> int | None:
    if isinstance(e, Num) and float(e.value).is_integer() and abs(e.value) <= 1024:
        return int(e.value)
    if isinstance(e, Neg):
        inner = _integer_exponent(e.arg)
        return None if inner is None else -inner
    return None


def _fail(message: str, node: Expr):
    raise ExprDomainError(message, to_text(node))


def _jet(e: Expr, x: np.ndarray, order: int) -> Jet:
    if isinstance(e, Var):
        return Jet.variable(x, order)
    if isinstance(e, (Num, Const)):
        return Jet.constant(e.value, order, x.shape)
    if isinstance(e, Neg):
        return -_jet(e.arg, x, order)
    if isinstance(e, Add):
        return _jet(e.left, x, order) + _jet(e.right, x, order)
    if isinstance(e, Sub):
        return _jet(e.left, x, order) - _jet(e.right, x, order)
    if isinstance(e, Mul):
        return _jet(e.left, x, order) * _jet(e.right, x, order)
    if isinstance(e, Div):
        den = _jet(e.right, x, order)
        if np.any(den.c[0] == 0):
            _fail("division by zero", e)
        return divide(_jet(e.left, x, order), den)
    if isinstance(e, Pow):
        base = _jet(e.base, x, order)
        n = _integer_exponent(e.exponent)
        if n is not None:
            if n < 0 and np.any(base.c[0] == 0):
                _fail("division by zero", e)
            return int_power(base, n)
        if np.any(base.c[0] <= 0):
            _fail("non-integer power of a nonpositive base", e)
        return exp(_jet(e.exponent, x, order) * log(base))
    if isinstance(e, Call):
        u = _jet(e.arg, x, order)
        if e.name == "exp":
            return exp(u)
        if e.name == "log":
            if np.any(u.c[0] <= 0):
                _fail("log of a nonpositive value", e)
            return log(u)
        if e.name == "sin":
            return sin_cos(u)[0]
        if e.name == "cos":
            return sin_cos(u)[1]
        if e.name == "tanh":
            return tanh(u)
        if e.name == "sqrt":
            if np.any(u.c[0] < 0) or (order > 0 and np.any(u.c[0] == 0)):
                _fail("sqrt of a negative value (or derivative at 0)", e)
            return sqrt(u)
        raise ValueError(f"unknown function {e.name!r}")
    raise TypeError(f"not an expression node: {e!r}")


def jet_eval(e: Expr | str, x, order: int) -> Jet:
    """Truncated Taylor expansion of ``e`` around ``x`` (scalar or array)."""
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"jet order must lie in [0, {MAX_ORDER}]")
    return _jet(as_expr(e), np.asarray(x, dtype=float), int(order))


_NUMERIC = {"exp": np.exp, "sin": np.sin, "cos": np.cos, "tanh": np.tanh}


def _eval(e: Expr, x: np.ndarray):
    if isinstance(e, Var):
        return x
    if isinstance(e, (Num, Const)):
        return e.value
    if isinstance(e, Neg):
        return -_eval(e.arg, x)
    if isinstance(e, Add):
        return _eval(e.left, x) + _eval(e.right, x)
    if isinstance(e, Sub):
        return _eval(e.left, x) - _eval(e.right, x)
    if isinstance(e, Mul):
        return _eval(e.left, x) * _eval(e.right, x)
    if isinstance(e, Div):
        den = _eval(e.right, x)
        if np.any(np.asarray(den) == 0):
            _fail("division by zero", e)
        return _eval(e.left, x) / den
    if isinstance(e, Pow):
        base = _eval(e.base, x)
        n = _integer_exponent(e.exponent)
        if n is not None:
            if n < 0 and np.any(np.asarray(base) == 0):
                _fail("division by zero", e)
            return np.power(np.asarray(base, dtype=float), n)
        if np.any(np.asarray(base) <= 0):
            _fail("non-integer power of a nonpositive base", e)
        return np.exp(_eval(e.exponent, x) * np.log(base))
    if isinstance(e, Call):
        u = _eval(e.arg, x)
        if e.name == "log":
            if np.any(np.asarray(u) <= 0):
                _fail("log of a nonpositive value", e)
            return np.log(u)
        if e.name == "sqrt":
            if np.any(np.asarray(u) < 0):
                _fail("sqrt of a negative value", e)
            return np.sqrt(u)
        return _NUMERIC[e.name](u)
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: Expr | str, x):
    """Plain numeric value of ``e`` at ``x``; broadcasts over arrays."""
    x = np.asarray(x, dtype=float)
    value = np.broadcast_to(np.asarray(_eval(as_expr(e), x), dtype=float), x.shape)
    return float(value) if value.ndim == 0 else value.copy()
