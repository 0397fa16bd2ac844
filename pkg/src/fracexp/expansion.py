"""Expansions of E[f(X_h)] - f(x) and of the driftless conditional increment
on the exponent lattice {2mH + n}."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, NamedTuple

from scipy.special import binom

from .coefficients import MAX_DT_SLOTS, c_coefficient_analytic, c_coefficient_mc, words_for_exponent
from .dsl import Expr, as_expr, gamma_value, jet_eval
from .errors import DomainError
from .fbm import check_hurst

COLLISION_TOL = 1e-12
_EPS = 1e-12


class ExponentPair(NamedTuple):
    m: int
    n: int

    def value(self, H: float) -> float:
        return 2.0 * self.m * H + self.n


def _check_pair(p: int, q: int) -> None:
    if p < 0 or q < 0 or (p, q) == (0, 0):
        raise ValueError(f"(p, q) must lie in N^2 without (0, 0), got {(p, q)}")


@dataclass(frozen=True)
class Term:
    pair: ExponentPair
    exponent: float
    coefficient: float
    stderr: float | None = None


@dataclass
class TermList:
    """Coefficients sorted by exponent, truncated at 2pH + q."""

    terms: list[Term]
    hurst: float
    truncation: ExponentPair

    def __iter__(self):
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def coefficient(self, m: int, n: int) -> float:
        for term in self.terms:
            if term.pair == (m, n):
                return term.coefficient
        raise KeyError((m, n))

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {tuple(t.pair): t.coefficient for t in self.terms}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        with_err = any(t.stderr is not None for t in self.terms)
        writer.writerow(["m", "n", "exponent", "coefficient"] + (["stderr"] if with_err else []))
        for t in self.terms:
            row = [t.pair.m, t.pair.n, _fmt(t.exponent), _fmt(t.coefficient)]
            if with_err:
                row.append("" if t.stderr is None else _fmt(t.stderr))
            writer.writerow(row)
        return buf.getvalue()

    def to_json_obj(self) -> dict:
        return {
            "hurst": self.hurst,
            "truncation": list(self.truncation),
            "terms": [
                {"m": t.pair.m, "n": t.pair.n, "exponent": t.exponent,
                 "coefficient": t.coefficient, "stderr": t.stderr}
                for t in self.terms
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def exponent_set(p: int, q: int, H: float) -> list[ExponentPair]:
    """All (m, n) != (0, 0) with 2mH + n <= 2pH + q, by exponent then m."""
    _check_pair(p, q)
    H = check_hurst(H)
    limit = 2 * p * H + q + _EPS
    pairs = []
    m = 0
    while 2 * m * H <= limit:
        n = 0
        while 2 * m * H + n <= limit:
            if (m, n) != (0, 0):
                pairs.append(ExponentPair(m, n))
            n += 1
        m += 1
    return sorted(pairs, key=lambda pr: (pr.value(H), pr.m))


def merge_collisions(terms: Iterable[Term], tol: float = COLLISION_TOL) -> list[Term]:
    """Merge terms whose exponents differ by less than ``tol``.

    The merged term keeps the lexicographically smallest pair as its label;
    standard errors combine in quadrature.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    ordered = sorted(terms, key=lambda t: (t.exponent, t.pair))
    groups: list[list[Term]] = []
    for t in ordered:
        if groups and abs(t.exponent - groups[-1][0].exponent) < tol:
            groups[-1].append(t)
        else:
            groups.append([t])
    merged = []
    for g in groups:
        label = min(g, key=lambda t: tuple(t.pair))
        errs = [t.stderr for t in g if t.stderr is not None]
        merged.append(Term(
            label.pair, label.exponent, math.fsum(t.coefficient for t in g),
            math.sqrt(math.fsum(e * e for e in errs)) if errs else None,
        ))
    return merged


def _term_list(coeffs: dict[ExponentPair, tuple[float, float | None]], H: float,
               p: int, q: int) -> TermList:
    terms = [Term(pr, pr.value(H), c, se) for pr, (c, se) in coeffs.items()]
    return TermList(merge_collisions(terms), H, ExponentPair(p, q))


def expand_p0(
    f: Expr | str,
    b: Expr | str,
    x: float,
    H: float,
    p: int,
    q: int,
    coeff_method: Literal["auto", "analytic", "mc"] = "auto",
    tol: float = 1e-10,
    mc_paths: int = 100_000,
    mc_steps: int = 512,
    seed: int = 0,
) -> TermList:
    """Coefficients of E[f(X_h)] - f(x) for dX = b(X) dt + dB, X_0 = x.

    The coefficient of h^{2mH+n} is the sum over words I of length 2m+n with
    2m dB slots of c_I * Γ_I(f, b)(x). Words whose Γ_I vanishes at x are
    skipped. ``coeff_method='auto'`` falls back to Monte Carlo for words with
    more than three dt slots and records the resulting standard error.
    """
    H = check_hurst(H)
    f, b = as_expr(f), as_expr(b)
    if coeff_method not in ("auto", "analytic", "mc"):
        raise ValueError(f"unknown coefficient method {coeff_method!r}")
    coeffs: dict[ExponentPair, tuple[float, float | None]] = {}
    for pair in exponent_set(p, q, H):
        parts, variances = [], []
        for word in words_for_exponent(pair.m, pair.n):
            g = gamma_value(word, f, b, x)
            if g == 0.0:
                continue
            use_mc = coeff_method == "mc" or (
                coeff_method == "auto" and word.count("0") > MAX_DT_SLOTS and word.count("1")
            )
            if use_mc:
                res = c_coefficient_mc(word, H, mc_paths, mc_steps, seed)
                variances.append((g * res.stderr) ** 2)
            else:
                res = c_coefficient_analytic(word, H, tol)
            parts.append(res.value * g)
        se = math.sqrt(math.fsum(variances)) if variances else None
        coeffs[pair] = (math.fsum(parts), se)
    return _term_list(coeffs, H, p, q)


def evaluate_truncation(terms: TermList | Iterable[Term], h: float) -> float:
    if h <= 0:
        raise ValueError("h must be positive")
    return math.fsum(t.coefficient * h**t.exponent for t in terms)


@dataclass
class FractionalSeries:
    """Truncated series sum_{(m,n)} a_{mn} h^{2mH+n}; (0,0) is the constant."""

    hurst: float
    threshold: float
    coeffs: dict[tuple[int, int], float] = field(default_factory=dict)

    def _keep(self, pair: tuple[int, int]) -> bool:
        return 2 * pair[0] * self.hurst + pair[1] <= self.threshold + _EPS

    def _new(self, coeffs=None) -> "FractionalSeries":
        return FractionalSeries(self.hurst, self.threshold, dict(coeffs or {}))

    @classmethod
    def constant(cls, value: float, hurst: float, threshold: float) -> "FractionalSeries":
        return cls(hurst, threshold, {(0, 0): float(value)})

    def __add__(self, other):
        if not isinstance(other, FractionalSeries):
            other = FractionalSeries.constant(other, self.hurst, self.threshold)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return self._new(out)

    __radd__ = __add__

    def __neg__(self):
        return self._new({k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, FractionalSeries):
            return self._new({k: v * other for k, v in self.coeffs.items()})
        out: dict[tuple[int, int], float] = {}
        for (m1, n1), a in self.coeffs.items():
            for (m2, n2), c in other.coeffs.items():
                key = (m1 + m2, n1 + n2)
                if self._keep(key):
                    out[key] = out.get(key, 0.0) + a * c
        return self._new(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = FractionalSeries.constant(1.0, self.hurst, self.threshold)
        for _ in range(k):
            result = result * self
        return result

    def min_exponent(self) -> float:
        live = [2 * m * self.hurst + n for (m, n), v in self.coeffs.items() if v != 0.0]
        return min(live, default=math.inf)

    def compose(self, taylor: Iterable[float]) -> "FractionalSeries":
        """sum_i taylor[i] * self^i for a series without constant term."""
        if self.coeffs.get((0, 0), 0.0) != 0.0:
            raise ValueError("composition needs a series vanishing at h = 0")
        result = self._new()
        power = FractionalSeries.constant(1.0, self.hurst, self.threshold)
        for i, a in enumerate(taylor):
            if i:
                power = power * self
            if not power.coeffs:
                break
            result = result + power * a
        return result

    def evaluate(self, h: float) -> float:
        return math.fsum(v * h ** (2 * m * self.hurst + n) for (m, n), v in self.coeffs.items())


def rho_minus_one_series(t: float, H: float, threshold: float) -> FractionalSeries:
    """Series of R(t+h, t)/t^{2H} - 1 in h."""
    s = FractionalSeries(H, threshold)
    k = 1
    while k <= threshold + _EPS:
        s.coeffs[(0, k)] = 0.5 * float(binom(2 * H, k)) * t ** (-k)
        k += 1
    if 2 * H <= threshold + _EPS:
        s.coeffs[(1, 0)] = -0.5 * t ** (-2 * H)
    return s


def conditional_variance_series(t: float, H: float, threshold: float) -> FractionalSeries:
    """Var(B_{t+h} | B_t) = h^{2H} - t^{2H} (rho - 1)^2."""
    rho1 = rho_minus_one_series(t, H, threshold)
    v = -(rho1 * rho1) * t ** (2 * H)
    if 2 * H <= threshold + _EPS:
        v = v + FractionalSeries(H, threshold, {(1, 0): 1.0})
    return v


def jet_order_driftless(p: int, q: int, H: float) -> int:
    """Largest j + i with j even and jH + i <= 2pH + q."""
    threshold = 2 * p * H + q
    best = 0
    j = 0
    while j * H <= threshold + _EPS:
        best = max(best, j + int(math.floor(threshold - j * H + _EPS)))
        j += 2
    return best


def cond_expand_driftless(f: Expr | str, t: float, beta: float, H: float, p: int, q: int) -> TermList:
    """Expansion of E[f(B_{t+h}) - f(B_t) | B_t = beta] in powers h^{2mH+n}.

    Given B_t = beta, B_{t+h} is Gaussian with mean rho(h) beta and variance
    v(h); both are expanded as fractional series and f is Taylor-expanded
    around beta, so every coefficient is exact.
    """
    H = check_hurst(H)
    _check_pair(p, q)
    if t <= 0:
        raise DomainError("conditioning time t must be positive")
    f = as_expr(f)
    threshold = 2 * p * H + q
    order = jet_order_driftless(p, q, H)
    derivs = jet_eval(f, beta, order).derivatives()

    rho1 = rho_minus_one_series(t, H, threshold)
    shift = rho1 * beta
    v = conditional_variance_series(t, H, threshold)
    total = FractionalSeries(H, threshold)
    j = 0
    while j * H <= threshold + _EPS:
        # E[N^j] / j! = 1 / (2^{j/2} (j/2)!)
        gauss = 1.0 / (2 ** (j // 2) * math.factorial(j // 2))
        taylor = [float(derivs[j + i]) / math.factorial(i) for i in range(order - j + 1)]
        shifted = shift.compose(taylor)
        if j == 0:
            shifted.coeffs.pop((0, 0), None)
        total = total + (v ** (j // 2)) * shifted * gauss
        j += 2
    coeffs = {pair: (total.coeffs.get(tuple(pair), 0.0), None) for pair in exponent_set(p, q, H)}
    return _term_list(coeffs, H, p, q)
