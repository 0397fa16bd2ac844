import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracexp.dsl import jet_eval
from fracexp.errors import DomainError
from fracexp.expansion import (ExponentPair, FractionalSeries, Term, TermList, cond_expand_driftless,
                               conditional_variance_series, evaluate_truncation, expand_p0,
                               exponent_set, merge_collisions, rho_minus_one_series)
from fracexp.fbm import covariance


def linear_drift_oracle(x, kappa, H, m, n):
    """Coefficients of E[X_h^2] - x^2 for dX = kappa X dt + dB.

    X_h = x e^{kappa h} + ∫ e^{kappa(h-s)} dB_s, and the variance of the
    Wiener part is Σ_n kappa^n C_n h^{2H+n} / n! with
    C_n = H(2H-1)/(n+1) ∫_0^1 d^{2H-2} ((2-d)^{n+1} - d^{n+1}) dd in closed form.
    """
    if m == 0:
        return x * x * (2 * kappa) ** n / math.factorial(n)
    if m > 1:
        return 0.0
    N = n + 1
    integral = sum(math.comb(N, j) * 2.0 ** (N - j) * (-1) ** j / (2 * H - 1 + j) for j in range(N + 1))
    integral -= 1.0 / (2 * H - 1 + N)
    return kappa**n * H * (2 * H - 1) / N * integral / math.factorial(n)


class TestExponentSet:
    @pytest.mark.parametrize("p,q,H,expected", [
        (1, 0, 0.75, [(0, 1), (1, 0)]),
        (0, 2, 0.6, [(0, 1), (1, 0), (0, 2)]),
        (0, 1, 0.9, [(0, 1)]),
    ])
    def test_examples(self, p, q, H, expected):
        assert exponent_set(p, q, H) == expected

    @given(p=st.integers(0, 3), q=st.integers(0, 3), H=st.floats(0.51, 0.99))
    def test_sorted_and_bounded(self, p, q, H):
        if (p, q) == (0, 0):
            return
        vals = [pr.value(H) for pr in exponent_set(p, q, H)]
        assert vals == sorted(vals)
        assert max(vals) <= 2 * p * H + q + 1e-12

    def test_rejects_origin(self):
        with pytest.raises(ValueError):
            exponent_set(0, 0, 0.7)


class TestMergeCollisions:
    def test_near_half(self):
        H = 0.5 + 1e-9
        terms = [Term(ExponentPair(1, 0), 2 * H, 1.0), Term(ExponentPair(0, 1), 1.0, 2.0)]
        merged = merge_collisions(terms, tol=1e-8)
        assert len(merged) == 1
        assert merged[0].pair == (0, 1) and merged[0].coefficient == 3.0

    def test_three_quarters(self):
        terms = [Term(ExponentPair(2, 0), 3.0, 0.5, 0.3), Term(ExponentPair(0, 3), 3.0, 0.25, 0.4)]
        merged = merge_collisions(terms)
        assert len(merged) == 1 and merged[0].pair == (0, 3)
        assert merged[0].stderr == pytest.approx(0.5)

    def test_no_collision_at_point_seven(self):
        H = 0.7
        pairs = [(m, n) for m in range(3) for n in range(5) if 0 < 2 * m * H + n <= 4]
        terms = [Term(ExponentPair(*pr), 2 * pr[0] * H + pr[1], 1.0) for pr in pairs]
        assert len(merge_collisions(terms)) == len(terms)

    def test_expansion_merges_at_three_quarters(self):
        tl = expand_p0("sin(x)", "0", 0.2, 0.75, 2, 0)
        assert (0, 3) in tl.as_dict() and (2, 0) not in tl.as_dict()


class TestExpandP0:
    @pytest.mark.parametrize("f", ["sin(x)", "exp(x/2)", "x^4"])
    def test_driftless_closed_form(self, f):
        x, H = 0.3, 0.7
        tl = expand_p0(f, "0", x, H, 3, 0)
        derivs = jet_eval(f, x, 6).derivatives()
        for term in tl:
            m, n = term.pair
            expected = derivs[2 * m] / (2**m * math.factorial(m)) if n == 0 else 0.0
            assert term.coefficient == pytest.approx(expected, abs=1e-9)

    def test_constant_drift(self):
        tl = expand_p0("x", "0.8", 0.1, 0.7, 2, 2)
        nonzero = {k: v for k, v in tl.as_dict().items() if abs(v) > 1e-14}
        assert nonzero == {(0, 1): pytest.approx(0.8)}

    def test_square_driftless(self):
        tl = expand_p0("x^2", "0", 1.0, 0.7, 1, 0)
        assert tl.as_dict() == {(0, 1): 0.0, (1, 0): pytest.approx(1.0)}
        assert evaluate_truncation(tl, 0.1) == pytest.approx(0.1**1.4)

    @pytest.mark.parametrize("H", [0.6, 0.7, 0.85])
    def test_linear_drift_second_moment(self, H):
        x, kappa = 0.4, -0.6
        tl = expand_p0("x^2", f"{kappa}*x", x, H, 1, 2, coeff_method="analytic")
        for term in tl:
            assert term.coefficient == pytest.approx(
                linear_drift_oracle(x, kappa, H, *term.pair), rel=1e-8, abs=1e-10), term.pair

    def test_refinement_stability(self):
        small = expand_p0("sin(x)", "0.5*tanh(x)", 0.3, 0.7, 1, 1)
        big = expand_p0("sin(x)", "0.5*tanh(x)", 0.3, 0.7, 2, 2)
        for pair, value in small.as_dict().items():
            assert big.coefficient(*pair) == pytest.approx(value, abs=1e-12)

    def test_empty_truncation_is_zero(self):
        assert evaluate_truncation([], 0.3) == 0.0

    def test_serialisation(self):
        tl = expand_p0("x^2", "0", 1.0, 0.7, 1, 0)
        lines = tl.to_csv().splitlines()
        assert lines[0] == "m,n,exponent,coefficient"
        assert lines[2].startswith("1,0,1.3999999999999999,")
        obj = tl.to_json_obj()
        assert obj["terms"][1]["m"] == 1 and obj["truncation"] == [1, 0]


class TestFractionalSeries:
    def test_product_truncates(self):
        a = FractionalSeries(0.7, 2.0, {(0, 1): 1.0, (1, 0): 2.0})
        sq = a * a
        assert sq.coeffs == {(0, 2): 1.0}

    @given(h=st.floats(0.01, 0.3))
    @settings(max_examples=20)
    def test_compose_exp(self, h):
        s = FractionalSeries(0.7, 8.0, {(0, 1): 1.0})
        e = s.compose([1 / math.factorial(i) for i in range(12)])
        assert e.evaluate(h) == pytest.approx(math.exp(h), rel=1e-8)

    def test_rho_series(self):
        t, H, h = 1.3, 0.7, 1e-3
        rho = covariance(t + h, t, H) / t ** (2 * H)
        assert 1 + rho_minus_one_series(t, H, 4.0).evaluate(h) == pytest.approx(rho, rel=1e-13)

    def test_variance_series(self):
        t, H, h = 1.0, 0.7, 1e-2
        rho = covariance(t + h, t, H) / t ** (2 * H)
        v = (t + h) ** (2 * H) - rho**2 * t ** (2 * H)
        assert conditional_variance_series(t, H, 6.0).evaluate(h) == pytest.approx(v, rel=1e-9)


def exact_conditional(kind, t, beta, H, h):
    rho = covariance(t + h, t, H) / t ** (2 * H)
    v = (t + h) ** (2 * H) - rho**2 * t ** (2 * H)
    mean = rho * beta
    if kind == "sin":
        return math.sin(mean) * math.exp(-v / 2) - math.sin(beta)
    return mean**3 + 3 * mean * v - beta**3


class TestCondExpand:
    def test_linear_f(self):
        t, beta, H = 1.0, 0.5, 0.7
        tl = cond_expand_driftless("x", t, beta, H, 1, 2)
        assert tl.coefficient(0, 1) == pytest.approx(H * beta / t, abs=1e-12)
        assert tl.coefficient(1, 0) == pytest.approx(-beta / (2 * t ** (2 * H)), abs=1e-12)
        assert tl.coefficient(0, 2) == pytest.approx(H * (2 * H - 1) * beta / (2 * t**2), abs=1e-12)

    def test_sine_leading_terms(self):
        t, beta, H = 2.0, 0.9, 0.65
        tl = cond_expand_driftless("sin(x)", t, beta, H, 1, 1)
        assert tl.coefficient(0, 1) == pytest.approx(H * beta * math.cos(beta) / t, abs=1e-12)
        assert tl.coefficient(1, 0) + 0.5 * math.sin(beta) == pytest.approx(
            -beta * math.cos(beta) / (2 * t ** (2 * H)), abs=1e-12)

    @pytest.mark.parametrize("kind,f", [("sin", "sin(x)"), ("cube", "x^3")])
    def test_remainder_order(self, kind, f):
        t, beta, H, p, q = 1.0, 0.8, 0.7, 1, 2
        tl = cond_expand_driftless(f, t, beta, H, p, q)
        hs = np.array([0.02, 0.01, 0.005])
        err = [abs(exact_conditional(kind, t, beta, H, h) - evaluate_truncation(tl, h)) for h in hs]
        slope = np.polyfit(np.log(hs), np.log(err), 1)[0]
        # the first omitted exponent above 2pH + q = 3.4 is 3.8 (pair (1,2) gives 3.4, next (2,1) = 3.8)
        assert slope > 3.4

    def test_domain(self):
        with pytest.raises(DomainError):
            cond_expand_driftless("x", 0.0, 0.5, 0.7, 1, 1)
