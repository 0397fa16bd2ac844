"""Variance of the normalised conditional increment E[B_{t+h} - B_t | F_t] h^{-α}.

The conditional mean is the Wiener integral ∫_0^t (K_H(t+h,s) - K_H(t,s)) dW_s,
so its variance is a deterministic double integral. ``var_zh`` evaluates it
with a composite fixed-node rule, and the lower/upper bounds obtained by
freezing u^{H-1/2} at t or t+h reuse the same nodes, which makes the
sandwich hold node by node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from ..errors import DomainError, NumericalError
from ..fbm import c_h_const, check_hurst
from ..quadrature import adaptive_quad, gauss_jacobi_left, gauss_legendre

TAIL_START = 1e4
_TAIL_TERMS = 16
_GRADING = 0.25
_ORDERS = (16, 24, 36, 54)


@dataclass(frozen=True)
class VarianceBounds:
    lower: float
    value: float
    upper: float


@dataclass(frozen=True)
class VarianceRow:
    h: float
    var: float
    raw_var: float
    normalized: float
    ratio_to_limit: float
    lower: float
    upper: float


def _rise(d: np.ndarray, h: float, a: float) -> np.ndarray:
    """(d+h)^a - d^a without cancellation."""
    return d**a * np.expm1(a * np.log1p(h / d))


def _outer_nodes(t: float, h: float, H: float, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes s, distances d = t - s (kept exact) and weights for ∫_0^t s^{1-2H} F(s) ds (weight included).

    [0, t/2] uses Gauss-Jacobi for the s^{1-2H} factor; [t/2, t] is graded
    geometrically in d = t - s toward the kink of F at d = 0, with extra
    breakpoints at d = h and d = h^2.
    """
    beta = 1.0 - 2.0 * H
    x, w = gauss_jacobi_left(n, beta)
    half = 0.5 * t
    s_parts = [half * x]
    d_parts = [t - half * x]
    w_parts = [w * half ** (1.0 + beta)]
    d_min = 1e-14 * min(t, h)
    breaks = [half]
    while breaks[-1] * _GRADING > d_min:
        breaks.append(breaks[-1] * _GRADING)
    breaks.extend(d for d in (h, h * h) if d_min < d < half)
    breaks = np.unique(np.concatenate([[0.0], breaks]))
    gx, gw = gauss_legendre(n)
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        d = lo + (hi - lo) * gx
        s = t - d
        s_parts.append(s)
        d_parts.append(d)
        w_parts.append((hi - lo) * gw * s**beta)
    return np.concatenate(s_parts), np.concatenate(d_parts), np.concatenate(w_parts)


def _sandwich(t: float, h: float, H: float, n: int) -> tuple[float, float, float]:
    a = H - 0.5
    s, d, W = _outer_nodes(t, h, H, n)
    w0 = d**a
    span = _rise(d, h, a)
    gx, gw = gauss_legendre(n)
    w = w0[:, None] + span[:, None] * gx[None, :]
    u = s[:, None] + w ** (1.0 / a)
    phi = span * (gw[None, :] * u**a).sum(axis=1) / a
    x = span / a
    c2 = c_h_const(H) ** 2
    value = c2 * float(np.dot(W, phi**2))
    core = c2 * float(np.dot(W, x**2))
    return t ** (2 * a) * core, value, (t + h) ** (2 * a) * core


def var_zh_bounds(t: float, h: float, H: float, tol: float = 1e-9) -> VarianceBounds:
    """var_zh together with its frozen-u lower and upper bounds."""
    H = check_hurst(H)
    if t <= 0 or h <= 0:
        raise DomainError("var_zh needs t > 0 and h > 0")
    prev = None
    for n in _ORDERS:
        cur = _sandwich(t, h, H, n)
        if prev is not None and abs(cur[1] - prev[1]) <= tol * abs(cur[1]):
            return VarianceBounds(*cur)
        prev = cur
    raise NumericalError(
        f"var_zh(t={t}, h={h}, H={H}) did not reach rtol {tol}",
        estimate=prev[1], error=abs(cur[1] - prev[1]))


def var_zh(t: float, h: float, H: float, tol: float = 1e-9) -> float:
    """∫_0^t (K_H(t+h, s) - K_H(t, s))^2 ds, the variance of E[B_{t+h} - B_t | F_t]."""
    return var_zh_bounds(t, h, H, tol).value


def _g(u, a: float):
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = u <= 1.0
    out[small] = (u[small] + 1.0) ** a - u[small] ** a
    big = ~small
    out[big] = _rise(u[big], 1.0, a)
    return out if out.ndim else float(out)


def _tail(x: float, a: float, S: float) -> float:
    """x ∫_S^∞ g(x^2 u) g(u) du from the binomial expansion of both factors."""
    k = np.arange(1, _TAIL_TERMS + 1)
    bk = special.binom(a, k)
    total = 0.0
    for j, bj in zip(k, bk):
        n = k + j
        total += float(np.sum(bk * bj * x ** (-2.0 * j) * S ** (2 * a - n + 1) / (n - 2 * a - 1)))
    return x * x ** (2 * a) * total


def r_fn(x: float, H: float, tol: float = 1e-12, tail_start: float = TAIL_START) -> float:
    """r(x) = x ∫_0^∞ g(x^2 u) g(u) du with g(s) = (s+1)^{H-1/2} - s^{H-1/2}.

    The integral is split at 1, 1/x^2 and decades up to S; the tail beyond S
    (with S scaled so that x^2 S >= tail_start as well) is summed from the
    large-argument series of g.
    """
    H = check_hurst(H)
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise DomainError(f"r_fn needs x > 0, got {x!r}")
    a = H - 0.5
    S = tail_start * max(1.0, 1.0 / (x * x))
    pts = {1.0, 1.0 / (x * x)}
    p = 10.0
    while p < S:
        pts.add(p)
        p *= 10.0
    pts = [0.0] + sorted(q for q in pts if q < S) + [S]
    fn = lambda u: _g(x * x * u, a) * _g(u, a)
    body = sum(adaptive_quad(fn, lo, hi, rtol=tol, atol=0.0) for lo, hi in zip(pts[:-1], pts[1:]))
    return x * body + _tail(x, a, S)


def sigma_h_sq(H: float, tol: float = 1e-12, tail_start: float = TAIL_START) -> float:
    """Limit variance σ_H^2 = (c_H/(H-1/2))^2 ∫_0^∞ g(s)^2 ds."""
    H = check_hurst(H)
    return (c_h_const(H) / (H - 0.5)) ** 2 * r_fn(1.0, H, tol, tail_start)


def variance_scan(t: float, H: float, alpha: float, h_grid: Sequence[float],
                  tol: float = 1e-9) -> list[VarianceRow]:
    """Tabulate h^{-2α} var_zh over a decreasing grid of h."""
    H = check_hurst(H)
    if t <= 0:
        raise DomainError("variance_scan needs t > 0")
    hs = [float(h) for h in h_grid]
    if not hs or any(h <= 0 for h in hs):
        raise ValueError("h_grid must be non-empty and positive")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValueError("h_grid must be strictly decreasing")
    limit = sigma_h_sq(H)
    rows = []
    for h in hs:
        b = var_zh_bounds(t, h, H, tol)
        normalized = b.value / h ** (2 * H)
        rows.append(VarianceRow(h, b.value, b.value * h ** (-2 * alpha), normalized,
                                normalized / limit, b.lower, b.upper))
    return rows
