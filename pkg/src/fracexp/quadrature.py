"""Quadrature building blocks: adaptive 1-D integration, Gauss rules and a
tensor rule on the ordered simplex."""

from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import NumericalError


def adaptive_quad(fn, a: float, b: float, rtol: float = 1e-10, atol: float = 0.0,
                  limit: int = 400, **kwargs) -> float:
    """Adaptive Gauss-Kronrod integration that raises instead of warning."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(fn, a, b, epsabs=atol, epsrel=rtol, limit=limit, **kwargs)
        except integrate.IntegrationWarning as exc:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                value, err = integrate.quad(fn, a, b, epsabs=atol, epsrel=rtol, limit=limit, **kwargs)
            raise NumericalError(f"quadrature on [{a}, {b}] did not converge: {exc}",
                                 estimate=value, error=err) from None
    return value


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=64)
def gauss_jacobi_left(n: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Rule for ∫_0^1 x^beta f(x) dx (beta > -1), nodes and weights on [0, 1]."""
    x, w = special.roots_jacobi(n, 0.0, beta)
    return 0.5 * (x + 1.0), w * 0.5 ** (beta + 1.0)


def smoothed_unit_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre composed with u = I_s(4, 4), which flattens both ends.

    The substitution has u'(s) = 140 s^3 (1-s)^3, so algebraic endpoint
    behaviour like u^{2H} becomes s^{8H}-type and polynomial rules converge fast.
    """
    s, w = gauss_legendre(n)
    u = s**4 * (35.0 - 84.0 * s + 70.0 * s**2 - 20.0 * s**3)
    du = 140.0 * s**3 * (1.0 - s) ** 3
    return u, w * du


def simplex_rule(dim: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor rule on {0 <= t_1 <= ... <= t_dim <= 1}.

    Returns points of shape (N, dim) (columns ordered t_1..t_dim) and weights.
    The cube is mapped by t_dim = u_dim, t_{k} = t_{k+1} u_k.
    """
    u, w = smoothed_unit_rule(n)
    grids = np.meshgrid(*([u] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    U = np.stack([g.reshape(-1) for g in grids], axis=1)
    W = np.prod(np.stack([g.reshape(-1) for g in wgrids], axis=1), axis=1)
    T = np.empty_like(U)
    T[:, dim - 1] = U[:, dim - 1]
    for k in range(dim - 2, -1, -1):
        T[:, k] = T[:, k + 1] * U[:, k]
    # Jacobian: prod_{k>=1} u_k^k (0-based axis k carries power k).
    for k in range(1, dim):
        W = W * U[:, k] ** k
    return T, W
