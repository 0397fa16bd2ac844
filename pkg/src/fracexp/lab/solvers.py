"""Pathwise solvers for dX = b(X) dt + σ(X) dB with H > 1/2 (Young sense)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import interpolate, optimize

from ..dsl import Expr, as_expr, evaluate
from ..dsl.parser import Num, contains_var
from ..errors import DomainError, NumericalError
from ..fbm import FbmPath, check_hurst
from ..quadrature import adaptive_quad


@dataclass
class SdeProblem:
    drift: Expr | str
    diffusion: Expr | str = "1"
    x0: float = 0.0
    hurst: float = 0.7
    horizon: float = 1.0

    def __post_init__(self):
        self.drift = as_expr(self.drift)
        self.diffusion = as_expr(self.diffusion)
        self.hurst = check_hurst(self.hurst)
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")

    @property
    def unit_diffusion(self) -> bool:
        return isinstance(self.diffusion, Num) and self.diffusion.value == 1.0


def _path_arrays(path: FbmPath | tuple[np.ndarray, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(path, FbmPath):
        return path.grid.times, np.asarray(path.values, dtype=float)
    times, values = path
    return np.asarray(times, dtype=float), np.asarray(values, dtype=float)


def _check_elliptic(sigma: Expr, values: np.ndarray) -> None:
    s = np.asarray(evaluate(sigma, values))
    if np.min(np.abs(s)) <= 0 or (np.min(s) < 0 < np.max(s)):
        raise DomainError("diffusion coefficient vanishes on the visited range (ellipticity)")


def euler_young(drift: Expr, diffusion: Expr, x0: float, times: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Left-point scheme X_{k+1} = X_k + b(X_k) Δt_k + σ(X_k) ΔB_k.

    ``B`` has shape (..., n_points); the solution has the same shape.
    """
    dt = np.diff(times)
    dB = np.diff(B, axis=-1)
    X = np.empty(B.shape)
    X[..., 0] = x0
    unit = isinstance(diffusion, Num) and diffusion.value == 1.0
    drift_const = not contains_var(drift)
    b_val = evaluate(drift, 0.0) if drift_const else None
    for k in range(dt.size):
        xk = X[..., k]
        step = (b_val if drift_const else evaluate(drift, xk)) * dt[k]
        noise = dB[..., k] if unit else evaluate(diffusion, xk) * dB[..., k]
        X[..., k + 1] = xk + step + noise
    return X


def euler_young_solve(problem: SdeProblem, path: FbmPath | tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    times, B = _path_arrays(path)
    X = euler_young(problem.drift, problem.diffusion, problem.x0, times, B)
    if not problem.unit_diffusion:
        _check_elliptic(problem.diffusion, X)
    return X


class LampertiMap:
    """Y = F(X) = ∫_0^X dz / σ(z), its inverse and the transformed drift b/σ."""

    def __init__(self, sigma: Expr | str, domain: tuple[float, float], tol: float = 1e-13):
        self.sigma = as_expr(sigma)
        lo, hi = map(float, domain)
        if not lo < hi:
            raise ValueError("domain must be an interval lo < hi")
        probe = np.linspace(min(lo, 0.0), max(hi, 0.0), 4001)
        _check_elliptic(self.sigma, probe)
        self.domain = (lo, hi)
        self.tol = tol
        self._lo_y, self._hi_y = self.forward(lo), self.forward(hi)

    def _inv_sigma(self, z: float) -> float:
        return 1.0 / evaluate(self.sigma, z)

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        vals = [adaptive_quad(self._inv_sigma, 0.0, float(xi), rtol=self.tol, atol=1e-15)
                for xi in x.reshape(-1)]
        out = np.array(vals).reshape(x.shape)
        return float(out) if out.ndim == 0 else out

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        lo, hi = sorted((self._lo_y, self._hi_y))
        out = []
        for yi in y.reshape(-1):
            if not lo - 1e-12 <= yi <= hi + 1e-12:
                raise DomainError(f"value {yi} lies outside the image of the domain")
            out.append(optimize.brentq(lambda x: self.forward(x) - yi, *self.domain,
                                       xtol=1e-14, rtol=4 * np.finfo(float).eps))
        out = np.array(out).reshape(y.shape)
        return float(out) if out.ndim == 0 else out

    def drift(self, b: Expr | str) -> Callable[[np.ndarray], np.ndarray]:
        """Numeric drift of Y: y -> (b/σ)(F^{-1}(y))."""
        b = as_expr(b)

        def transformed(y):
            x = self.inverse(y)
            return evaluate(b, x) / evaluate(self.sigma, x)

        return transformed


def lamperti_map(sigma: Expr | str, domain: tuple[float, float]) -> LampertiMap:
    return LampertiMap(sigma, domain)


class _DossSussmannFlow:
    """φ(x1, x2) solving ∂φ/∂x2 = σ(φ), φ(x1, 0) = x1, tabulated on a lattice.

    Also tabulates ∂φ/∂x1 = exp(∫_0^{x2} σ'(φ(x1, s)) ds), which turns the
    drift equation into A' = b(φ(A, B)) / ∂_1φ(A, B).
    """

    def __init__(self, sigma: Expr, x1_range, x2_range, n1: int = 241, n2: int = 801):
        self.sigma = sigma
        self.x1 = np.linspace(*x1_range, n1)
        lo, hi = x2_range
        n_neg = max(2, int(round(n2 * -lo / (hi - lo)))) if lo < 0 else 0
        neg = np.linspace(lo, 0.0, n_neg + 1) if n_neg else np.array([0.0])
        pos = np.linspace(0.0, hi, max(2, n2 - n_neg) + 1) if hi > 0 else np.array([0.0])
        self.x2 = np.concatenate([neg[:-1], pos])
        i0 = neg.size - 1
        phi = np.empty((self.x1.size, self.x2.size))
        dphi = np.empty_like(phi)
        phi[:, i0], dphi[:, i0] = self.x1, 1.0
        for direction in (1, -1):
            y = np.stack([self.x1, np.zeros_like(self.x1)])
            idx = range(i0 + 1, self.x2.size) if direction > 0 else range(i0 - 1, -1, -1)
            prev = i0
            for j in idx:
                y = self._rk4(y, self.x2[j] - self.x2[prev], substeps=4)
                phi[:, j], dphi[:, j] = y[0], np.exp(y[1])
                prev = j
        self._phi = interpolate.RectBivariateSpline(self.x1, self.x2, phi, kx=5, ky=5)
        self._dphi = interpolate.RectBivariateSpline(self.x1, self.x2, dphi, kx=5, ky=5)

    def _rhs(self, y):
        from ..dsl import jet_eval

        jet = jet_eval(self.sigma, y[0], 1)
        return np.stack([jet.c[0], jet.c[1]])

    def _rk4(self, y, span, substeps):
        h = span / substeps
        for _ in range(substeps):
            k1 = self._rhs(y)
            k2 = self._rhs(y + 0.5 * h * k1)
            k3 = self._rhs(y + 0.5 * h * k2)
            k4 = self._rhs(y + h * k3)
            y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return y

    def covers(self, a: float, x2: float) -> bool:
        return self.x1[0] <= a <= self.x1[-1] and self.x2[0] <= x2 <= self.x2[-1]

    def phi(self, a, x2):
        return float(self._phi(a, x2, grid=False))

    def dphi(self, a, x2):
        return float(self._dphi(a, x2, grid=False))


def doss_sussmann_solve(problem: SdeProblem, path: FbmPath | tuple[np.ndarray, np.ndarray],
                        ode_substeps: int = 8) -> np.ndarray:
    """X_t = φ(A_t, B_t) with the noise entering only through the flow φ.

    A solves A' = b(φ(A, B_t)) / ∂_1φ(A, B_t), integrated by classical RK4
    with ``ode_substeps`` steps per grid interval and B interpolated linearly
    in between. For constant σ = c the flow is φ(x1, x2) = x1 + c x2.
    """
    times, B = _path_arrays(path)
    if B.ndim != 1:
        raise ValueError("doss_sussmann_solve works on a single path")
    b, sigma = problem.drift, problem.diffusion
    const_sigma = not contains_var(sigma)

    if const_sigma:
        c = evaluate(sigma, 0.0)
        if c == 0:
            raise DomainError("diffusion coefficient is identically zero")

        def phi(a, x2):
            return a + c * x2

        def rhs(a, x2):
            return evaluate(b, a + c * x2)
    else:
        span = max(1.0, float(np.ptp(B)))
        x2_range = (min(0.0, B.min()) - 0.1 * span, max(0.0, B.max()) + 0.1 * span)
        reach = problem.horizon * (1.0 + float(np.max(np.abs(evaluate(b, np.linspace(-10, 10, 201))))))
        flow = _DossSussmannFlow(sigma, (problem.x0 - reach - 1.0, problem.x0 + reach + 1.0), x2_range)

        def phi(a, x2):
            return flow.phi(a, x2)

        def rhs(a, x2):
            if not flow.covers(a, x2):
                raise NumericalError("Doss-Sussmann state left the tabulated flow lattice")
            return evaluate(b, flow.phi(a, x2)) / flow.dphi(a, x2)

    A = problem.x0
    X = np.empty_like(B)
    X[0] = phi(A, B[0])
    for k in range(times.size - 1):
        t0, dt = times[k], times[k + 1] - times[k]
        slope = (B[k + 1] - B[k]) / dt
        h = dt / ode_substeps
        for i in range(ode_substeps):
            s = i * h

            def Bt(u):
                return B[k] + slope * u

            k1 = rhs(A, Bt(s))
            k2 = rhs(A + 0.5 * h * k1, Bt(s + 0.5 * h))
            k3 = rhs(A + 0.5 * h * k2, Bt(s + 0.5 * h))
            k4 = rhs(A + h * k3, Bt(s + h))
            A = A + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.isfinite(A):
            raise NumericalError(f"Doss-Sussmann ODE blew up near t={t0 + dt}")
        X[k + 1] = phi(A, B[k + 1])
    return X


def chain_rule_residual(g: Expr | str, problem: SdeProblem,
                        path: FbmPath | tuple[np.ndarray, np.ndarray]) -> float:
    """|g(X_T) - g(x0) - Σ g'(X_k)σ(X_k)ΔB_k - Σ g'(X_k)b(X_k)Δt_k| on the Euler solution."""
    from ..dsl import jet_eval

    times, B = _path_arrays(path)
    X = euler_young_solve(problem, (times, B))
    g = as_expr(g)
    xk = X[..., :-1]
    gprime = jet_eval(g, xk, 1).c[1]
    dB = np.diff(B, axis=-1)
    dt = np.diff(times)
    noise = np.sum(gprime * evaluate(problem.diffusion, xk) * dB, axis=-1)
    drift = np.sum(gprime * evaluate(problem.drift, xk) * dt, axis=-1)
    res = np.abs(evaluate(g, X[..., -1]) - evaluate(g, problem.x0) - noise - drift)
    return float(res) if np.ndim(res) == 0 else res
