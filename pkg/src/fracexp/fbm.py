"""Fractional Brownian motion: covariance, Volterra kernel and exact sampling."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import DomainError, NumericalError
from .quadrature import adaptive_quad
from .rng import BLOCK_SIZE, check_seed, standard_normals

HURST_GUARD = 1e-9


def check_hurst(H: float, allow_half: bool = False) -> float:
    """Validate a Hurst index for the H > 1/2 regime.

    ``allow_half`` admits the Brownian boundary value 0.5 (covariance only).
    """
    H = float(H)
    if allow_half and H == 0.5:
        return H
    if not (0.5 + HURST_GUARD <= H <= 1.0 - HURST_GUARD):
        raise DomainError(f"Hurst index must lie in [0.5+1e-9, 1-1e-9], got {H!r}")
    return H


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing sampling times starting at or after zero."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        if t.size == 0:
            raise ValueError("a time grid needs at least one point")
        if t[0] < 0:
            raise DomainError("grid times must be nonnegative")
        if np.any(np.diff(t) <= 0):
            raise ValueError("grid times must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, horizon: float, n_steps: int) -> "TimeGrid":
        if horizon <= 0 or n_steps < 1:
            raise ValueError("need horizon > 0 and n_steps >= 1")
        return cls(np.linspace(0.0, horizon, n_steps + 1))

    def __len__(self) -> int:
        return self.times.size

    @property
    def uniform_spacing(self) -> bool:
        if self.times.size < 3:
            return True
        dt = np.diff(self.times)
        return bool(np.all(np.abs(dt - dt[0]) <= 1e-12 * abs(dt[0])))

    def _key(self) -> bytes:
        return self.times.tobytes()


@dataclass(frozen=True)
class FbmPath:
    grid: TimeGrid
    values: np.ndarray
    hurst: float
    seed: int
    index: int = 0

    def __post_init__(self):
        if len(self.values) != len(self.grid):
            raise ValueError("path values and grid differ in length")

    def to_csv(self, stream: TextIO) -> None:
        write_path_csv(self, stream)


def covariance(s, t, H: float):
    """E[B_s B_t] = (t^2H + s^2H - |t-s|^2H) / 2.

    Accepts scalars or broadcastable arrays. ``H = 0.5`` is allowed and gives
    min(s, t).
    """
    H = check_hurst(H, allow_half=True)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise DomainError("covariance is defined for nonnegative times only")
    out = 0.5 * (t ** (2 * H) + s ** (2 * H) - np.abs(t - s) ** (2 * H))
    return float(out) if out.ndim == 0 else out


def c_h_const(H: float) -> float:
    """Normalising constant c_H of the Volterra kernel.

    c_H^2 = H(2H-1) / B(2-2H, H-1/2), with the Beta function taken through
    log-gamma.
    """
    H = check_hurst(H)
    a, b = 2.0 - 2.0 * H, H - 0.5
    log_beta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    return math.sqrt(H * (2.0 * H - 1.0) * math.exp(-log_beta))


def kernel_k(t: float, s: float, H: float, tol: float = 1e-12) -> float:
    """Volterra kernel K_H(t, s) with K_H(t, s) = B_t's density against dW_s.

    The integral over u in (s, t) carries an integrable singularity
    (u - s)^{H-3/2}; the substitution u = s + w^{1/(H-1/2)} turns it into the
    smooth integrand u^{H-1/2} / (H-1/2) on [0, (t-s)^{H-1/2}].
    """
    H = check_hurst(H)
    if t < 0 or s < 0:
        raise DomainError("kernel_k needs nonnegative times")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if s >= t:
        return 0.0
    if s == 0:
        raise DomainError("kernel_k(t, 0) diverges (factor s^(1/2-H))")
    a = H - 0.5
    p = 1.0 / a
    upper = (t - s) ** a

    def integrand(w):
        return (s + w**p) ** a

    value = adaptive_quad(integrand, 0.0, upper, rtol=tol)
    return c_h_const(H) * s ** (-a) * value / a


def increment_cov(intervals: Sequence[tuple[float, float]], H: float) -> np.ndarray:
    """Covariance matrix of the increments B_b - B_a over the given intervals."""
    H = check_hurst(H, allow_half=True)
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    a, b = iv[:, 0], iv[:, 1]
    if np.any(a < 0):
        raise DomainError("interval endpoints must be nonnegative")
    if np.any(b <= a):
        raise DomainError("each interval must satisfy a < b")
    return increment_cov_batched(a, b, H)


def increment_cov_batched(a: np.ndarray, b: np.ndarray, H: float) -> np.ndarray:
    """Unchecked variant: ``a``, ``b`` have shape (..., d); returns (..., d, d)."""
    e = 2.0 * H
    ai, aj = a[..., :, None], a[..., None, :]
    bi, bj = b[..., :, None], b[..., None, :]
    return 0.5 * (
        np.abs(bj - ai) ** e + np.abs(aj - bi) ** e - np.abs(aj - ai) ** e - np.abs(bj - bi) ** e
    )


@lru_cache(maxsize=32)
def _cholesky(key: bytes, H: float) -> np.ndarray:
    t = np.frombuffer(key, dtype=float)[1:]
    cov = covariance(t[:, None], t[None, :], H)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * float(np.max(np.diag(cov)))
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(t.size))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"Cholesky factorisation failed even with diagonal jitter {jitter:.3g}"
            ) from exc


def _check_grid(grid: TimeGrid) -> None:
    if len(grid) < 2 or grid.times[0] != 0.0:
        raise ValueError("sampling grid must start at 0 and have at least 2 points")


def sample_fbm_array(grid: TimeGrid, H: float, seed: int, n_paths: int, start: int = 0) -> np.ndarray:
    """Exact fBm draws on ``grid`` for path indices ``start .. start+n_paths-1``.

    Returns shape ``(n_paths, len(grid))`` with column 0 identically zero.
    """
    H = check_hurst(H)
    seed = check_seed(seed)
    _check_grid(grid)
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    chol = _cholesky(grid._key(), H)
    out = np.zeros((n_paths, len(grid)))
    out[:, 1:] = standard_normals(seed, start, n_paths, len(grid) - 1) @ chol.T
    return out


def iter_fbm_chunks(grid: TimeGrid, H: float, seed: int, n_paths: int, chunk: int = 8 * BLOCK_SIZE):
    """Yield ``(start, paths)`` chunks covering path indices 0..n_paths-1 in order."""
    for start in range(0, n_paths, chunk):
        yield start, sample_fbm_array(grid, H, seed, min(chunk, n_paths - start), start)


def sample_fbm(grid: TimeGrid, H: float, seed: int, n_paths: int = 1) -> list[FbmPath]:
    values = sample_fbm_array(grid, H, seed, n_paths)
    return [FbmPath(grid, row, float(H), int(seed), i) for i, row in enumerate(values)]


def write_path_csv(path: FbmPath, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["t", "value"])
    for t, v in zip(path.grid.times, path.values):
        writer.writerow([format(float(t), ".17g"), format(float(v), ".17g")])


def read_path_csv(stream: Iterable[str]) -> tuple[np.ndarray, np.ndarray]:
    rows = [r for r in csv.reader(line for line in stream if not line.startswith("#"))]
    if not rows or rows[0] != ["t", "value"]:
        raise ValueError("expected header 't,value'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    return data[:, 0], data[:, 1]
