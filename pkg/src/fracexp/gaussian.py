"""Mixed moments of centred Gaussian vectors (Wick/Isserlis)."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ResourceError

MAX_DEGREE = 24


def wick_moment(cov, powers: Sequence[int], max_degree: int = MAX_DEGREE):
    """E[prod_i Z_i^{p_i}] for Z ~ N(0, cov).

    ``cov`` may carry leading batch dimensions, shape (..., d, d); the result
    then has the batch shape. Uses Stein's identity

        E[Z_a Z^q] = sum_b cov[a, b] q_b E[Z^{q - e_b}]

    memoised on the reduced power tuple.
    """
    cov = np.asarray(cov, dtype=float)
    powers = tuple(int(p) for p in powers)
    if cov.ndim < 2 or cov.shape[-1] != cov.shape[-2]:
        raise ValueError("cov must have shape (..., d, d)")
    d = cov.shape[-1]
    if len(powers) != d:
        raise ValueError(f"got {len(powers)} powers for a {d}-dimensional covariance")
    if any(p < 0 for p in powers):
        raise ValueError("powers must be nonnegative")
    scale = np.max(np.abs(cov)) if cov.size else 0.0
    if np.any(np.abs(cov - np.swapaxes(cov, -1, -2)) > 1e-12 * max(scale, 1e-300)):
        raise ValueError("covariance matrix is not symmetric")
    if np.any(np.diagonal(cov, axis1=-2, axis2=-1) < 0):
        raise ValueError("covariance matrix has a negative diagonal entry")

    batch = cov.shape[:-2]
    degree = sum(powers)
    if degree % 2:
        return 0.0 if not batch else np.zeros(batch)
    if degree > max_degree:
        raise ResourceError(f"moment degree {degree} exceeds the guard {max_degree}")

    entries = [[cov[..., a, b] for b in range(d)] for a in range(d)]
    memo: dict[tuple[int, ...], object] = {}

    def moment(p: tuple[int, ...]):
        if p in memo:
            return memo[p]
        a = next((i for i, pi in enumerate(p) if pi), None)
        if a is None:
            return 1.0
        q = list(p)
        q[a] -= 1
        total = 0.0
        for b in range(d):
            if q[b]:
                r = q.copy()
                r[b] -= 1
                total = total + q[b] * entries[a][b] * moment(tuple(r))
        memo[p] = total
        return total

    result = moment(powers)
    if batch:
        return np.broadcast_to(np.asarray(result, dtype=float), batch).copy()
    return float(result)
