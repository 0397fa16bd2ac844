"""Reproducible Gaussian streams for Monte Carlo sampling.

Normals come from numpy's counter-based Philox generator. The 128-bit key is
``(seed, block)`` where a block holds ``BLOCK_SIZE`` consecutive path indices;
inside a block rows are drawn in path order, so row ``i`` only ever depends on
``(seed, i)`` and the row width. Results are identical however the caller
slices the path range.
"""

from __future__ import annotations

import numpy as np

BLOCK_SIZE = 1024
_U64 = 2**64


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < _U64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed * _U64 + block))


def standard_normals(seed: int, start: int, count: int, width: int) -> np.ndarray:
    """Rows ``start .. start+count-1`` of the keyed normal stream.

    Returns an array of shape ``(count, width)``.
    """
    seed = check_seed(seed)
    if start < 0 or count < 0 or width < 0:
        raise ValueError("start, count and width must be nonnegative")
    out = np.empty((count, width))
    stop = start + count
    row = start
    while row < stop:
        block, offset = divmod(row, BLOCK_SIZE)
        take = min(BLOCK_SIZE - offset, stop - row)
        draws = _block_generator(seed, block).standard_normal((offset + take, width))
        out[row - start : row - start + take] = draws[offset:]
        row += take
    return out
