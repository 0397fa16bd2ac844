"""Expected iterated integrals c_I of mixed dt/dB words over the unit simplex.

Word convention: a word is a string over {'0', '1'} read innermost-first.
Character 0 is the innermost integral i_1, the last character is the
outermost i_k; '0' is a dt slot and '1' a dB slot. So "011" is

    E[ ∫_0^1 dB_{t3} ∫_0^{t3} dB_{t2} ∫_0^{t2} dt_1 ].
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Literal

import numpy as np

from .errors import NumericalError, ResourceError
from .fbm import TimeGrid, check_hurst, increment_cov_batched, iter_fbm_chunks
from .gaussian import wick_moment
from .quadrature import simplex_rule

MAX_DT_SLOTS = 3
_BASE_ORDER = 40
_MAX_REFINEMENTS = 2


@dataclass(frozen=True)
class CoeffResult:
    value: float
    method: Literal["analytic", "mc"]
    stderr: float | None
    hurst: float
    word: str = ""

    def __post_init__(self):
        if (self.method == "mc") != (self.stderr is not None):
            raise ValueError("stderr is present exactly for Monte Carlo results")
        if self.stderr is not None and self.stderr < 0:
            raise ValueError("stderr must be nonnegative")


def check_word(word: str) -> str:
    word = str(word)
    if not word or set(word) - {"0", "1"}:
        raise ValueError(f"a word is a nonempty string over {{0,1}}, got {word!r}")
    return word


def weight(word: str) -> int:
    """Number of dB slots."""
    return check_word(word).count("1")


def scaling_exponent(word: str, H: float) -> float:
    """Exponent e with E[iterated integral over [0, h]] = h^e c_I."""
    w = weight(word)
    return H * w + len(word) - w


def words_for_exponent(m: int, n: int) -> list[str]:
    """All words of length 2m+n with exactly 2m dB slots, lexicographically."""
    if m < 0 or n < 0 or (m, n) == (0, 0):
        raise ValueError("need (m, n) in N^2 without (0, 0)")
    k = 2 * m + n
    words = []
    for ones in itertools.combinations(range(k), 2 * m):
        letters = ["0"] * k
        for i in ones:
            letters[i] = "1"
        words.append("".join(letters))
    return sorted(words)


def _blocks(word: str) -> tuple[list[int], list[tuple[int, int, int]]]:
    """dt slot positions (1-based) and the dB blocks between them.

    Each block is (left, right, exponent) where left/right index the time
    vector (0, t_{j_1}, ..., t_{j_m}, 1) and exponent counts the consecutive
    dB letters in that gap. Such a block integrates to increment^g / g!.
    """
    k = len(word)
    dt_slots = [j for j, ch in enumerate(word, start=1) if ch == "0"]
    marks = [0] + dt_slots + [k + 1]
    blocks = []
    for i in range(len(marks) - 1):
        g = marks[i + 1] - marks[i] - 1
        if g:
            blocks.append((i, i + 1, g))
    return dt_slots, blocks


def _simplex_value(word: str, H: float, order: int) -> float:
    dt_slots, blocks = _blocks(word)
    m = len(dt_slots)
    T, W = simplex_rule(m, order)
    times = np.concatenate([np.zeros((T.shape[0], 1)), T, np.ones((T.shape[0], 1))], axis=1)
    left = times[:, [b[0] for b in blocks]]
    right = times[:, [b[1] for b in blocks]]
    cov = increment_cov_batched(left, right, H)
    powers = [b[2] for b in blocks]
    moments = wick_moment(cov, powers)
    norm = math.prod(math.factorial(g) for g in powers)
    return float(np.dot(W, moments)) / norm


@lru_cache(maxsize=4096)
def _analytic(word: str, H: float, tol: float) -> float:
    w = word.count("1")
    if w % 2:
        return 0.0
    k = len(word)
    if w == 0:
        return 1.0 / math.factorial(k)
    dt_slots, blocks = _blocks(word)
    if not dt_slots:
        # E[B_1^k] / k! with k even
        return math.prod(range(k - 1, 0, -2)) / math.factorial(k)
    order = _BASE_ORDER
    value = _simplex_value(word, H, order)
    for _ in range(_MAX_REFINEMENTS):
        order *= 2
        refined = _simplex_value(word, H, order)
        err = abs(refined - value)
        value = refined
        if err <= tol * max(abs(value), 1e-300):
            return value
    raise NumericalError(f"simplex quadrature for word {word!r} did not reach rtol={tol}",
                         estimate=value, error=err)


def c_coefficient_analytic(word: str, H: float, tol: float = 1e-10) -> CoeffResult:
    """c_I by quadrature over the dt times and exact Gaussian moments.

    Odd-weight words return exactly 0. Words with more than three dt slots
    are refused; use :func:`c_coefficient_mc` for them.
    """
    word = check_word(word)
    H = check_hurst(H)
    if tol <= 0:
        raise ValueError("tol must be positive")
    n_dt = word.count("0")
    if word.count("1") % 2 == 0 and word.count("1") and n_dt > MAX_DT_SLOTS:
        raise ResourceError(
            f"word {word!r} has {n_dt} dt slots; the analytic path supports at most "
            f"{MAX_DT_SLOTS}, use the Monte Carlo method instead"
        )
    return CoeffResult(_analytic(word, H, float(tol)), "analytic", None, H, word)


def _segment_powers(dt: float, dB: np.ndarray, depth: int) -> list[np.ndarray]:
    """Tensor powers E[l] = (dt, dB)^{⊗l} / l!, each of shape (n, 2**l)."""
    n = dB.shape[0]
    inc = np.stack([np.full(n, dt), dB], axis=1)
    powers = [np.ones((n, 1)), inc]
    for l in range(2, depth + 1):
        powers.append((powers[-1][:, :, None] * inc[:, None, :]).reshape(n, -1) / l)
    return powers


def _signature_levels(paths: np.ndarray, times: np.ndarray, depth: int, scheme: str) -> list[np.ndarray]:
    """Levels 0..depth of the (t, B) iterated integrals at the final time.

    Level k has shape (n, 2**k); column index is int(word, 2) with the
    innermost letter as the most significant bit.
    ``scheme='linear'`` gives the exact iterated integrals of the piecewise
    linear interpolation (Chen's relation per step); ``scheme='left'`` is the
    left-point running-sum recursion.
    """
    n = paths.shape[0]
    levels = [np.ones((n, 1))] + [np.zeros((n, 2**k)) for k in range(1, depth + 1)]
    dts = np.diff(times)
    dBs = np.diff(paths, axis=1)
    for i in range(dts.size):
        seg = _segment_powers(dts[i], dBs[:, i], depth if scheme == "linear" else 1)
        new = [levels[0]]
        for k in range(1, depth + 1):
            acc = levels[k].copy()
            for j in range(max(0, k - len(seg) + 1), k):
                acc += (levels[j][:, :, None] * seg[k - j][:, None, :]).reshape(n, -1)
            new.append(acc)
        levels = new
    return levels


def c_coefficients_mc(
    words: Iterable[str],
    H: float,
    n_paths: int = 100_000,
    n_steps: int = 512,
    seed: int = 0,
    horizon: float = 1.0,
    scheme: Literal["linear", "left"] = "linear",
) -> dict[str, CoeffResult]:
    """Monte Carlo estimates of the iterated-integral means for several words.

    All words share the same fBm paths. With ``horizon`` h != 1 the estimate
    targets h^{H|I| + k - |I|} c_I.
    """
    words = [check_word(w) for w in words]
    H = check_hurst(H)
    if n_steps < 64:
        raise ValueError("n_steps must be >= 64")
    if n_paths < 100:
        raise ValueError("n_paths must be >= 100")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if scheme not in ("linear", "left"):
        raise ValueError(f"unknown scheme {scheme!r}")
    depth = max(len(w) for w in words)
    grid = TimeGrid.uniform(horizon, n_steps)
    samples: dict[str, list[np.ndarray]] = {w: [] for w in words}
    for _, paths in iter_fbm_chunks(grid, H, seed, n_paths):
        levels = _signature_levels(paths, grid.times, depth, scheme)
        for w in words:
            samples[w].append(levels[len(w)][:, int(w, 2)])
    out = {}
    for w in words:
        x = np.concatenate(samples[w])
        out[w] = CoeffResult(float(x.mean()), "mc", float(x.std(ddof=1) / math.sqrt(x.size)), H, w)
    return out


def c_coefficient_mc(word: str, H: float, n_paths: int = 100_000, n_steps: int = 512,
                     seed: int = 0, horizon: float = 1.0,
                     scheme: Literal["linear", "left"] = "linear") -> CoeffResult:
    word = check_word(word)
    return c_coefficients_mc([word], H, n_paths, n_steps, seed, horizon, scheme)[word]
