"""Extended reals, log grids and overflow-safe sup/series primitives.

Everything potentially huge (M_p, Koethe weights) is carried as a natural
logarithm; only bounded quantities are ever exponentiated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

EXP_OVERFLOW = 700.0


class ExtendedReal(float):
    """A nonnegative real or +inf.

    Subclasses ``float`` so it drops into numpy and ``math`` unchanged;
    construction rejects NaN and negative values.
    """

    def __new__(cls, value: float = 0.0) -> "ExtendedReal":
        v = float(value)
        if math.isnan(v):
            raise ValueError("ExtendedReal cannot be NaN")
        if v < 0.0:
            raise ValueError(f"ExtendedReal must be >= 0, got {v!r}")
        return super().__new__(cls, v)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self)

    def __add__(self, other):
        res = float(self) + float(other)
        # stays extended while the sum is a valid nonnegative value
        return ExtendedReal(res) if res >= 0.0 else res

    __radd__ = __add__

    def __repr__(self) -> str:
        return "ExtendedReal(+inf)" if self.is_infinite else f"ExtendedReal({float(self)!r})"


def ext_max(*values: float) -> ExtendedReal:
    return ExtendedReal(max(float(v) for v in values))


@dataclass(frozen=True)
class LogGrid:
    """Logarithmically equispaced points on [t_min, t_max]."""

    t_min: float
    t_max: float
    n: int
    points: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        self.points.flags.writeable = False

    @property
    def log_points(self) -> np.ndarray:
        return np.log(self.points)

    @property
    def ratio(self) -> float:
        return (self.t_max / self.t_min) ** (1.0 / (self.n - 1))

    def clipped(self, t_hi: float) -> np.ndarray:
        """Grid points not exceeding ``t_hi``."""
        return self.points[self.points <= t_hi]

    def to_dict(self) -> dict:
        return {"tMin": self.t_min, "tMax": self.t_max, "n": self.n}

    def __len__(self) -> int:
        return self.n


def make_log_grid(t_min: float = 1.0, t_max: float = 1e8, n: int = 512) -> LogGrid:
    t_min, t_max = float(t_min), float(t_max)
    if not (math.isfinite(t_min) and math.isfinite(t_max)):
        raise ValueError("grid bounds must be finite")
    if t_min <= 0.0:
        raise ValueError(f"t_min must be > 0, got {t_min}")
    if t_max <= t_min:
        raise ValueError(f"empty range [{t_min}, {t_max}]")
    if int(n) != n or n < 2:
        raise ValueError(f"need at least 2 grid points, got {n}")
    pts = np.geomspace(t_min, t_max, int(n))
    pts[0], pts[-1] = t_min, t_max
    return LogGrid(t_min, t_max, int(n), pts)


DEFAULT_GRID = make_log_grid()


def grid_points(grid) -> np.ndarray:
    """Accept a LogGrid or any array of positive reals."""
    if isinstance(grid, LogGrid):
        return grid.points
    pts = np.asarray(grid, dtype=float)
    if pts.ndim != 1 or pts.size == 0:
        raise ValueError("grid must be a non-empty 1-d array")
    return pts


def sup_over_grid(f: Callable[[float], float], grid) -> tuple[ExtendedReal | float, float]:
    """Maximum of ``f`` over the grid points and the first point attaining it.

    Values may be negative (e.g. margins); +inf short-circuits.
    """
    pts = grid_points(grid)
    best, arg = -math.inf, float(pts[0])
    for t in pts:
        v = float(f(float(t)))
        if math.isnan(v):
            raise ValueError(f"f returned NaN at t={t}")
        if v > best:
            best, arg = v, float(t)
            if math.isinf(v):
                break
    if best >= 0.0:
        best = ExtendedReal(best)
    return best, arg


class NeumaierSum:
    """Running compensated sum (Kahan-Babuska variant)."""

    __slots__ = ("total", "carry")

    def __init__(self):
        self.total = 0.0
        self.carry = 0.0

    def add(self, x: float) -> None:
        t = self.total + x
        if abs(self.total) >= abs(x):
            self.carry += (self.total - t) + x
        else:
            self.carry += (x - t) + self.total
        self.total = t

    @property
    def value(self) -> float:
        return self.total + self.carry


def _check_exponents(e: np.ndarray) -> None:
    if np.any(np.isnan(e)):
        raise ValueError("NaN exponent")
    if np.any(e > EXP_OVERFLOW):
        k = int(np.argmax(e > EXP_OVERFLOW))
        raise OverflowError(f"exponent {e[k]:.6g} at k={k} exceeds {EXP_OVERFLOW}; renormalize first")


def partial_sums(exponents: Sequence[float] | np.ndarray, K: int | None = None) -> list[float]:
    """Compensated partial sums of exp(e_k) for k = 0..K (inclusive).

    Exponents equal to -inf contribute 0. Raises OverflowError if any
    exponent exceeds 700.
    """
    e = np.asarray(exponents, dtype=float)
    if K is None:
        K = e.size - 1
    if K < 1 or K >= e.size:
        raise ValueError(f"K must satisfy 1 <= K < {e.size}, got {K}")
    e = e[: K + 1]
    _check_exponents(e)
    acc = NeumaierSum()
    out = []
    for x in np.exp(e):
        acc.add(float(x))
        out.append(acc.value)
    return out


def checkpoint_sums(exponents: np.ndarray, checkpoints: Iterable[int]) -> list[float]:
    """Exact-rounded partial sums of exp(e_k) up to (and including) each checkpoint index.

    Vectorized counterpart of :func:`partial_sums` for long series: each
    segment is summed with ``math.fsum`` and segment totals are carried
    with a compensated accumulator.
    """
    e = np.asarray(exponents, dtype=float)
    _check_exponents(e)
    terms = np.exp(e)
    acc = NeumaierSum()
    out, start = [], 0
    for c in checkpoints:
        c = int(c)
        if c < start - 1 or c >= terms.size:
            raise ValueError("checkpoints must be increasing and in range")
        acc.add(math.fsum(terms[start : c + 1]))
        start = c + 1
        out.append(acc.value)
    return out


def geometric_k_sweep(K: int, head: int = 1024) -> np.ndarray:
    """Dense head 0..min(K, head) followed by powers of two up to K, K included."""
    dense = np.arange(0, min(K, head) + 1)
    if K <= head:
        return dense
    tail = [1 << i for i in range(int(math.log2(head)) + 1, int(math.log2(K)) + 1)]
    tail = [k for k in tail if head < k < K] + [K]
    return np.concatenate([dense, np.array(tail, dtype=dense.dtype)])


def golden_max(f: Callable[[np.ndarray], np.ndarray], lo, hi,
               iters: int = 80) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized golden-section maximization of unimodal ``f`` on [lo, hi].

    Returns (argmax, max); endpoints take part in the final comparison so
    boundary maxima are not lost.
    """
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    a, b = lo.copy(), hi.copy()
    for _ in range(iters):
        c = b - inv * (b - a)
        d = a + inv * (b - a)
        left = f(c) >= f(d)
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    x = 0.5 * (a + b)
    cand_x = np.stack([x, lo, hi])
    cand_f = np.stack([f(x), f(lo), f(hi)])
    idx = np.argmax(cand_f, axis=0)
    cols = np.arange(x.size)
    return cand_x[idx, cols], cand_f[idx, cols]
