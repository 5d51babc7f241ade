"""Young (Legendre-Fenchel) conjugate of phi(u) = omega(e^u) on u >= 0."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .numerics import golden_max
from .weights import WeightFunction

PHI_U_MAX = 25.0
PHI_POINTS = 4096
_U_CAP = 1 << 14


@dataclass(frozen=True)
class ConjugateTable:
    """phi*(s) sampled on a slope grid; +inf where the supremum escapes."""

    slopes: np.ndarray
    values: np.ndarray
    u_max: float
    label: str = ""
    argmax_u: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for a in (self.slopes, self.values):
            a.flags.writeable = False

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def finite_up_to(self) -> float:
        fin = self.slopes[self.finite_mask]
        return float(fin.max()) if fin.size else 0.0

    def invariant_defects(self) -> dict[str, float]:
        """Worst violation of phi*(0) = 0, monotonicity, convexity and phi*(s)/s monotonicity."""
        s, v = self.slopes[self.finite_mask], self.values[self.finite_mask]
        scale = max(1.0, float(np.abs(v).max())) if v.size else 1.0
        out = {"phistar0": abs(float(v[0])) if s.size and s[0] == 0 else 0.0}
        out["monotone"] = float(max(0.0, -np.diff(v).min())) / scale if v.size > 1 else 0.0
        out["convex"] = float(max(0.0, -np.diff(v, 2).min())) / scale if v.size > 2 else 0.0
        pos = s > 0
        r = v[pos] / s[pos]
        out["ratio"] = float(max(0.0, -np.diff(r).min())) / max(1.0, float(np.abs(r).max())) if r.size > 1 else 0.0
        return out

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["s", "phistar"])
        for s, v in zip(self.slopes, self.values):
            wr.writerow([format(float(s), ".17g"), "inf" if math.isinf(v) else format(float(v), ".17g")])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def phi_range(w: WeightFunction, s_max: float, u_max: float = PHI_U_MAX, n: int = PHI_POINTS) -> float:
    """Right end of the u-domain used for conjugation.

    Tables use their sampled domain. Closed forms start from ``u_max`` and
    double until the final chord slope covers twice ``s_max`` or stops
    growing (linear phi, as for omega_0).
    """
    if w.family == "table":
        return w.u_end
    U = u_max

    def chord(U):
        h = U / (n - 1)
        return float((w.phi(U) - w.phi(U - h)) / h)

    c = chord(U)
    while c < 2.0 * s_max and U < _U_CAP:
        c2 = chord(2 * U)
        if not math.isfinite(c2) or not math.isfinite(float(w.phi(2 * U))) or c2 <= c * (1 + 1e-9):
            break
        U, c = 2 * U, c2
    return U


def conjugate_at(w: WeightFunction, slopes, n: int = PHI_POINTS, u_max: float | None = None,
                 polish: bool | None = None) -> tuple[np.ndarray, np.ndarray, float]:
    """phi*(s) = sup_{u >= 0} (u s - phi(u)) at the given slopes.

    Returns (values, argmax u, U). The grid supremum is located through the
    sorted chord slopes of phi (valid because phi is convex); closed-form
    families are then polished by golden section on the bracketing cell.
    A supremum attained at the right end with s above the final chord slope
    is reported as +inf.
    """
    s = np.asarray(slopes, dtype=float)
    if np.any(s < 0):
        raise ValueError("slopes must be >= 0")
    s_max = float(s.max()) if s.size else 0.0
    if w.family == "table":
        u = np.asarray(w.params["u"])
        U = float(u[-1])
    else:
        U = phi_range(w, s_max, PHI_U_MAX if u_max is None else u_max, n)
        u = np.linspace(0.0, U, n)
    f = w.phi(u)
    chords = np.diff(f) / np.diff(u)
    i = np.searchsorted(chords, s, side="left")
    val = u[i] * s - f[i]
    arg = u[i].copy()
    if polish is None:
        polish = w.family != "table"
    if polish and s.size:
        lo = u[np.maximum(i - 1, 0)]
        hi = u[np.minimum(i + 1, u.size - 1)]
        x, fx = golden_max(lambda x: x * s - w.phi(x), lo, hi)
        better = fx > val
        val = np.where(better, fx, val)
        arg = np.where(better, x, arg)
    diverge = (i == u.size - 1) & (s > chords[-1])
    val = np.where(diverge, math.inf, val)
    val = np.where(s == 0, 0.0, val)
    return val, arg, U


def young_conjugate(w: WeightFunction, s_max: float, n: int = PHI_POINTS, u_points: int = PHI_POINTS,
                    u_max: float | None = None) -> ConjugateTable:
    if not s_max > 0:
        raise ValueError("s_max must be > 0")
    if n < 2:
        raise ValueError("need at least 2 slope points")
    slopes = np.linspace(0.0, s_max, n)
    vals, arg, U = conjugate_at(w, slopes, u_points, u_max)
    return ConjugateTable(slopes, vals, U, w.label, arg)


def biconjugate_check(w: WeightFunction, table: ConjugateTable, u_points=None,
                      chunk: int = 512) -> float:
    """max |phi**(u) - phi(u)| over points whose supporting slope is interior.

    phi** is the brute-force supremum over the finite table entries; no
    convexity of the table is assumed.
    """
    s = table.slopes[table.finite_mask]
    v = table.values[table.finite_mask]
    if s.size < 3:
        raise ValueError("table has fewer than 3 finite entries")
    if u_points is None:
        if w.family == "table":
            u_points = w.params["u"]
        else:
            u_points = np.linspace(0.0, table.u_max, 2049)
    u = np.asarray(u_points, dtype=float)
    err = 0.0
    for k in range(0, u.size, chunk):
        uu = u[k: k + chunk]
        z = uu[:, None] * s[None, :] - v[None, :]
        j = np.argmax(z, axis=1)
        inner = (j > 0) & (j < s.size - 1)
        if inner.any():
            bic = z[np.arange(uu.size), j]
            err = max(err, float(np.abs(bic - w.phi(uu))[inner].max()))
    return err
