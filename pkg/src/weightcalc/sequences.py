"""Weight sequences M_p (stored as log M_p) and their associated functions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .numerics import ExtendedReal, LogGrid, grid_points
from .verdict import ConditionVerdict, Status

DEFAULT_P = 256
M2_A_CANDIDATES = tuple(10.0 ** a for a in range(7))
M2_H_CANDIDATES = (1.25, 1.5, 2.0, 4.0, 8.0, 16.0)
COND11_H_CANDIDATES = (1.5, 2.0, 4.0, 8.0)
SEQ_TOL = 1e-12


@dataclass(frozen=True)
class WeightSequence:
    """log M_p for p = 0..P.

    ``infinite_tail`` marks a sequence whose M_p is +inf beyond the last
    stored index (the omega_0 case); its associated function is then exact
    for every t and never flagged as truncated.
    """

    log_values: np.ndarray
    label: str = ""
    infinite_tail: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        lv = np.array(self.log_values, dtype=float)
        if lv.ndim != 1 or lv.size < 1:
            raise ValueError("log_values must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(lv)):
            raise ValueError("log_values must be finite; truncate at the last finite index")
        if lv.size < 9 and not self.infinite_tail:
            raise ValueError(f"truncation order P must be >= 8, got {lv.size - 1}")
        lv.flags.writeable = False
        object.__setattr__(self, "log_values", lv)

    @property
    def P(self) -> int:
        return self.log_values.size - 1

    @cached_property
    def normalized(self) -> np.ndarray:
        """log(M_p / M_0)."""
        out = self.log_values - self.log_values[0]
        out.flags.writeable = False
        return out

    @cached_property
    def _hull(self) -> tuple[np.ndarray, np.ndarray]:
        # lower convex hull of (p, l_p); M only sees the log-convex minorant
        n = self.normalized
        hull: list[int] = []
        for p in range(n.size):
            while len(hull) >= 2:
                a, b = hull[-2], hull[-1]
                if (n[b] - n[a]) * (p - a) >= (n[p] - n[a]) * (b - a):
                    hull.pop()
                else:
                    break
            hull.append(p)
        v = np.array(hull)
        slopes = np.diff(n[v]) / np.diff(v)
        return v, slopes

    @property
    def reliable_t_max(self) -> float:
        """Largest t at which the maximizing index in M(t) is below P."""
        if self.infinite_tail:
            return math.inf
        _, slopes = self._hull
        if slopes.size == 0:
            return 1.0
        return float(np.exp(min(slopes[-1], 700.0)))

    def associated(self, t) -> np.ndarray:
        """Vectorized M(t) = max_p (p log t - log(M_p/M_0)); M(t) = 0 for t <= 0."""
        t = np.asarray(t, dtype=float)
        v, slopes = self._hull
        n = self.normalized
        with np.errstate(divide="ignore"):
            tau = np.log(np.where(t > 0, t, 1.0))
        idx = np.searchsorted(slopes, tau, side="left")
        p = v[idx]
        val = p * tau - n[p]
        val = np.where(t > 0, np.maximum(val, 0.0), 0.0)
        return val

    __call__ = associated

    def to_json(self) -> dict:
        out = {"label": self.label, "logM": [float(x) for x in self.log_values]}
        if self.infinite_tail:
            out["infiniteTail"] = True
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "WeightSequence":
        if not isinstance(obj, dict) or "logM" not in obj:
            raise ValueError('sequence JSON must be an object with a "logM" array')
        return cls(np.asarray(obj["logM"], dtype=float), str(obj.get("label", "")),
                   bool(obj.get("infiniteTail", False)))

    @classmethod
    def load(cls, path: str | Path) -> "WeightSequence":
        return cls.from_json(json.loads(Path(path).read_text()))


class AssociatedValue(NamedTuple):
    value: ExtendedReal
    p: int
    truncated: bool


def associated_function(seq: WeightSequence, t: float) -> AssociatedValue:
    """M(t) by exhaustive scan over p = 0..P, with the maximizing index.

    ``truncated`` is set when the maximum sits at the cutoff P, where the
    true supremum may be larger.
    """
    if not t > 0:
        raise ValueError(f"associated function needs t > 0, got {t}")
    n = seq.normalized
    terms = np.arange(n.size) * math.log(t) - n
    p = int(np.argmax(terms))
    return AssociatedValue(ExtendedReal(max(float(terms[p]), 0.0)), p,
                           p == seq.P and not seq.infinite_tail)


@dataclass(frozen=True)
class AssociatedFunctionView:
    source: WeightSequence
    grid: LogGrid
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", self.source.associated(self.grid.points))

    def monotone_defect(self) -> float:
        return float(max(0.0, -np.diff(self.values).min()))

    def convexity_defect(self) -> float:
        """Largest negative second difference of M(e^u) on the (log-uniform) grid."""
        if self.values.size < 3:
            return 0.0
        return float(max(0.0, -np.diff(self.values, 2).min()))


def gevrey_sequence(s: float, P: int = DEFAULT_P) -> WeightSequence:
    if s < 1:
        raise ValueError(f"Gevrey order must be >= 1, got {s}")
    if P < 8:
        raise ValueError(f"P must be >= 8, got {P}")
    logs = np.concatenate([[0.0], np.cumsum(np.log(np.arange(1, P + 1, dtype=float)))])
    return WeightSequence(s * logs, f"gevrey:{s:g}")


def _p_grid(seq: WeightSequence) -> dict:
    return {"p": [0, seq.P]}


def check_lower_root_bound(seq: WeightSequence) -> ConditionVerdict:
    """(M_p/M_0)^{1/p} bounded below by a positive constant."""
    name = "lower_root_bound"
    n = seq.normalized
    if seq.P < 1:
        return ConditionVerdict(name, Status.INCONCLUSIVE, grid=_p_grid(seq), note="no p >= 1 stored")
    p = np.arange(1, n.size)
    log_roots = n[1:] / p
    k = int(np.argmin(log_roots))
    c = math.exp(log_roots[k])
    ev = {"minAt": int(p[k]), "logRootAtP": float(log_roots[-1])}
    if k == log_roots.size - 1 and log_roots.size > 1 and log_roots[-1] < log_roots[-2]:
        return ConditionVerdict(name, Status.INCONCLUSIVE, grid=_p_grid(seq), evidence=ev,
                                note="running minimum still decreasing at the cutoff")
    return ConditionVerdict(name, Status.HOLDS, witness={"c": c, "p": int(p[k])}, grid=_p_grid(seq),
                            evidence=ev)


def check_M1(seq: WeightSequence) -> ConditionVerdict:
    """Logarithmic convexity M_p^2 <= M_{p-1} M_{p+1}."""
    name = "M1"
    n = seq.normalized
    if seq.P < 2:
        return ConditionVerdict(name, Status.HOLDS, witness={"checkedUpTo": seq.P}, grid=_p_grid(seq),
                                note="fewer than three stored terms; vacuous")
    lhs = 2 * n[1:-1]
    rhs = n[:-2] + n[2:]
    slack = SEQ_TOL * np.maximum(1.0, np.abs(n[2:]))
    bad = np.nonzero(lhs > rhs + slack)[0]
    if bad.size:
        p = int(bad[0]) + 1
        return ConditionVerdict(name, Status.FAILS, grid=_p_grid(seq),
                                counterexample={"p": p, "lhs": float(lhs[p - 1]), "rhs": float(rhs[p - 1])})
    return ConditionVerdict(name, Status.HOLDS, witness={"checkedUpTo": seq.P}, grid=_p_grid(seq))


def _growth_failure(name: str, seq: WeightSequence, g: np.ndarray, p_idx: np.ndarray) -> ConditionVerdict:
    """Shared (A, H) search for ``g_p <= log A + p log H`` over the fixed witness grid."""
    slack = SEQ_TOL * np.maximum(1.0, np.abs(g))
    for A in M2_A_CANDIDATES:
        for H in M2_H_CANDIDATES:
            if np.all(g <= math.log(A) + p_idx * math.log(H) + slack):
                return ConditionVerdict(name, Status.HOLDS, witness={"A": A, "H": H}, grid=_p_grid(seq))
    A, H = M2_A_CANDIDATES[-1], M2_H_CANDIDATES[-1]
    margin = g - (math.log(A) + p_idx * math.log(H))
    first = int(np.argmax(margin > slack))
    pos = p_idx > 0
    ratio = g[pos] / p_idx[pos]
    q = ratio[-max(4, ratio.size // 4):]
    growing = bool(np.all(np.diff(q) >= -SEQ_TOL * np.abs(q[1:]).max()) and q[-1] > q[0])
    ev = {"tailRatio": float(ratio[-1]), "ratioGrowing": growing}
    if growing and margin[-1] > 0:
        return ConditionVerdict(
            name, Status.FAILS, grid=_p_grid(seq), evidence=ev,
            counterexample={"p": int(p_idx[first]), "A": A, "H": H, "lhs": float(g[first]),
                            "rhs": float(math.log(A) + p_idx[first] * math.log(H))},
            note="required growth rate still increasing at cutoff")
    return ConditionVerdict(name, Status.INCONCLUSIVE, grid=_p_grid(seq), evidence=ev,
                            note="no (A, H) in the witness grid and no growing tail")


def check_M2prime(seq: WeightSequence) -> ConditionVerdict:
    """Stability under differential operators: M_{p+1} <= A H^p M_p."""
    if seq.P < 4:
        raise ValueError("check_M2prime needs P >= 4")
    n = seq.normalized
    return _growth_failure("M2prime", seq, np.diff(n), np.arange(seq.P, dtype=float))


def check_M2(seq: WeightSequence) -> ConditionVerdict:
    """Stability under ultradifferential operators: M_p <= A H^p min_q M_q M_{p-q}."""
    if seq.P < 4:
        raise ValueError("check_M2 needs P >= 4")
    n = seq.normalized
    g = np.array([n[p] - np.min(n[: p + 1] + n[p::-1]) for p in range(n.size)])
    return _growth_failure("M2", seq, g, np.arange(n.size, dtype=float))


def condition_1_1_log_bound(seq: WeightSequence, C: float, H: float) -> tuple[float, int, int]:
    """max over s + p <= P of log(s^{s/2} M_p / (C^s H^{s+p} M_{s+p})), with its (s, p)."""
    n = seq.normalized
    P = seq.P
    s = np.arange(P + 1, dtype=float)
    ss = (s / 2) * np.log(np.maximum(s, 1.0)) - s * math.log(C)
    best, arg = -math.inf, (0, 0)
    for p in range(P + 1):
        m = P - p
        e = ss[: m + 1] + n[p] - (s[: m + 1] + p) * math.log(H) - n[p: P + 1]
        i = int(np.argmax(e))
        if e[i] > best:
            best, arg = float(e[i]), (i, p)
    return best, arg[0], arg[1]


def check_condition_1_1(seq: WeightSequence, C: float = 1.0) -> ConditionVerdict:
    """s^{s/2} M_p <= B C^s H^{s+p} M_{s+p} on the sweep s + p <= P."""
    name = "condition_1_1"
    if not C > 0:
        raise ValueError(f"C must be > 0, got {C}")
    per = []
    for H in COND11_H_CANDIDATES:
        logB, s, p = condition_1_1_log_bound(seq, C, H)
        interior = s + p < seq.P
        per.append({"H": H, "logB": logB, "s": s, "p": p, "interior": interior})
        if interior:
            return ConditionVerdict(name, Status.HOLDS, grid=_p_grid(seq), evidence={"candidates": per},
                                    witness={"H": H, "B": math.exp(logB), "logB": logB, "C": C,
                                             "attainedAt": {"s": s, "p": p}})
    return ConditionVerdict(name, Status.INCONCLUSIVE, grid=_p_grid(seq), evidence={"candidates": per},
                            note="B attained on the boundary s + p = P for every H")


def associated_on(seq: WeightSequence, grid) -> np.ndarray:
    return seq.associated(grid_points(grid))
