"""Tri-state verdicts and the finite-witness search shared by all condition checks."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .numerics import LogGrid


class Status(str, enum.Enum):
    HOLDS = "HoldsWithWitness"
    FAILS = "FailsWithCounterexample"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ConditionVerdict:
    name: str
    status: Status
    witness: dict[str, Any] | None = None
    counterexample: dict[str, Any] | None = None
    grid: Any = None
    note: str = ""
    evidence: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.status is Status.HOLDS and not self.witness:
            raise ValueError(f"{self.name}: HoldsWithWitness requires a witness")
        if self.status is Status.FAILS and not self.counterexample:
            raise ValueError(f"{self.name}: FailsWithCounterexample requires a counterexample")

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS

    @property
    def fails(self) -> bool:
        return self.status is Status.FAILS

    def to_dict(self) -> dict[str, Any]:
        if isinstance(self.grid, LogGrid):
            grid = self.grid.to_dict()
        else:
            grid = self.grid
        return {
            "name": self.name,
            "status": self.status.value,
            "witness": self.witness,
            "counterexample": self.counterexample,
            "grid": grid,
            "note": self.note,
            "evidence": self.evidence,
        }


def rel_tol(values: np.ndarray, tol: float) -> float:
    finite = np.abs(values[np.isfinite(values)])
    return tol * max(1.0, float(finite.max()) if finite.size else 1.0)


def tail_diverging(margin: np.ndarray, tol: float = 1e-9) -> tuple[bool, float]:
    """Does ``margin`` grow, without decelerating, over the last quarter?

    Returns (diverging, fitted slope per grid step). Used to tell a genuine
    asymptotic violation (log^2 t against (BMM), log t against cond4)
    from a bounded excursion.
    """
    m = np.asarray(margin, dtype=float)
    q = m[-max(8, m.size // 4):]
    if q.size < 4:
        return False, 0.0
    slope = float(np.polyfit(np.arange(q.size), q, 1)[0])
    d = np.diff(q)
    h = d.size // 2
    scale = rel_tol(q, tol)
    nondecaying = d[h:].mean() >= d[:h].mean() - scale
    return bool(slope > scale and q[-1] - q[0] > scale and nondecaying), slope


def search_witness(
    name: str,
    param: str,
    candidates: Sequence[float],
    sides: Callable[[float], tuple[np.ndarray, np.ndarray, np.ndarray]],
    grid: Any,
    tol: float = 1e-9,
) -> ConditionVerdict:
    """Decide ``exists param: lhs(t) <= rhs(t) for all t`` on a grid.

    ``sides(c)`` returns (t, lhs, rhs) for candidate ``c`` (points outside the
    evaluable range already dropped). A candidate certifies when the
    inequality holds at every point and the violation margin is not
    diverging along the tail. The verdict fails when every candidate's margin
    diverges and at least one is already violated on the grid.
    """
    per = []
    best_violation = None
    holds_with = None
    for c in candidates:
        t, lhs, rhs = sides(c)
        if t.size == 0:
            per.append({param: c, "points": 0})
            continue
        margin = lhs - rhs
        tol_c = rel_tol(np.concatenate([lhs, rhs]), tol)
        i = int(np.argmax(margin))
        diverging, slope = tail_diverging(margin, tol)
        per.append({param: c, "points": int(t.size), "maxMargin": float(margin[i]),
                    "tailSlope": slope, "diverging": diverging})
        if margin[i] > tol_c:
            best_violation = {param: c, "t": float(t[i]), "lhs": float(lhs[i]), "rhs": float(rhs[i]),
                              "margin": float(margin[i])}
        elif not diverging and holds_with is None:
            holds_with = {param: c, "maxMargin": float(margin[i]), "attainedAt": float(t[i])}
            break
    evidence = {"candidates": per}
    if holds_with is not None:
        return ConditionVerdict(name, Status.HOLDS, witness=holds_with, grid=grid, evidence=evidence)
    tested = [e for e in per if e.get("points")]
    if tested and len(tested) == len(candidates) and all(e["diverging"] for e in tested) and best_violation:
        return ConditionVerdict(
            name, Status.FAILS, counterexample=best_violation, grid=grid, evidence=evidence,
            note="violation margin grows along the grid tail for every candidate")
    return ConditionVerdict(name, Status.INCONCLUSIVE, grid=grid, evidence=evidence,
                            note="no candidate certified and failure not established")


def finite_or_none(x: float) -> float | None:
    return None if x is None or not math.isfinite(x) else float(x)
