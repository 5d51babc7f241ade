"""Passing between a weight omega and the sequence M_p = exp(phi*(p))."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .conjugation import conjugate_at
from .numerics import golden_max, grid_points
from .sequences import DEFAULT_P, WeightSequence
from .verdict import ConditionVerdict, Status
from .weights import WeightFunction, check_BMM

SANDWICH_TOL = 1e-6
SEMINORM_LAMBDAS = (0.25, 0.5, 1.0, 2.0, 4.0)
SEMINORM_J = tuple(range(1, 9))
_S_LOG_CAP = 700.0


class PreconditionError(ValueError):
    """An operation was asked to run outside the hypotheses it relies on."""


def _finite_prefix(values: np.ndarray) -> tuple[np.ndarray, bool]:
    inf = ~np.isfinite(values)
    if not inf.any():
        return values, False
    return values[: int(np.argmax(inf))], True


def sequence_from_weight(w: WeightFunction, P: int = DEFAULT_P) -> WeightSequence:
    """log M_p = phi*(p), p = 0..P; truncated (and flagged) at the last finite slope."""
    vals, _, U = conjugate_at(w, np.arange(P + 1, dtype=float))
    vals, inf_tail = _finite_prefix(vals)
    return WeightSequence(vals, f"seq({w.label})", inf_tail, {"route": "conjugate", "uMax": U})


def _product_sup(w: WeightFunction, p: int) -> float:
    """sup_{s >= 1} (p log s - omega(s)), searched directly over s."""
    if p == 0:
        return 0.0

    def f(s):
        return p * np.log(s) - w.omega_direct(s)

    L = 8.0
    while True:
        s = np.exp(np.linspace(0.0, L, 513))
        fs = f(s)
        i = int(np.argmax(fs))
        if i < s.size - 1 or fs[-1] <= fs[-2]:
            break
        if L >= _S_LOG_CAP:
            return math.inf
        L = min(2 * L, _S_LOG_CAP)
    lo, hi = s[max(i - 1, 0)], s[min(i + 1, s.size - 1)]
    best = float(fs[i])
    if hi > lo:
        res = minimize_scalar(lambda x: -float(f(x)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13 * hi})
        best = max(best, -float(res.fun))
    return best


def sequence_from_weight_product_form(w: WeightFunction, P: int = DEFAULT_P) -> WeightSequence:
    """log M_p = sup_s (p log s - omega(s)), computed without conjugation; cross-check oracle."""
    vals = np.array([_product_sup(w, p) for p in range(P + 1)])
    vals, inf_tail = _finite_prefix(vals)
    return WeightSequence(vals, f"seqprod({w.label})", inf_tail, {"route": "product"})


def _reliable_points(seq: WeightSequence, grid, factor: float = 1.0) -> tuple[np.ndarray, int]:
    pts = grid_points(grid)
    keep = pts * factor <= seq.reliable_t_max
    return pts[keep], int((~keep).sum())


def equivalence_sandwich(w: WeightFunction, seq: WeightSequence, grid,
                         tol: float = SANDWICH_TOL) -> tuple[float, ConditionVerdict]:
    """M(t) <= omega(t) <= M(t) + log t on the grid, plus the least A with omega <= 2M + A."""
    name = "sandwich"
    if seq.infinite_tail:
        raise PreconditionError("sandwich needs an untruncated sequence (omega0-type weights excluded)")
    t, skipped = _reliable_points(seq, grid)
    if t.size == 0:
        raise PreconditionError("no grid point inside the sequence's reliable range")
    M = seq.associated(t)
    o = w(t)
    lo = M - o
    hi = o - M - np.log(t)
    A = float(np.max(o - 2 * M))
    ev = {"pointsChecked": int(t.size), "skipped": skipped, "maxLowerGap": float(lo.max()),
          "maxUpperGap": float(hi.max())}
    for arr, side in ((lo, "M <= omega"), (hi, "omega <= M + log t")):
        if arr.max() > tol:
            i = int(np.argmax(arr))
            return A, ConditionVerdict(name, Status.FAILS, grid=grid, evidence=ev, counterexample={
                "t": float(t[i]), "side": side, "M": float(M[i]), "omega": float(o[i]), "gap": float(arr[i])})
    return A, ConditionVerdict(name, Status.HOLDS, witness={"A": A}, grid=grid, evidence=ev)


def bmm_transfer_check(w: WeightFunction, seq: WeightSequence, grid, H: float | None = None,
                       A: float | None = None) -> ConditionVerdict:
    """2M(t) <= M(H^2 t) + A/2 + 3H/2, given (BMM) for omega with constant H."""
    name = "bmm_transfer"
    if H is None:
        v = check_BMM(w, grid)
        if not v.holds:
            raise PreconditionError(f"(BMM) does not hold for {w.label} ({v.status.value})")
        H = float(v.witness["H"])
    if A is None:
        A, sv = equivalence_sandwich(w, seq, grid)
        if not sv.holds:
            raise PreconditionError("sandwich does not hold; no constant A available")
    t, skipped = _reliable_points(seq, grid, H * H)
    const = A / 2 + 1.5 * H
    lhs = 2 * seq.associated(t)
    rhs = seq.associated(H * H * t) + const
    margin = lhs - rhs
    ev = {"pointsChecked": int(t.size), "skipped": skipped, "maxMargin": float(margin.max()) if t.size else None}
    if t.size == 0:
        return ConditionVerdict(name, Status.INCONCLUSIVE, grid=grid, evidence=ev, note="no evaluable points")
    tol = 1e-9 * max(1.0, float(np.abs(rhs).max()))
    if margin.max() > tol:
        i = int(np.argmax(margin))
        return ConditionVerdict(name, Status.FAILS, grid=grid, evidence=ev, counterexample={
            "t": float(t[i]), "lhs": float(lhs[i]), "rhs": float(rhs[i])})
    return ConditionVerdict(name, Status.HOLDS, grid=grid, evidence=ev,
                            witness={"H": H, "H2": H * H, "A": A, "constant": const})


def _interior_max(e: np.ndarray) -> tuple[float, int] | None:
    if not np.all(np.isfinite(e)):
        return None
    i = int(np.argmax(e))
    if i == e.size - 1:
        return None
    return float(e[i]), i


def seminorm_equivalence_check(w: WeightFunction, seq: WeightSequence,
                               lambdas: Sequence[float] = SEMINORM_LAMBDAS,
                               js: Sequence[int] = SEMINORM_J) -> ConditionVerdict:
    """Two-sided comparison of exp(lambda phi*(p/lambda)) with j^{-p} M_p over p = 0..P.

    Forward: for every j some (lambda, c) with lambda phi*(p/lambda) <= log c - p log j + l_p.
    Reverse: for every lambda some (j, C) with l_p - p log j <= log C + lambda phi*(p/lambda).
    A constant counts only when the maximum over p is attained before the cutoff.
    """
    name = "seminorm_equivalence"
    if seq.infinite_tail:
        raise PreconditionError("seminorm comparison needs an untruncated sequence")
    ell = seq.normalized
    p = np.arange(ell.size, dtype=float)
    lam_phi = {}
    for lam in lambdas:
        vals, _, _ = conjugate_at(w, p / lam)
        lam_phi[lam] = lam * vals
    forward, reverse = [], []
    for j in js:
        row = {"j": j, "lambda": None, "c": None}
        for lam in lambdas:
            r = _interior_max(lam_phi[lam] + p * math.log(j) - ell)
            if r is not None:
                row.update({"lambda": lam, "c": math.exp(r[0]), "logc": r[0], "attainedAt": r[1]})
                break
        forward.append(row)
    for lam in lambdas:
        row = {"lambda": lam, "j": None, "C": None}
        for j in js:
            r = _interior_max(ell - p * math.log(j) - lam_phi[lam])
            if r is not None:
                row.update({"j": j, "C": math.exp(r[0]), "logC": r[0], "attainedAt": r[1]})
                break
        reverse.append(row)
    table = {"forward": forward, "reverse": reverse}
    grid = {"p": [0, seq.P]}
    if all(r["lambda"] is not None for r in forward) and all(r["j"] is not None for r in reverse):
        return ConditionVerdict(name, Status.HOLDS, witness=table, grid=grid)
    return ConditionVerdict(name, Status.INCONCLUSIVE, grid=grid, evidence=table,
                            note="some search exhausted its grid")


def r_epsilon(w: WeightFunction, eps: float, u_max: float = 60.0, n: int = 20001) -> float:
    """R_eps = sup_{t >= 0} (omega(t) - eps t), the constant in omega(t) <= eps t + R_eps."""
    if not eps > 0:
        raise ValueError("eps must be > 0")
    u = np.linspace(0.0, u_max, n)
    g = w.phi(u) - eps * np.exp(u)
    i = int(np.argmax(g))
    lo, hi = u[max(i - 1, 0)], u[min(i + 1, n - 1)]
    _, gx = golden_max(lambda x: w.phi(x) - eps * np.exp(x), lo, hi)
    return max(0.0, float(g[i]), float(gx[0]))


def condition_1_1_bound_shape(w: WeightFunction, seq: WeightSequence, eps: float,
                              tol: float = 1e-9) -> ConditionVerdict:
    """s^{s/2} M_p <= e^{R_eps} (eps e)^s M_{p+s} for all s + p <= P (no H factor).

    This is the explicit constant that o(t) growth of omega gives for the
    sequence exp(phi*(p)); with C = eps e it bounds the B of condition_1_1 by e^{R_eps}.
    """
    name = "condition_1_1_bound_shape"
    if seq.infinite_tail:
        raise PreconditionError("needs an untruncated sequence")
    R = r_epsilon(w, eps)
    n = seq.normalized
    P = seq.P
    s = np.arange(P + 1, dtype=float)
    lhs_s = (s / 2) * np.log(np.maximum(s, 1.0))
    worst, arg = -math.inf, (0, 0)
    for p in range(P + 1):
        m = P - p
        ex = lhs_s[: m + 1] + n[p] - R - s[: m + 1] * math.log(eps * math.e) - n[p: P + 1]
        i = int(np.argmax(ex))
        if ex[i] > worst:
            worst, arg = float(ex[i]), (i, p)
    grid = {"p": [0, P]}
    ev = {"R_eps": R, "eps": eps, "maxLogRatio": worst, "attainedAt": {"s": arg[0], "p": arg[1]}}
    if worst > tol * max(1.0, abs(R)):
        return ConditionVerdict(name, Status.FAILS, grid=grid, evidence=ev,
                                counterexample={"s": arg[0], "p": arg[1], "logExcess": worst})
    return ConditionVerdict(name, Status.HOLDS, grid=grid, evidence=ev,
                            witness={"R_eps": R, "Bbound": math.exp(R), "C": eps * math.e})
