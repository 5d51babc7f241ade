"""Koethe matrices a(j, k) = M(j sqrt k) and the series test for nuclearity.

Entries are exponents; the series summands exp(a(j,k) - a(m,k)) are bounded
by 1 for m >= j, so only those differences are ever exponentiated.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .numerics import DEFAULT_GRID, checkpoint_sums, geometric_k_sweep, grid_points
from .verdict import ConditionVerdict, Status
from .weights import check_condition4, check_condition4_at, iterate_condition4

log = logging.getLogger(__name__)

NU_MARGIN = 0.1
NU_CLAMP = 10.0
ANALYTIC_N = 3
DEFAULT_J_MAX = 8
DEFAULT_K_MAX = 10 ** 6
_ROW_CACHE = 12


class SeriesVerdict(str, enum.Enum):
    CONVERGENT = "Convergent"
    DIVERGENT = "Divergent"
    INCONCLUSIVE = "Inconclusive"


class NuclearityStatus(str, enum.Enum):
    NUCLEAR = "NuclearOnTestedRange"
    NOT_NUCLEAR = "NotNuclearEvidence"
    INCONCLUSIVE = "Inconclusive"


class PreconditionError(ValueError):
    pass


def _source_label(source) -> str:
    return getattr(source, "label", None) or getattr(source, "__name__", "custom")


class KoetheMatrix:
    """Lazily evaluated exponents a(j, k) = M(j k^{1/2}).

    ``source`` is a WeightFunction (the Lambda_omega matrix), a WeightSequence
    (Lambda_(M_p), through its associated function) or any vectorized map
    t -> M(t) with M(0) = 0. Rows are memoized; requests beyond the source's
    reliable range are refused.
    """

    def __init__(self, source, j_max: int = DEFAULT_J_MAX, k_max: int = DEFAULT_K_MAX, label: str | None = None):
        if j_max < 1 or k_max < 1:
            raise ValueError("j_max and k_max must be >= 1")
        self.source = source
        self.j_max = int(j_max)
        self.k_max = int(k_max)
        self.label = label or _source_label(source)
        self.reliable_t_max = float(getattr(source, "reliable_t_max", math.inf))
        self._rows: OrderedDict[tuple[int, int], np.ndarray] = OrderedDict()
        self._lock = threading.Lock()
        if self.reliable_t_max < self.j_max * math.sqrt(self.k_max):
            raise PreconditionError(
                f"{self.label}: associated function reliable only up to t = {self.reliable_t_max:.6g}, "
                f"matrix needs t = {self.j_max * math.sqrt(self.k_max):.6g}")
        self.invariant_violations = self._sample_invariants()
        for msg in self.invariant_violations:
            log.warning("%s: %s", self.label, msg)

    def M(self, t) -> np.ndarray:
        return np.asarray(self.source(np.asarray(t, dtype=float)), dtype=float)

    def max_index(self, K: int) -> int:
        """Largest row index evaluable up to column K."""
        if math.isinf(self.reliable_t_max):
            return 1 << 30
        return int(self.reliable_t_max / math.sqrt(max(K, 1)))

    def exponent(self, j: int, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        t = j * np.sqrt(k)
        if t.size and t.max() > self.reliable_t_max:
            raise PreconditionError(f"{self.label}: t = {t.max():.6g} beyond reliable range {self.reliable_t_max:.6g}")
        out = self.M(t)
        return np.where(k > 0, out, 0.0)

    def row(self, j: int, K: int) -> np.ndarray:
        """a(j, 0..K), memoized."""
        key = (int(j), int(K))
        with self._lock:
            if key in self._rows:
                self._rows.move_to_end(key)
                return self._rows[key]
        r = self.exponent(j, np.arange(K + 1))
        r.flags.writeable = False
        with self._lock:
            self._rows[key] = r
            while len(self._rows) > _ROW_CACHE:
                self._rows.popitem(last=False)
        return r

    def _sample_invariants(self) -> list[str]:
        ks = geometric_k_sweep(self.k_max, head=64)[1:]
        js = sorted({1, 2, max(1, self.j_max // 2), self.j_max})
        rows = {j: self.exponent(j, ks) for j in js}
        out = []
        for j in js:
            if np.any(np.diff(rows[j]) < -1e-9 * max(1.0, np.abs(rows[j]).max())):
                out.append(f"a({j}, k) decreases in k")
        for j, m in zip(js, js[1:]):
            d = rows[m] - rows[j]
            if np.any(d < -1e-9):
                out.append(f"a(j, k) decreases from j={j} to j={m}")
            if np.any(np.diff(d) < -1e-9 * max(1.0, np.abs(d).max())):
                out.append(f"a({m}, k) - a({j}, k) not nondecreasing in k")
        return out


def build_matrix(source, j_max: int = DEFAULT_J_MAX, k_max: int = DEFAULT_K_MAX) -> KoetheMatrix:
    return KoetheMatrix(source, j_max, k_max)


@dataclass(frozen=True)
class SeriesTest:
    j: int
    m: int
    K: int
    partial_sum: float
    nu: float
    verdict: SeriesVerdict
    trace_k: np.ndarray = field(repr=False)
    trace_exponent: np.ndarray = field(repr=False)
    trace_sum: np.ndarray = field(repr=False)
    superpolynomial: bool = False

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "exponent", "partial_sum"])
        for k, e, s in zip(self.trace_k, self.trace_exponent, self.trace_sum):
            w.writerow([int(k), format(float(e), ".17g"), format(float(s), ".17g")])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def decay_exponent(mat: KoetheMatrix, j: int, m: int, K: int, n: int = 64) -> tuple[float, bool]:
    """nu in summand ~ k^{-nu}, by least squares of the exponent against log k over [K/10, K]."""
    lo = max(1, K // 10)
    ks = np.unique(np.geomspace(lo, K, n).round().astype(np.int64))
    e = mat.exponent(j, ks) - mat.exponent(m, ks)
    slope = float(np.polyfit(np.log(ks), e, 1)[0])
    nu = -slope
    return (NU_CLAMP, True) if nu > NU_CLAMP else (nu, False)


def classify_nu(nu: float) -> SeriesVerdict:
    if nu >= 1 + NU_MARGIN:
        return SeriesVerdict.CONVERGENT
    if nu <= 1 - NU_MARGIN:
        return SeriesVerdict.DIVERGENT
    return SeriesVerdict.INCONCLUSIVE


def gp_series_test(mat: KoetheMatrix, j: int, m: int, K: int | None = None) -> SeriesTest:
    """Partial sum and decay exponent of sum_k exp(a(j,k) - a(m,k))."""
    K = mat.k_max if K is None else int(K)
    if m < j:
        raise ValueError(f"need m >= j, got j={j}, m={m}")
    if K < 10 or K > mat.k_max:
        raise ValueError(f"K must lie in [10, {mat.k_max}]")
    e = mat.row(j, K) - mat.row(m, K)
    ks = geometric_k_sweep(K)
    sums = checkpoint_sums(e, ks)
    nu, superpoly = decay_exponent(mat, j, m, K)
    return SeriesTest(j, m, K, sums[-1], nu, classify_nu(nu), ks, e[ks], np.asarray(sums), superpoly)


@dataclass(frozen=True)
class SupBound:
    A_hat: float
    attained_k: int
    at_boundary: bool


def sup_bound_diagnostic(mat: KoetheMatrix, j: int, m: int, K: int | None = None) -> SupBound:
    """sup over 1 <= k <= K of k exp(a(j,k) - a(m,k))."""
    K = mat.k_max if K is None else int(K)
    if m <= j:
        raise ValueError(f"need m > j, got j={j}, m={m}")
    e = mat.row(j, K)[1:] - mat.row(m, K)[1:]
    k = np.arange(1, K + 1)
    z = np.log(k) + e
    i = int(np.argmax(z))
    return SupBound(math.exp(float(z[i])), int(k[i]), int(k[i]) == K)


def monotone_difference_check(mat: KoetheMatrix, j: int, m: int, K: int | None = None,
                              tol: float = 1e-9) -> ConditionVerdict:
    """k -> a(m,k) - a(j,k) nondecreasing on the geometric k-sweep."""
    name = "monotone_difference"
    K = mat.k_max if K is None else int(K)
    if m <= j:
        raise ValueError(f"need m > j, got j={j}, m={m}")
    ks = geometric_k_sweep(K)[1:]
    d = mat.exponent(m, ks) - mat.exponent(j, ks)
    step = np.diff(d)
    bad = step < -tol * np.maximum(1.0, np.abs(d[1:]))
    grid = {"k": [1, K], "points": int(ks.size)}
    if bad.any():
        i = int(np.argmax(bad))
        return ConditionVerdict(name, Status.FAILS, grid=grid, counterexample={
            "j": j, "m": m, "k": int(ks[i + 1]), "kPrev": int(ks[i]),
            "difference": float(d[i + 1]), "differencePrev": float(d[i])})
    return ConditionVerdict(name, Status.HOLDS, grid=grid,
                            witness={"j": j, "m": m, "points": int(ks.size), "minIncrement": float(step.min())})


def condition4_from_gp(mat: KoetheMatrix, j: int, m: int, K: int | None = None,
                       grid=DEFAULT_GRID) -> tuple[float, ConditionVerdict]:
    """Rebuild a cond4 witness from a convergent pair (j, m).

    H_hat = max((m/j)(j+1), log(j^2 A) + M(1)), with A the sup bound; then
    cond4 is verified on the grid with that single H.
    """
    K = mat.k_max if K is None else int(K)
    test = gp_series_test(mat, j, m, K)
    if test.verdict is not SeriesVerdict.CONVERGENT:
        raise PreconditionError(f"pair (j={j}, m={m}) is {test.verdict.value}, not Convergent")
    sb = sup_bound_diagnostic(mat, j, m, K)
    if sb.at_boundary:
        raise PreconditionError("sup bound attained at K; A estimate unreliable")
    H_hat = max(m / j * (j + 1), math.log(j * j * sb.A_hat) + float(mat.M(1.0)))
    v = check_condition4_at(_MapView(mat), grid, H_hat, name="condition4_from_gp")
    return H_hat, v


class _MapView:
    """Exposes a matrix's source as a vectorized map with its reliable range."""

    def __init__(self, mat: KoetheMatrix):
        self._mat = mat
        self.reliable_t_max = mat.reliable_t_max
        self.label = mat.label

    def __call__(self, t):
        return self._mat.M(t)


@dataclass
class JResult:
    j: int
    m: int | None
    nu: float | None
    sup_bound: float | None
    route: str
    series: str
    analytic: str
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"j": self.j, "m": self.m, "nu": self.nu, "supBound": self.sup_bound, "route": self.route,
                "series": self.series, "analytic": self.analytic, "detail": self.detail}


@dataclass
class NuclearityReport:
    source: str
    per_j: list[JResult]
    status: NuclearityStatus
    analytic: dict[str, Any]
    routes_agree: bool | None
    K: int
    m_search_cap: int

    def to_dict(self) -> dict[str, Any]:
        return {"source": self.source, "perJ": [r.to_dict() for r in self.per_j], "status": self.status.value,
                "routesAgree": self.routes_agree, "analytic": self.analytic, "K": self.K,
                "mSearchCap": self.m_search_cap}


def _series_search(mat: KoetheMatrix, j: int, cap: int, K: int) -> tuple[SeriesTest | None, SeriesTest | None]:
    """Smallest m in (j, cap] classified Convergent, by galloping then bisection.

    Candidates are screened on the decay exponent alone; the full series
    test is run only for the pair reported. Returns (convergent test or
    None, test at the largest m examined).
    """
    if cap <= j:
        return None, None
    cache: dict[int, bool] = {}

    def converges(m: int) -> bool:
        if m not in cache:
            cache[m] = classify_nu(decay_exponent(mat, j, m, K)[0]) is SeriesVerdict.CONVERGENT
        return cache[m]

    bad, step, hit = j, 1, None
    while j + step <= cap:
        if converges(j + step):
            hit = j + step
            break
        bad, step = j + step, step * 2
    if hit is None:
        if not converges(cap):
            return None, gp_series_test(mat, j, cap, K)
        hit = cap
    while hit - bad > 1:
        mid = (bad + hit) // 2
        if converges(mid):
            hit = mid
        else:
            bad = mid
    full = gp_series_test(mat, j, hit, K)
    return full, full


def _analytic_route(mat: KoetheMatrix, js: Sequence[int], K: int, grid) -> tuple[dict, dict[int, dict]]:
    view = _MapView(mat)
    v4 = check_condition4(view, grid)
    info: dict[str, Any] = {"condition4": v4.status.value, "N": ANALYTIC_N}
    per: dict[int, dict] = {}
    if v4.fails:
        info["counterexample"] = v4.counterexample
        for j in js:
            per[j] = {"status": "not_nuclear"}
        return info, per
    if not v4.holds:
        for j in js:
            per[j] = {"status": "undecided"}
        return info, per
    H = float(v4.witness["H"])
    info["H"] = H
    ks = geometric_k_sweep(K)[1:]
    for j in js:
        m_an = math.ceil(H ** ANALYTIC_N * j - 1e-9)
        if m_an > mat.max_index(K):
            per[j] = {"status": "undecided", "m": m_an, "note": "m beyond reliable range"}
            continue
        t_sweep = j * np.sqrt(ks)
        pts = np.union1d(grid_points(grid), t_sweep)
        it = iterate_condition4(view, pts, H, ANALYTIC_N)
        if it.skipped and np.any(H ** ANALYTIC_N * t_sweep > view.reliable_t_max):
            per[j] = {"status": "undecided", "m": m_an, "note": "iterate range truncated"}
            continue
        e = mat.exponent(j, ks) - mat.exponent(m_an, ks)
        bound = it.C - ANALYTIC_N * math.log(j) - ANALYTIC_N / 2 * np.log(ks)
        slack = 1e-9 * np.maximum(1.0, np.abs(bound))
        ok = bool(np.all(e <= bound + slack))
        per[j] = {"status": "nuclear" if ok else "undecided", "m": m_an, "C": it.C,
                  "maxExcess": float(np.max(e - bound))}
    return info, per


def gp_nuclearity(mat: KoetheMatrix, j_list: Sequence[int] | None = None, m_search_cap: int | None = None,
                  K: int | None = None, grid=DEFAULT_GRID) -> NuclearityReport:
    """Decide nuclearity of the Koethe space by the series test and by cond4."""
    K = mat.k_max if K is None else int(K)
    js = list(j_list) if j_list is not None else list(range(1, mat.j_max + 1))
    if any(j < 1 or j > mat.j_max for j in js):
        raise ValueError(f"j_list must lie in 1..{mat.j_max}")
    cap = 16 * mat.j_max if m_search_cap is None else int(m_search_cap)
    cap = min(cap, mat.max_index(K))
    info, analytic = _analytic_route(mat, js, K, grid)
    per_j = []
    disagree = False
    both_decisive = 0
    for j in js:
        hit, last = _series_search(mat, j, cap, K)
        detail: dict[str, Any] = {}
        if hit is not None:
            sb = sup_bound_diagnostic(mat, j, hit.m, K)
            series, m, nu, sup = "nuclear", hit.m, hit.nu, sb.A_hat
            detail["supAttainedAt"] = sb.attained_k
            detail["superpolynomial"] = hit.superpolynomial
        elif last is not None:
            sb = sup_bound_diagnostic(mat, j, last.m, K)
            grows = last.verdict is SeriesVerdict.DIVERGENT and sb.at_boundary
            series = "not_nuclear" if grows else "undecided"
            m, nu, sup = None, last.nu, sb.A_hat
            detail.update({"mTested": last.m, "supAttainedAt": sb.attained_k})
        else:
            series, m, nu, sup = "undecided", None, None, None
        an = analytic[j]
        if an.get("m") is not None:
            detail["analyticM"] = an["m"]
        if series != "undecided" and an["status"] != "undecided":
            both_decisive += 1
            disagree |= series != an["status"]
        certified = [r for r, s in (("series", series), ("analytic", an["status"])) if s == "nuclear"]
        route = "both" if len(certified) == 2 else (certified[0] if certified else "none")
        if m is None and an["status"] == "nuclear":
            m = an["m"]
        per_j.append(JResult(j, m, nu, sup, route, series, an["status"], detail))
    if disagree:
        status = NuclearityStatus.INCONCLUSIVE
    elif all(r.route != "none" for r in per_j):
        status = NuclearityStatus.NUCLEAR
    elif any(r.series == "not_nuclear" for r in per_j):
        status = NuclearityStatus.NOT_NUCLEAR
    else:
        status = NuclearityStatus.INCONCLUSIVE
    agree = None if both_decisive == 0 else not disagree
    return NuclearityReport(mat.label, per_j, status, info, agree, K, cap)
