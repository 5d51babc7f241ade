"""Suite orchestration behind the command line: subjects, requests, reports and curves."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .bridge import (condition_1_1_bound_shape, equivalence_sandwich, bmm_transfer_check,
                     seminorm_equivalence_check, sequence_from_weight, sequence_from_weight_product_form)
from .conjugation import biconjugate_check, young_conjugate
from .koethe import KoetheMatrix, gp_nuclearity, monotone_difference_check
from .numerics import LogGrid, geometric_k_sweep, make_log_grid
from .sequences import (DEFAULT_P, WeightSequence, check_condition_1_1, check_lower_root_bound, check_M1,
                        check_M2, check_M2prime, gevrey_sequence)
from .verdict import ConditionVerdict, Status
from .weights import (WeightFunction, check_alpha, check_beta, check_BMM, check_bmm_like, check_condition4,
                      check_delta, check_gamma)

log = logging.getLogger(__name__)

SUITES = ("axioms", "bmm", "cond4", "conjugate", "bridge", "nuclearity")
CURVES = ("omega", "M", "phistar", "summand")
REFUSED = "Refused"
SKIPPED = "Skipped"
BRIDGE_P = 64
BRIDGE_TOL = 1e-6
CONJ_TOL = 1e-9


class InputError(ValueError):
    """Bad subject, request or output location; the CLI maps it to exit code 2."""


def _number(text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"not a number: {text!r}") from exc


def parse_family(spec: str) -> WeightFunction:
    """omega0 | power:<a> | log^<a> (also log<a>, log:<a>) | gevrey:<s> | table:<path>."""
    s = spec.strip()
    try:
        if s == "omega0":
            return WeightFunction.omega0()
        if s.startswith("power:"):
            return WeightFunction.power(_number(s[6:]))
        m = re.fullmatch(r"log(?:\^|:)?(.+)", s)
        if m:
            return WeightFunction.loga(_number(m.group(1)))
        if s.startswith("gevrey:"):
            return WeightFunction.gevrey_weight(_number(s[7:]))
        if s.startswith("table:"):
            return WeightFunction.load_table(s[6:])
    except InputError:
        raise
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot build weight {spec!r}: {exc}") from exc
    raise InputError(f"unknown family {spec!r}; expected omega0, power:<a>, log^<a>, gevrey:<s> or table:<path>")


def parse_sequence(spec: str, P: int = DEFAULT_P) -> WeightSequence:
    """gevreyseq:<s> | file:<path> (JSON {"label", "logM"})."""
    s = spec.strip()
    try:
        if s.startswith("gevreyseq:"):
            return gevrey_sequence(_number(s[10:]), P)
        if s.startswith("file:"):
            return WeightSequence.load(s[5:])
    except InputError:
        raise
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot load sequence {spec!r}: {exc}") from exc
    raise InputError(f"unknown sequence {spec!r}; expected gevreyseq:<s> or file:<path>")


def parse_suites(text: str) -> tuple[str, ...]:
    names = [x.strip() for x in text.split(",") if x.strip()]
    if not names:
        raise InputError("suite list is empty")
    out: list[str] = []
    for n in names:
        if n == "all":
            picks = SUITES
        elif n in SUITES:
            picks = (n,)
        else:
            raise InputError(f"unknown suite {n!r}; choose from {', '.join(SUITES + ('all',))}")
        out.extend(p for p in picks if p not in out)
    return tuple(sorted(out, key=SUITES.index))


@dataclass(frozen=True)
class AnalysisRequest:
    subject: str
    kind: str = "weight"
    suites: tuple[str, ...] = SUITES
    t_min: float = 1.0
    t_max: float = 1e8
    grid_n: int = 512
    j_max: int = 8
    k_max: int = 10 ** 6
    P: int = DEFAULT_P
    s_max: float = 64.0
    slope_n: int = 4096

    def __post_init__(self):
        if self.kind not in ("weight", "sequence"):
            raise InputError(f"subject kind must be weight or sequence, got {self.kind!r}")
        if not self.suites:
            raise InputError("suite list is empty")
        bad = [s for s in self.suites if s not in SUITES]
        if bad:
            raise InputError(f"unknown suites {bad}")
        if self.j_max < 1 or self.k_max < 10:
            raise InputError("need jmax >= 1 and kmax >= 10")
        if self.P < 8:
            raise InputError("P must be >= 8")
        if not self.s_max > 0 or self.slope_n < 3:
            raise InputError("need smax > 0 and at least 3 slope points")
        self.grid  # validates the LogGrid invariants

    @property
    def grid(self) -> LogGrid:
        try:
            return make_log_grid(self.t_min, self.t_max, self.grid_n)
        except ValueError as exc:
            raise InputError(str(exc)) from exc

    def load_subject(self) -> WeightFunction | WeightSequence:
        if self.kind == "weight":
            return parse_family(self.subject)
        return parse_sequence(self.subject, self.P)

    def to_dict(self) -> dict[str, Any]:
        return {"suites": list(self.suites), "grid": self.grid.to_dict(),
                "koethe": {"jMax": self.j_max, "kMax": self.k_max}, "P": self.P,
                "conjugate": {"sMax": self.s_max, "slopes": self.slope_n}}


def _entry(suite: str, v: ConditionVerdict) -> dict[str, Any]:
    d = v.to_dict()
    d["check"] = d.pop("name")
    d["suite"] = suite
    return d


def _special(suite: str, check: str, status: str, note: str) -> dict[str, Any]:
    return {"suite": suite, "check": check, "status": status, "witness": None, "counterexample": None,
            "grid": None, "note": note, "evidence": {}}


def _guard(suite: str, check: str, fn: Callable[[], ConditionVerdict | list[dict]]) -> list[dict]:
    """Run one check; hypotheses that do not apply become a Refused entry, not an error."""
    try:
        out = fn()
    except ValueError as exc:
        log.info("%s/%s refused: %s", suite, check, exc)
        return [_special(suite, check, REFUSED, str(exc))]
    return out if isinstance(out, list) else [_entry(suite, out)]


def _conjugate_entries(w: WeightFunction, req: AnalysisRequest) -> list[dict]:
    tab = young_conjugate(w, req.s_max, req.slope_n)
    defects = tab.invariant_defects()
    grid = {"sMax": req.s_max, "slopes": req.slope_n, "uMax": tab.u_max}
    worst = max(defects, key=defects.get)
    if defects[worst] <= CONJ_TOL:
        inv = ConditionVerdict("conjugate_invariants", Status.HOLDS, grid=grid,
                               witness={"finiteUpTo": tab.finite_up_to, **defects})
    else:
        inv = ConditionVerdict("conjugate_invariants", Status.FAILS, grid=grid, evidence=defects,
                               counterexample={"invariant": worst, "defect": defects[worst]})
    out = [_entry("conjugate", inv)]
    try:
        err = biconjugate_check(w, tab)
    except ValueError as exc:
        return out + [_special("conjugate", "biconjugate", REFUSED, str(exc))]
    # phi** from a slope table exceeds phi by at most (slope gap) x (gap between supporting points)
    fin = tab.finite_mask
    ds = np.diff(tab.slopes[fin])
    du = np.diff(np.asarray(tab.argmax_u)[fin])
    bound = float(np.max(ds * du)) + CONJ_TOL
    ev = {"maxError": err, "bound": bound}
    if err <= bound:
        bic = ConditionVerdict("biconjugate", Status.HOLDS, grid=grid, witness=ev)
    else:
        bic = ConditionVerdict("biconjugate", Status.FAILS, grid=grid, counterexample=ev)
    return out + [_entry("conjugate", bic)]


def _bridge_identity(w: WeightFunction, seq: WeightSequence, P: int) -> ConditionVerdict:
    prod = sequence_from_weight_product_form(w, P)
    n = min(seq.P, prod.P) + 1
    diff = np.abs(seq.log_values[:n] - prod.log_values[:n])
    i = int(np.argmax(diff))
    grid = {"p": [0, n - 1]}
    ev = {"maxDiff": float(diff[i]), "at": i, "conjugateP": seq.P, "productP": prod.P}
    if diff[i] <= BRIDGE_TOL and seq.infinite_tail == prod.infinite_tail:
        return ConditionVerdict("bridge_identity", Status.HOLDS, grid=grid, witness=ev)
    return ConditionVerdict("bridge_identity", Status.FAILS, grid=grid, counterexample=ev)


def _bridge_entries(w: WeightFunction, req: AnalysisRequest) -> list[dict]:
    grid = req.grid
    seq = sequence_from_weight(w, req.P)
    out = _guard("bridge", "bridge_identity", lambda: _bridge_identity(w, seq, min(BRIDGE_P, req.P)))
    out += _guard("bridge", "M1", lambda: check_M1(seq))
    out += _guard("bridge", "condition_1_1", lambda: check_condition_1_1(seq, 1.0))
    out += _guard("bridge", "condition_1_1_bound_shape", lambda: condition_1_1_bound_shape(w, seq, 1 / math.e))
    out += _guard("bridge", "sandwich", lambda: equivalence_sandwich(w, seq, grid)[1])
    out += _guard("bridge", "bmm_transfer", lambda: bmm_transfer_check(w, seq, grid))
    out += _guard("bridge", "seminorm_equivalence", lambda: seminorm_equivalence_check(w, seq))
    return out


def _monotone_all(mat: KoetheMatrix) -> ConditionVerdict:
    pairs = 0
    grid = {"k": [1, mat.k_max], "sweep": "geometric"}
    for j in range(1, mat.j_max):
        for m in range(j + 1, mat.j_max + 1):
            v = monotone_difference_check(mat, j, m)
            if not v.holds:
                return ConditionVerdict("monotone_difference", v.status, v.witness, v.counterexample, grid, v.note)
            pairs += 1
    return ConditionVerdict("monotone_difference", Status.HOLDS, grid=grid,
                            witness={"pairs": pairs, "jMax": mat.j_max})


def _nuclearity_entries(source, req: AnalysisRequest) -> list[dict]:
    try:
        mat = KoetheMatrix(source, req.j_max, req.k_max)
    except ValueError as exc:
        return [_special("nuclearity", "gp_nuclearity", REFUSED, str(exc))]
    rep = gp_nuclearity(mat, grid=req.grid)
    d = rep.to_dict()
    entry = {"suite": "nuclearity", "check": "gp_nuclearity", "status": rep.status.value,
             "witness": None, "counterexample": None,
             "grid": {"j": [1, req.j_max], "K": rep.K, "mSearchCap": rep.m_search_cap, "t": req.grid.to_dict()},
             "note": "; ".join(mat.invariant_violations), "evidence": d}
    return [entry] + _guard("nuclearity", "monotone_difference", lambda: _monotone_all(mat))


def _weight_suite(name: str, w: WeightFunction, req: AnalysisRequest) -> list[dict]:
    grid = req.grid
    if name == "axioms":
        out = []
        for chk in (check_alpha, check_beta, check_gamma, check_delta):
            out += _guard(name, chk.__name__[6:], lambda chk=chk: chk(w, grid))
        return out
    if name == "bmm":
        return _guard(name, "BMM", lambda: check_BMM(w, grid))
    if name == "cond4":
        return _guard(name, "condition4", lambda: check_condition4(w, grid))
    if name == "conjugate":
        return _conjugate_entries(w, req)
    if name == "bridge":
        return _bridge_entries(w, req)
    return _nuclearity_entries(w, req)


def _sequence_suite(name: str, seq: WeightSequence, req: AnalysisRequest) -> list[dict]:
    grid = req.grid
    if name == "axioms":
        out = []
        for check, fn in (("M1", check_M1), ("M2prime", check_M2prime), ("M2", check_M2),
                          ("lower_root_bound", check_lower_root_bound), ("condition_1_1", check_condition_1_1)):
            out += _guard(name, check, lambda fn=fn: fn(seq))
        return out
    if name == "bmm":
        return _guard(name, "BMM", lambda: check_bmm_like(seq, grid))
    if name == "cond4":
        return _guard(name, "condition4", lambda: check_condition4(seq, grid))
    if name == "nuclearity":
        return _nuclearity_entries(seq, req)
    return [_special(name, name, SKIPPED, "suite applies to weight functions only")]


def _subject_dict(req: AnalysisRequest, subj) -> dict[str, Any]:
    d: dict[str, Any] = {"spec": req.subject, "kind": req.kind, "label": subj.label}
    if isinstance(subj, WeightFunction):
        d["json"] = ({"family": "table", "points": int(subj.params["u"].size), "uMax": subj.u_end}
                     if subj.family == "table" else subj.to_json())
    else:
        d["json"] = subj.to_json()
    return d


def run(req: AnalysisRequest) -> dict[str, Any]:
    """Evaluate every selected suite; the report lists one entry per check."""
    subj = req.load_subject()
    entries: list[dict] = []
    for name in req.suites:
        log.info("running suite %s on %s", name, subj.label)
        if isinstance(subj, WeightFunction):
            entries += _weight_suite(name, subj, req)
        else:
            entries += _sequence_suite(name, subj, req)
    counts: dict[str, int] = {}
    for e in entries:
        counts[e["status"]] = counts.get(e["status"], 0) + 1
    return {"tool": "weightcalc", "version": __version__, "subject": _subject_dict(req, subj),
            "request": req.to_dict(), "entries": entries, "summary": counts}


def _csv(header: tuple[str, str], rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for x, y in rows:
        wr.writerow([_cell(x), _cell(y)])
    return buf.getvalue()


def _cell(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def parse_curve(what: str) -> tuple[str, tuple[int, int] | None]:
    """omega | M | phistar | summand:<j>,<m>."""
    m = re.fullmatch(r"summand[:(]\s*(\d+)\s*,\s*(\d+)\s*\)?", what.strip())
    if m:
        j, mm = int(m.group(1)), int(m.group(2))
        if j < 1 or mm < j:
            raise InputError(f"summand needs 1 <= j <= m, got j={j}, m={mm}")
        return "summand", (j, mm)
    if what in ("omega", "M", "phistar"):
        return what, None
    raise InputError(f"unknown curve {what!r}; expected omega, M, phistar or summand:<j>,<m>")


def export_curve(req: AnalysisRequest, what: str) -> str:
    """Two-column CSV with a header row for one curve of the subject."""
    kind, jm = parse_curve(what)
    subj = req.load_subject()
    is_weight = isinstance(subj, WeightFunction)
    if kind in ("omega", "phistar") and not is_weight:
        raise InputError(f"curve {kind!r} needs a weight function subject")
    if kind == "omega":
        t = req.grid.points
        return _csv(("t", "omega"), zip(t, subj(t)))
    if kind == "phistar":
        tab = young_conjugate(subj, req.s_max, req.slope_n)
        return tab.to_csv()
    source = sequence_from_weight(subj, req.P) if is_weight else subj
    if kind == "M":
        t = req.grid.points
        if t[-1] > source.reliable_t_max:
            raise InputError(f"M is reliable only up to t = {source.reliable_t_max:.6g} with P = {req.P}; "
                             "lower --tmax or raise --P")
        return _csv(("t", "M"), zip(t, source.associated(t)))
    j, m = jm
    src = subj if is_weight else source
    try:
        mat = KoetheMatrix(src, m, req.k_max)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    k = geometric_k_sweep(req.k_max)
    e = mat.exponent(j, k) - mat.exponent(m, k)
    return _csv(("k", "exponent"), zip(k, e))


def write_output(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def check_writable(path: str | None) -> None:
    """Refuse early, before any computation, if the output location cannot be written."""
    if path in (None, "-"):
        return
    p = Path(path)
    if p.is_dir():
        raise InputError(f"output path {path} is a directory")
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir():
        raise InputError(f"output directory {parent} does not exist")
    if not os.access(parent, os.W_OK) or (p.exists() and not os.access(p, os.W_OK)):
        raise InputError(f"output path {path} is not writable")
