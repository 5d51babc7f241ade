"""Weight functions omega and the growth conditions imposed on them.

All families are normalized to vanish on [0, 1]. Closed forms are written in
terms of phi(u) = omega(e^u), which is what conjugation works with.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .numerics import LogGrid, grid_points
from .verdict import ConditionVerdict, Status, rel_tol, search_witness, tail_diverging

FAMILIES = ("omega0", "power", "loga", "gevrey_weight", "table")

ALPHA_L = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
GAMMA_B = tuple(2.0 ** -k for k in range(11))
BMM_H = (1.5, 2.0, math.e, 4.0, 8.0, 16.0, 32.0, 1e2, 1e3)
COND4_H = (1.5, 2.0, math.e, 4.0, 8.0, 16.0, 1e2, 1e3)
CONVEX_TOL = 1e-9


@dataclass(frozen=True)
class WeightFunction:
    family: str
    params: dict = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown weight family {self.family!r}")
        p = dict(self.params)
        if self.family in ("power", "gevrey_weight"):
            key = "a" if self.family == "power" else "s"
            if key not in p:
                raise ValueError(f"{self.family} needs parameter {key!r}")
            v = float(p[key])
            if self.family == "power" and not v > 0:
                raise ValueError(f"power exponent must be > 0, got {v}")
            if self.family == "gevrey_weight" and v < 1:
                raise ValueError(f"Gevrey order must be >= 1, got {v}")
            p[key] = v
        elif self.family == "loga":
            v = float(p.get("a", 2.0))
            if v < 1:
                raise ValueError(f"log^a weight needs a >= 1 for convex phi, got {v}")
            p["a"] = v
        elif self.family == "table":
            u = np.asarray(p.get("u"), dtype=float)
            phi = np.asarray(p.get("phi"), dtype=float)
            if u.ndim != 1 or u.shape != phi.shape or u.size < 3:
                raise ValueError("table needs matching 'u' and 'phi' arrays with >= 3 samples")
            du = np.diff(u)
            if u[0] != 0.0 or np.any(du <= 0) or np.ptp(du) > 1e-9 * du.mean() * u.size:
                raise ValueError("table must sample phi on a uniform grid starting at u = 0")
            phi = phi - phi[0]
            if np.any(np.diff(phi) < -CONVEX_TOL):
                raise ValueError("table phi must be nondecreasing")
            d2 = np.diff(phi, 2)
            if np.any(d2 < -CONVEX_TOL * max(1.0, np.abs(phi).max())):
                k = int(np.argmax(d2 < -CONVEX_TOL * max(1.0, np.abs(phi).max()))) + 1
                raise ValueError(f"table phi is not convex (second difference negative at index {k})")
            u.flags.writeable = False
            phi.flags.writeable = False
            p["u"], p["phi"] = u, phi
        object.__setattr__(self, "params", p)
        if not self.label:
            object.__setattr__(self, "label", self._default_label())

    # constructors
    @classmethod
    def omega0(cls) -> "WeightFunction":
        return cls("omega0")

    @classmethod
    def power(cls, a: float) -> "WeightFunction":
        return cls("power", {"a": a})

    @classmethod
    def loga(cls, a: float = 2.0) -> "WeightFunction":
        return cls("loga", {"a": a})

    @classmethod
    def gevrey_weight(cls, s: float) -> "WeightFunction":
        return cls("gevrey_weight", {"s": s})

    @classmethod
    def table(cls, u, phi, label: str = "table") -> "WeightFunction":
        return cls("table", {"u": np.asarray(u, float), "phi": np.asarray(phi, float)}, label)

    @classmethod
    def from_phi(cls, phi: Callable[[np.ndarray], np.ndarray], u_max: float = 25.0, n: int = 4096,
                 label: str = "table") -> "WeightFunction":
        u = np.linspace(0.0, u_max, n)
        return cls.table(u, phi(u), label)

    def _default_label(self) -> str:
        f = self.family
        if f == "omega0":
            return "omega0"
        if f == "power":
            return f"power:{self.params['a']:g}"
        if f == "loga":
            return f"log^{self.params['a']:g}"
        if f == "gevrey_weight":
            return f"gevrey:{self.params['s']:g}"
        return "table"

    @property
    def exponent(self) -> float | None:
        """a for omega(t) = t^a - 1 families."""
        if self.family == "power":
            return self.params["a"]
        if self.family == "gevrey_weight":
            return 1.0 / self.params["s"]
        return None

    @property
    def is_weight(self) -> bool:
        """False for the t^a, a >= 1 test subjects that violate omega(t) = o(t)."""
        a = self.exponent
        return a is None or a < 1.0

    @property
    def u_end(self) -> float:
        """Right end of the sampled phi domain (inf for closed forms)."""
        if self.family == "table":
            return float(self.params["u"][-1])
        return math.inf

    def phi(self, u) -> np.ndarray:
        """phi(u) = omega(e^u); zero for u <= 0."""
        u = np.asarray(u, dtype=float)
        up = np.maximum(u, 0.0)
        f = self.family
        if f == "omega0":
            out = up
        elif f == "loga":
            out = up ** self.params["a"]
        elif f in ("power", "gevrey_weight"):
            out = np.expm1(self.exponent * up)
        else:
            tu, tp = self.params["u"], self.params["phi"]
            last = (tp[-1] - tp[-2]) / (tu[-1] - tu[-2])
            out = np.where(up <= tu[-1], np.interp(up, tu, tp), tp[-1] + last * (up - tu[-1]))
        return out

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("weight functions are defined for t >= 0")
        with np.errstate(divide="ignore"):
            u = np.log(np.where(t > 1.0, t, 1.0))
        return np.where(t > 1.0, self.phi(u), 0.0)

    def omega_direct(self, s) -> np.ndarray:
        """omega evaluated in the s-domain without the log substitution."""
        s = np.asarray(s, dtype=float)
        f = self.family
        big = s > 1.0
        sb = np.where(big, s, 1.0)
        if f == "omega0":
            out = np.log(sb)
        elif f == "loga":
            out = np.log(sb) ** self.params["a"]
        elif f in ("power", "gevrey_weight"):
            out = sb ** self.exponent - 1.0
        else:
            out = self.phi(np.log(sb))
        return np.where(big, out, 0.0)

    def to_json(self) -> dict:
        params = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.params.items()}
        return {"family": self.family, "params": params}

    @classmethod
    def from_json(cls, obj: dict) -> "WeightFunction":
        if not isinstance(obj, dict) or "family" not in obj:
            raise ValueError('weight JSON must be an object with a "family" key')
        return cls(obj["family"], dict(obj.get("params", {})))

    @classmethod
    def load_table(cls, path: str | Path) -> "WeightFunction":
        """Load a table weight from JSON ({"family": "table", ...}) or CSV (columns u, phi)."""
        path = Path(path)
        if path.suffix.lower() == ".csv":
            with path.open(newline="") as fh:
                rows = list(csv.DictReader(fh))
            if not rows or not {"u", "phi"} <= set(rows[0]):
                raise ValueError(f"{path}: CSV table needs columns u, phi")
            u = [float(r["u"]) for r in rows]
            phi = [float(r["phi"]) for r in rows]
            return cls.table(u, phi, label=f"table:{path.name}")
        w = cls.from_json(json.loads(path.read_text()))
        return w


def evaluate(w: WeightFunction, t: float) -> float:
    if not t >= 0 or not math.isfinite(t):
        raise ValueError(f"t must be finite and >= 0, got {t}")
    return float(w(t))


def _pts(grid) -> np.ndarray:
    return grid_points(grid)


def check_alpha(w: WeightFunction, grid) -> ConditionVerdict:
    """(alpha): omega(2t) <= L (omega(t) + 1)."""
    t = _pts(grid)
    o, o2 = w(t), w(2 * t)
    return search_witness("alpha", "L", ALPHA_L, lambda L: (t, o2, L * (o + 1.0)), grid)


def check_beta(w: WeightFunction, grid, threshold: float = 1e-3) -> ConditionVerdict:
    """(beta): omega(t) = o(t), judged by the decay of omega(t)/t on the grid tail."""
    name = "beta"
    t = _pts(grid)
    r = w(t) / t
    q = r[-max(8, r.size // 4):]
    ev = {"ratioAtEnd": float(r[-1]), "tMax": float(t[-1])}
    dec = bool(np.all(np.diff(q) <= rel_tol(q, 1e-12)))
    if dec and r[-1] < threshold:
        return ConditionVerdict(name, Status.HOLDS, witness={"ratio": float(r[-1]), "t": float(t[-1])},
                                grid=grid, evidence=ev)
    if not dec and q[-1] >= q[0]:
        return ConditionVerdict(name, Status.FAILS, grid=grid, evidence=ev,
                                counterexample={"t": float(t[-1]), "ratio": float(r[-1]),
                                                "ratioQuarterBack": float(q[0])},
                                note="omega(t)/t does not decay along the tail")
    return ConditionVerdict(name, Status.INCONCLUSIVE, grid=grid, evidence=ev,
                            note=f"omega(t)/t not below {threshold:g} on the tested range")


def check_gamma(w: WeightFunction, grid) -> ConditionVerdict:
    """(gamma): omega(t) >= a + b log(1 + t), a fitted as the grid minimum."""
    name = "gamma"
    t = np.concatenate([[0.0], _pts(grid)])
    o = w(t)
    per = []
    for b in GAMMA_B:
        d = o - b * np.log1p(t)
        diverging, slope = tail_diverging(-d)
        per.append({"b": b, "a": float(d.min()), "diverging": diverging})
        if not diverging:
            return ConditionVerdict(name, Status.HOLDS, witness={"a": float(d.min()), "b": b}, grid=grid,
                                    evidence={"candidates": per})
    b = GAMMA_B[-1]
    d = o - b * np.log1p(t)
    head = d[: d.size // 2].min()
    return ConditionVerdict(name, Status.FAILS, grid=grid, evidence={"candidates": per},
                            counterexample={"t": float(t[-1]), "b": b, "a": float(head),
                                            "lhs": float(o[-1]), "rhs": float(head + b * math.log1p(t[-1]))},
                            note="omega - b log(1+t) decreases along the tail for every b")


def check_delta(w: WeightFunction, grid) -> ConditionVerdict:
    """(delta): phi(u) = omega(e^u) convex, via second differences on the log-uniform grid."""
    name = "delta"
    if isinstance(grid, LogGrid):
        u = grid.log_points
    else:
        pts = _pts(grid)
        u = np.linspace(math.log(pts[0]), math.log(pts[-1]), pts.size)
    u = np.concatenate([[u[0] - (u[1] - u[0])], u])
    f = w.phi(u)
    d2 = np.diff(f, 2)
    tol = CONVEX_TOL * max(1.0, float(np.abs(f).max()))
    if np.any(d2 < -tol):
        i = int(np.argmax(d2 < -tol)) + 1
        return ConditionVerdict(name, Status.FAILS, grid=grid,
                                counterexample={"t": float(math.exp(u[i])), "secondDifference": float(d2[i - 1])})
    return ConditionVerdict(name, Status.HOLDS, witness={"minSecondDifference": float(d2.min())}, grid=grid)


def _reliable(M) -> float:
    return float(getattr(M, "reliable_t_max", math.inf))


def check_BMM(w: WeightFunction, grid, candidates=BMM_H) -> ConditionVerdict:
    """(BMM): 2 omega(t) <= omega(H t) + H."""
    t = _pts(grid)
    o = w(t)

    def sides(H):
        return t, 2 * o, w(H * t) + H

    return search_witness("BMM", "H", candidates, sides, grid)


def check_bmm_like(M, grid, candidates=BMM_H, name: str = "BMM") -> ConditionVerdict:
    """(BMM) for any exponent map, restricted to its reliable range."""
    t_all = _pts(grid)
    lim = _reliable(M)

    def sides(H):
        t = t_all[H * t_all <= lim]
        return t, 2 * M(t), M(H * t) + H

    return search_witness(name, "H", candidates, sides, grid)


def check_condition4(M, grid, candidates=COND4_H) -> ConditionVerdict:
    """cond4: M(t) + log t <= M(H t) + H for some H.

    ``M`` is any vectorized exponent map: a WeightFunction, or a
    WeightSequence (its associated function). Grid points with H t beyond
    the map's reliable range are skipped.
    """
    t_all = _pts(grid)
    lim = _reliable(M)

    def sides(H):
        t = t_all[H * t_all <= lim]
        return t, M(t) + np.log(t), M(H * t) + H

    return search_witness("condition4", "H", candidates, sides, grid)


def check_condition4_at(M, grid, H: float, name: str = "condition4") -> ConditionVerdict:
    """cond4 for a single given H (no search)."""
    v = check_condition4(M, grid, candidates=(H,))
    return v if v.name == name else ConditionVerdict(name, v.status, v.witness, v.counterexample,
                                                     v.grid, v.note, v.evidence)


@dataclass(frozen=True)
class IterateResult:
    C: float
    verdict: ConditionVerdict
    skipped: int
    attained_at: float


def iterate_condition4(M, grid, H: float, N: int) -> IterateResult:
    """Measured C_{N,H} = max_t (M(t) + N log t - M(H^N t)).

    Holds when the measured constant is at most N*H.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    t_all = _pts(grid)
    HN = H ** N
    keep = HN * t_all <= _reliable(M)
    t = t_all[keep]
    skipped = int((~keep).sum())
    name = f"condition4_iterate_N{N}"
    if t.size == 0:
        v = ConditionVerdict(name, Status.INCONCLUSIVE, grid=_grid_desc(grid), note="no evaluable points")
        return IterateResult(math.nan, v, skipped, math.nan)
    c = M(t) + N * np.log(t) - M(HN * t)
    i = int(np.argmax(c))
    C = float(c[i])
    ev = {"H": H, "N": N, "skipped": skipped}
    if C <= N * H:
        v = ConditionVerdict(name, Status.HOLDS, witness={"C": C, "H": H, "N": N, "bound": N * H},
                             grid=_grid_desc(grid), evidence=ev)
    else:
        v = ConditionVerdict(name, Status.INCONCLUSIVE, grid=_grid_desc(grid), evidence=ev,
                             note=f"measured C = {C:.6g} exceeds N*H = {N * H:.6g}")
    return IterateResult(C, v, skipped, float(t[i]))


def _grid_desc(grid) -> Any:
    if isinstance(grid, LogGrid):
        return grid
    pts = _pts(grid)
    return {"points": int(pts.size), "tMin": float(pts.min()), "tMax": float(pts.max())}
