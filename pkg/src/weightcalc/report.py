"""Deterministic serialization of analysis reports.

JSON keys are sorted, floats carry 17 significant digits and non-finite
values become the strings "inf", "-inf" and "nan", so identical requests
give byte-identical files.
"""

from __future__ import annotations

import enum
import json
import math
from typing import Any

import numpy as np

from .numerics import LogGrid

FLOAT_FORMAT = ".17g"


def plain(obj: Any) -> Any:
    """Reduce numpy scalars/arrays, enums and grids to JSON-ready Python values."""
    if isinstance(obj, LogGrid):
        return plain(obj.to_dict())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, FLOAT_FORMAT)


def _emit(obj: Any, indent: int, depth: int, out: list[str]) -> None:
    pad = " " * (indent * (depth + 1))
    end = " " * (indent * depth)
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(obj)
        for i, k in enumerate(keys):
            out.append(pad + json.dumps(k, ensure_ascii=False) + ": ")
            _emit(obj[k], indent, depth + 1, out)
            out.append(",\n" if i < len(keys) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            out.append("[" + ", ".join(str(v) if isinstance(v, int) else format_float(v) for v in obj) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit(v, indent, depth + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    out: list[str] = []
    _emit(plain(obj), indent, 0, out)
    return "".join(out) + "\n"


def _brief(d: Any, limit: int = 72) -> str:
    if not d:
        return ""
    if isinstance(d, dict):
        parts = []
        for k in sorted(d):
            v = d[k]
            if isinstance(v, float):
                v = format(v, ".6g")
            elif isinstance(v, (dict, list)):
                v = "{...}" if isinstance(v, dict) else "[...]"
            parts.append(f"{k}={v}")
        s = " ".join(parts)
    else:
        s = str(d)
    return s if len(s) <= limit else s[: limit - 3] + "..."


def text_table(report: dict) -> str:
    """Fixed-width human summary: one row per check."""
    req = report["request"]
    g = req["grid"]
    lines = [
        f"weightcalc {report['version']}  subject={report['subject']['spec']} ({report['subject']['kind']})",
        f"grid t in [{g['tMin']:g}, {g['tMax']:g}] x {g['n']}   koethe jMax={req['koethe']['jMax']} "
        f"K={req['koethe']['kMax']}   P={req['P']}",
        "",
        f"{'SUITE':<11}{'CHECK':<28}{'STATUS':<26}DETAIL",
    ]
    for e in report["entries"]:
        detail = _brief(e.get("witness")) or _brief(e.get("counterexample")) or e.get("note", "")
        lines.append(f"{e['suite']:<11}{e['check']:<28}{e['status']:<26}{detail}")
    return "\n".join(lines) + "\n"
