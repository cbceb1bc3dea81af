"""CSV tables with ``#`` metadata lines and JSON sidecars, plus regression checks.

Numbers are written with 12 significant digits so that identical inputs give
byte-identical table bodies.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__

__all__ = ["format_value", "write_table", "read_table", "regression_check", "DEFAULT_RTOL"]

DEFAULT_RTOL = 1e-6
TOLERANCE_KEY = "tolerance"


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.12g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (str, int, bool)) or v is None:
        return v
    return str(v)


def write_table(path, columns: dict, meta: dict | None = None, units: dict | None = None) -> Path:
    """Write ``columns`` (equal-length sequences) to ``path`` and a ``.json`` sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    cols = [list(np.atleast_1d(columns[k])) if not isinstance(columns[k], list) else columns[k] for k in names]
    n = {len(c) for c in cols}
    if len(n) > 1:
        raise ValueError(f"columns have unequal lengths {sorted(n)}")
    meta = dict(meta or {})
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {format_value(v) if not isinstance(v, (dict, list, tuple)) else json.dumps(_jsonable(v), sort_keys=True)}\n")
    if units:
        buf.write("# units: " + ", ".join(f"{k}={units[k]}" for k in names if k in units) + "\n")
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(names)
    for row in zip(*cols):
        out.writerow([format_value(v) for v in row])
    path.write_text(buf.getvalue())
    sidecar = {"version": __version__, "table": path.name, "columns": names, "units": units or {}, "parameters": meta}
    path.with_suffix(".json").write_text(json.dumps(_jsonable(sidecar), indent=2, sort_keys=True) + "\n")
    return path


def read_table(path) -> tuple[dict, list[str], list[list[str]]]:
    """Return ``(meta, header, rows)`` with cells left as strings."""
    meta: dict = {}
    rows: list[list[str]] = []
    header: list[str] = []
    with open(path, newline="") as fh:
        body = []
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
            else:
                body.append(line)
    reader = csv.reader(body)
    for i, row in enumerate(reader):
        if i == 0:
            header = row
        elif row:
            rows.append(row)
    return meta, header, rows


def _as_float(s: str):
    try:
        return float(s)
    except ValueError:
        return None


def _compare(base_path: Path, cur_path: Path, rtol: float) -> dict:
    bmeta, bhead, brows = read_table(base_path)
    _, chead, crows = read_table(cur_path)
    tol = float(bmeta.get(TOLERANCE_KEY, rtol))
    entry = {"file": base_path.name, "tolerance": tol, "max_rel_dev": 0.0, "cell": None}
    if bhead != chead or len(brows) != len(crows):
        entry.update(status="fail", reason="table layout changed")
        return entry
    worst = (0.0, None)
    for i, (rb, rc) in enumerate(zip(brows, crows)):
        for j, (a, b) in enumerate(zip(rb, rc)):
            fa, fb = _as_float(a), _as_float(b)
            if fa is None or fb is None:
                dev = 0.0 if a == b else math.inf
            elif fa == fb or (math.isnan(fa) and math.isnan(fb)):
                dev = 0.0
            else:
                dev = abs(fa - fb) / max(abs(fa), abs(fb))
            if dev > worst[0]:
                worst = (dev, {"row": i, "column": bhead[j], "baseline": a, "current": b})
    entry["max_rel_dev"], entry["cell"] = worst
    entry["status"] = "pass" if worst[0] <= tol else "fail"
    return entry


def regression_check(baseline_dir, current_dir, rtol: float = DEFAULT_RTOL, overrides: dict | None = None) -> dict:
    """Compare every CSV in ``current_dir`` with its counterpart in ``baseline_dir``.

    A baseline table may carry a ``# tolerance: X`` line, and ``overrides``
    maps file names to tolerances; both replace ``rtol`` for that table.
    Tables without a baseline get the status ``"no baseline"`` (not a failure).
    """
    baseline_dir, current_dir = Path(baseline_dir), Path(current_dir)
    overrides = overrides or {}
    entries = []
    for cur in sorted(current_dir.glob("*.csv")):
        base = baseline_dir / cur.name
        if not base.exists():
            entries.append({"file": cur.name, "status": "no baseline"})
            continue
        entries.append(_compare(base, cur, overrides.get(cur.name, rtol)))
    for base in sorted(baseline_dir.glob("*.csv")):
        if not (current_dir / base.name).exists():
            entries.append({"file": base.name, "status": "fail", "reason": "missing from current run"})
    ok = all(e["status"] != "fail" for e in entries)
    return {"passed": ok, "files": entries}
