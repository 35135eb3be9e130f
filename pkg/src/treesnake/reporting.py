"""Report records and CSV/JSONL emission.

Every artifact embeds the master seed, the full configuration, and the tool
version as '#' metadata lines (CSV) or a leading meta object (JSONL), so
re-running the embedded configuration reproduces the artifact byte for byte
except for wall-time fields.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from . import __version__

WALL_TIME_FIELDS = ("wall_time_s",)


@dataclass
class EstimateReport:
    """One named statistic with everything needed to reproduce it."""

    statistic: str
    params: dict
    trials: int
    estimates: dict
    variances: dict = field(default_factory=dict)
    ci_halfwidths: dict = field(default_factory=dict)
    seed: int = 0
    wall_time_s: float = 0.0

    def row(self) -> dict:
        out = {"statistic": self.statistic, "trials": self.trials, "seed": self.seed}
        out.update(self.params)
        for k, v in self.estimates.items():
            out[k] = v
        for k, v in self.variances.items():
            out[f"var_{k}"] = v
        for k, v in self.ci_halfwidths.items():
            out[f"ci_{k}"] = v
        out["wall_time_s"] = self.wall_time_s
        return out


def format_value(v) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return "nan" if v != v else f"{v:.12g}"
    return str(v)


def _meta_lines(meta: dict):
    yield f"# tool_version={__version__}"
    for k in sorted(meta):
        v = meta[k]
        if isinstance(v, (dict, list)):
            v = json.dumps(v, sort_keys=True, separators=(",", ":"))
        yield f"# {k}={v}"


def write_csv(path, rows, meta):
    if not rows:
        raise ValueError("no rows to write")
    cols = list(rows[0].keys())
    lines = list(_meta_lines(meta))
    lines.append(",".join(cols))
    for r in rows:
        lines.append(",".join(format_value(r.get(c, "")) for c in cols))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def write_jsonl(path, rows, meta):
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w") as f:
        f.write(json.dumps({"_meta": {"tool_version": __version__, **meta}},
                           sort_keys=True, default=format_value) + "\n")
        for r in rows:
            f.write(json.dumps(r, sort_keys=True, default=format_value) + "\n")


def read_report(path):
    """Read back a CSV or JSONL report: (rows as dicts of strings/floats, meta)."""
    rows, meta = [], {}
    with open(path) as f:
        text = f.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        return rows, meta
    if lines[0].startswith("{"):
        head = json.loads(lines[0])
        meta = head.get("_meta", {})
        for ln in lines[1:]:
            rows.append(json.loads(ln))
        return rows, meta
    data = []
    for ln in lines:
        if ln.startswith("#"):
            k, _, v = ln[1:].strip().partition("=")
            meta[k.strip()] = v
        else:
            data.append(ln)
    if not data:
        return rows, meta
    cols = data[0].split(",")
    for ln in data[1:]:
        vals = ln.split(",")
        row = {}
        for c, v in zip(cols, vals):
            try:
                row[c] = int(v)
            except ValueError:
                try:
                    row[c] = float(v)
                except ValueError:
                    row[c] = v
        rows.append(row)
    return rows, meta


def strip_wall_time(text: str) -> str:
    """Drop wall-time columns/fields from a rendered report (determinism diffs)."""
    out_lines = []
    for ln in text.splitlines():
        if ln.startswith("#"):
            out_lines.append(ln)
            continue
        if ln.startswith("{"):
            obj = json.loads(ln)
            for f_ in WALL_TIME_FIELDS:
                obj.pop(f_, None)
                if "_meta" in obj:
                    obj["_meta"].pop(f_, None)
            out_lines.append(json.dumps(obj, sort_keys=True))
            continue
        out_lines.append(ln)
    # CSV: remove wall-time columns by name
    if out_lines and not out_lines[-1].startswith("{"):
        header_idx = next(
            (i for i, ln in enumerate(out_lines) if not ln.startswith("#")), None
        )
        if header_idx is not None:
            cols = out_lines[header_idx].split(",")
            keep = [i for i, c in enumerate(cols) if c not in WALL_TIME_FIELDS]
            if len(keep) != len(cols):
                for i in range(header_idx, len(out_lines)):
                    parts = out_lines[i].split(",")
                    out_lines[i] = ",".join(parts[j] for j in keep if j < len(parts))
    return "\n".join(out_lines)
