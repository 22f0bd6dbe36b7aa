"""Aggregate verdicts against the bundled expectations table."""

from __future__ import annotations

import json
from importlib import resources

from .errors import LabError
from .verdict import SCHEMA, Verdict

STATUSES = ("pass", "expected-fail", "unexpected-fail")


def load_expectations() -> dict:
    text = resources.files("mcflab").joinpath("expectations.json").read_text(encoding="utf-8")
    return json.loads(text)["scenarios"]


def _lookup(v: Verdict, key: str):
    if key.startswith("summary."):
        return (v.summary or {}).get(key[len("summary."):])
    return getattr(v, key)


def classify(v: Verdict, table: dict) -> dict:
    entry = table.get(v.scenario) or table.get(v.scenario.split(":")[0])
    if entry is None:
        return {"scenario": v.scenario, "status": "unexpected-fail", "bucket": "no expectation",
                "mismatches": ["scenario missing from expectations table"]}
    mism = [f"{k}: expected {want!r}, got {_lookup(v, k)!r}" for k, want in entry["expect"].items()
            if _lookup(v, k) != want]
    status = "unexpected-fail" if mism else entry["kind"]
    return {"scenario": v.scenario, "status": status, "bucket": entry["bucket"], "mismatches": mism}


def emit_report(verdicts: list[Verdict], table: dict | None = None) -> tuple[dict, str]:
    """Summary JSON and a plain-text table."""
    if not verdicts:
        raise LabError("empty-report", "no verdicts to report")
    table = load_expectations() if table is None else table
    rows = [classify(v, table) for v in verdicts]
    counts = {s: sum(r["status"] == s for r in rows) for s in STATUSES}
    summary = {"schema": SCHEMA, "total": len(rows), "counts": counts, "rows": rows}
    w = max(len("scenario"), *(len(r["scenario"]) for r in rows))
    b = max(len("bucket"), *(len(r["bucket"]) for r in rows))
    lines = [f"{'scenario':<{w}}  {'status':<15}  {'bucket':<{b}}  notes",
             f"{'-' * w}  {'-' * 15}  {'-' * b}  -----"]
    for r in rows:
        lines.append(f"{r['scenario']:<{w}}  {r['status']:<15}  {r['bucket']:<{b}}  {'; '.join(r['mismatches'])}")
    lines.append("")
    lines.append("  ".join(f"{s}: {counts[s]}" for s in STATUSES) + f"  (total {len(rows)})")
    return summary, "\n".join(lines) + "\n"
