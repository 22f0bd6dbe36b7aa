"""Verdicts: machine-checkable monotonicity and fattening judgments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import LabError

SCHEMA = "1"


@dataclass
class Verdict:
    scenario: str
    monotone_dim: bool | None = None
    monotone_count: bool | None = None
    t0_detected: float | None = None
    fattening: bool | None = None
    monotone_measure: bool | None = None
    notes: list[dict] = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def note(self, index: int, t: float, flag: str) -> None:
        self.notes.append({"index": int(index), "t": float(t), "flag": flag})

    def check(self) -> None:
        """Every false verdict must cite at least one flagged sample."""
        for name in ("monotone_dim", "monotone_count", "monotone_measure"):
            if getattr(self, name) is False and not any(n["flag"].startswith(name) for n in self.notes):
                raise LabError("verdict-uncited", f"{name} is false without a flagged sample")

    def to_json(self) -> dict:
        self.check()
        return {
            "schema": SCHEMA,
            "scenario": self.scenario,
            "monotone_dim": self.monotone_dim,
            "monotone_count": self.monotone_count,
            "monotone_measure": self.monotone_measure,
            "t0_detected": self.t0_detected,
            "fattening": self.fattening,
            "notes": list(self.notes),
            "tolerances": dict(self.tolerances),
            "summary": dict(self.summary),
        }

    @classmethod
    def from_json(cls, d: dict) -> "Verdict":
        if d.get("schema") != SCHEMA:
            raise LabError("bad-verdict", f"unsupported verdict schema {d.get('schema')!r}")
        keys = ("scenario", "monotone_dim", "monotone_count", "t0_detected", "fattening",
                "monotone_measure", "notes", "tolerances", "summary")
        return cls(**{k: d.get(k) if k in d else cls.__dataclass_fields__[k].default for k in keys
                      if k in d or k == "scenario"})


def increase_violations(values: list[float], tol: float = 0.0, forgive_single: bool = True):
    """Indices where a sequence rises above its running baseline.

    Returns ``(violations, transients)``. With ``forgive_single`` an increase
    that lasts one sample is only reported as a transient; two consecutive
    raised samples make the first of them a violation.
    """
    violations, transients = [], []
    if not values:
        return violations, transients
    base = values[0]
    i = 1
    while i < len(values):
        v = values[i]
        if v > base + tol:
            nxt = values[i + 1] if i + 1 < len(values) else None
            if forgive_single and (nxt is None or nxt <= base + tol):
                transients.append(i)
                i += 1
                continue
            violations.append(i)
            base = v
        else:
            base = v
        i += 1
    return violations, transients


def first_vanishing(times: list[float], empties: list[bool]) -> float | None:
    """First time the set is empty after being nonempty; 0 if it starts empty."""
    if not times:
        return None
    if empties[0]:
        return 0.0
    for t, prev, cur in zip(times[1:], empties[:-1], empties[1:]):
        if cur and not prev:
            return float(t)
    return None


def strictly_increasing(values: list[float]) -> list[int]:
    """Indices i where values[i] <= values[i-1]."""
    return [i for i in range(1, len(values)) if not values[i] > values[i - 1]]


def finite_or_none(x) -> float | None:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None
