"""Scenario configuration: JSON schema, defaults and validation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .errors import LabError

SCENARIOS = ("csf_pair", "csf_self", "graphical_pair", "marriage_ring", "dumbbell", "cone_fattening",
             "localizability", "custom")

# resolution bounds (h_min, h_max), defaults for h, horizon, sample_dt and n, per scenario
TABLE: dict[str, dict] = {
    "csf_pair": {"h": 0.02, "bounds": (0.002, 0.1), "horizon": 0.5, "sample_dt": 0.01, "n": None},
    "csf_self": {"h": 0.015, "bounds": (0.002, 0.1), "horizon": 0.2, "sample_dt": 0.01, "n": None},
    "graphical_pair": {"h": 0.025, "bounds": (0.005, 0.1), "horizon": 0.2, "sample_dt": 0.01, "n": None},
    "marriage_ring": {"h": 0.005, "bounds": (0.001, 0.01), "horizon": 0.02, "sample_dt": 0.001, "n": 2},
    "dumbbell": {"h": 0.005, "bounds": (0.002, 0.02), "horizon": 0.004, "sample_dt": 0.0002, "n": 2},
    "cone_fattening": {"h": 1 / 128, "bounds": (1 / 512, 1 / 32), "horizon": 0.01, "sample_dt": 0.002, "n": 2},
    "localizability": {"h": 0.01, "bounds": (1 / 256, 1 / 32), "horizon": 0.004, "sample_dt": 0.001, "n": None},
    "custom": {"h": 0.02, "bounds": (0.002, 0.1), "horizon": 0.5, "sample_dt": 0.01, "n": None},
}

# scenario-specific parameters and their defaults; anything else is rejected
PARAMS: dict[str, dict] = {
    "csf_pair": {"radius_a": 1.0, "radius_b": 1.0, "aspect_b": 1.0, "separation": 1.0},
    "csf_self": {"curve": "figure_eight"},
    "graphical_pair": {"profile": "parabola"},
    "marriage_ring": {"delta": None},
    "dumbbell": {"L": 1.0, "eps": 0.08, "plane_z": None},
    "cone_fattening": {"aperture": 80.0, "plane_offset": 0.0},
    "localizability": {"case": "circles", "t0": None},
    "custom": {"amplitude": 0.3, "modes": 4, "separation": 1.0},
}

CHOICES = {
    ("csf_self", "curve"): ("figure_eight", "three_crossings"),
    ("graphical_pair", "profile"): ("parabola", "tilted"),
    ("localizability", "case"): ("circles", "dumbbell", "cone"),
}

TOP_KEYS = ("scenario", "h", "horizon", "sample_dt", "seed", "output_dir", "emit_frames", "n", "params")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    h: float
    horizon: float
    sample_dt: float
    seed: int = 0
    output_dir: str = "lab_out"
    emit_frames: bool = False
    n: int | None = None
    params: dict = field(default_factory=dict)

    def param(self, key: str):
        return self.params[key]


def _bad(msg: str) -> LabError:
    return LabError("invalid-config", msg)


def _number(d: dict, key: str) -> float:
    x = d[key]
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise _bad(f"{key} must be a number")
    return float(x)


def parse_config(text: str) -> ScenarioConfig:
    """Parse a UTF-8 JSON document into a validated config with defaults applied."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise LabError("parse-error", f"malformed JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(raw, dict):
        raise _bad("config must be a JSON object")
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ScenarioConfig:
    unknown = sorted(set(raw) - set(TOP_KEYS))
    if unknown:
        raise _bad(f"unknown key {unknown[0]!r}")
    if "scenario" not in raw:
        raise _bad("scenario is required")
    sc = raw["scenario"]
    if sc not in SCENARIOS:
        raise _bad(f"scenario must be one of {', '.join(SCENARIOS)}")
    tab = TABLE[sc]
    d = {k: tab[k] for k in ("h", "horizon", "sample_dt", "n")}
    d.update({k: v for k, v in raw.items() if k != "params"})

    horizon = _number(d, "horizon")
    if not horizon > 0:
        raise _bad("horizon must be positive")
    sample_dt = _number(d, "sample_dt")
    if not 0 < sample_dt <= horizon / 4 * (1 + 1e-12):
        raise _bad("sample_dt must lie in (0, horizon/4]")
    h = _number(d, "h")
    lo, hi = tab["bounds"]
    if not lo <= h <= hi:
        raise _bad(f"h must lie in [{lo:g}, {hi:g}] for {sc}")
    seed = d.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise _bad("seed must be a non-negative integer")
    out = d.get("output_dir", "lab_out")
    if not isinstance(out, str) or not out:
        raise _bad("output_dir must be a non-empty string")
    frames = d.get("emit_frames", False)
    if not isinstance(frames, bool):
        raise _bad("emit_frames must be a boolean")
    n = d.get("n")
    if tab["n"] is None:
        if n is not None:
            raise _bad(f"n is not used by {sc}")
    elif isinstance(n, bool) or not isinstance(n, int) or n not in (2, 3):
        raise _bad("n must be 2 or 3")

    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise _bad("params must be an object")
    schema = PARAMS[sc]
    extra = sorted(set(params) - set(schema))
    if extra:
        raise _bad(f"unknown key params.{extra[0]}")
    p = dict(schema)
    p.update(params)
    for k, default in schema.items():
        v = p[k]
        choices = CHOICES.get((sc, k))
        if choices is not None:
            if v not in choices:
                raise _bad(f"params.{k} must be one of {', '.join(choices)}")
        elif isinstance(default, int) and not isinstance(default, bool):
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise _bad(f"params.{k} must be a positive integer")
        elif v is not None or default is not None:
            if v is None:
                raise _bad(f"params.{k} must be a number")
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise _bad(f"params.{k} must be a number")
            p[k] = float(v)
    _check_params(sc, p)
    return ScenarioConfig(sc, h, horizon, sample_dt, seed, out, frames, n, p)


def _check_params(sc: str, p: dict) -> None:
    positive = {"csf_pair": ("radius_a", "radius_b", "aspect_b", "separation"),
                "dumbbell": ("L", "eps"), "custom": ("separation",), "marriage_ring": ("delta",)}
    for k in positive.get(sc, ()):
        if p[k] is not None and not p[k] > 0:
            raise _bad(f"params.{k} must be positive")
    if sc == "cone_fattening" and not 0 < p["aperture"] < 90:
        raise _bad("params.aperture must lie in (0, 90) degrees")
    if sc == "custom":
        # amplitude bounds sum k^2 |a_k|; up to 0.6 the perturbed circles stay convex
        if not 0 <= p["amplitude"] <= 0.6:
            raise _bad("params.amplitude must lie in [0, 0.6]")
        if not 2 <= p["modes"] <= 12:
            raise _bad("params.modes must lie in [2, 12]")
    if sc == "localizability" and p["t0"] is not None and p["t0"] < 0:
        raise _bad("params.t0 must be non-negative")


def serialize_config(cfg: ScenarioConfig) -> str:
    return json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n"
