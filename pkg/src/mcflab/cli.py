"""Command line: ``mcflab run|suite|report``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import io
from .config import ScenarioConfig, parse_config
from .errors import LabError
from .report import emit_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3


def output_root(cfg: ScenarioConfig, out: str | None) -> Path:
    """--out wins, then LAB_OUT, then the config's output_dir."""
    if out:
        return Path(out)
    env = os.environ.get("LAB_OUT")
    if env:
        return Path(env)
    return Path(cfg.output_dir)


def _job(path: str, out: str | None, frames: bool) -> dict:
    """Run one config file; never raises, returns a status record."""
    from .scenarios import run_scenario

    label = Path(path).stem
    try:
        cfg = parse_config(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        return {"config": path, "ok": False, "exit": EXIT_CONFIG,
                "error": {"error": "unreadable-config", "detail": str(e)}}
    except LabError as e:
        return {"config": path, "ok": False, "exit": EXIT_CONFIG, "error": e.to_dict()}
    if frames and not cfg.emit_frames:
        cfg = ScenarioConfig(**{**cfg.__dict__, "emit_frames": True})
    target = output_root(cfg, out) / label
    try:
        v = run_scenario(cfg, target)
    except LabError as e:
        return {"config": path, "ok": False, "exit": EXIT_SIMULATION, "dir": str(target),
                "error": {**e.to_dict(), "scenario": cfg.scenario}}
    return {"config": path, "ok": True, "exit": EXIT_OK, "dir": str(target), "verdict": v.to_json()}


def run_many(paths: list[str], out: str | None, frames: bool, workers: int) -> list[dict]:
    if workers <= 1 or len(paths) <= 1:
        return [_job(p, out, frames) for p in paths]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_job, paths, [out] * len(paths), [frames] * len(paths)))


def _print_results(results: list[dict]) -> int:
    code = EXIT_OK
    for r in results:
        if r["ok"]:
            print(f"{r['config']}: done -> {r['dir']}")
        else:
            print(json.dumps({"config": r["config"], **r["error"]}, sort_keys=True), file=sys.stderr)
            code = max(code, r["exit"])
    return code


def _report(verdicts, root: Path) -> None:
    summary, table = emit_report(verdicts)
    io.write_json(root / "report.json", summary)
    (root / "report.txt").write_text(table, encoding="utf-8")
    print(table, end="")


def cmd_run(args) -> int:
    return _print_results(run_many(args.configs, args.out, args.frames, args.workers))


def cmd_suite(args) -> int:
    d = Path(args.directory)
    paths = sorted(str(p) for p in d.glob("*.json"))
    if not paths:
        print(json.dumps({"error": "empty-suite", "detail": f"no *.json configs in {d}"}), file=sys.stderr)
        return EXIT_CONFIG
    results = run_many(paths, args.out, args.frames, args.workers)
    code = _print_results(results)
    from .verdict import Verdict

    verdicts = [Verdict.from_json(r["verdict"]) for r in results if r["ok"]]
    if verdicts:
        root = Path(args.out) if args.out else Path(os.environ.get("LAB_OUT") or "lab_out")
        _report(verdicts, root)
    return code


def cmd_report(args) -> int:
    d = Path(args.directory)
    try:
        verdicts = [io.read_verdict(p) for p in sorted(d.rglob("verdict.json"))]
        _report(verdicts, d)
    except LabError as e:
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mcflab", description="Scenario runner for mean curvature flow experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output root (default: $LAB_OUT, then the config's output_dir)")
        p.add_argument("--frames", action="store_true", help="write SVG frames / zero-set polylines")
        p.add_argument("--workers", type=int, default=1, help="scenarios run in parallel")

    r = sub.add_parser("run", help="run one or more scenario configs")
    r.add_argument("configs", nargs="+", metavar="config.json")
    common(r)
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("suite", help="run every *.json config in a directory and report")
    s.add_argument("directory")
    common(s)
    s.set_defaults(func=cmd_suite)
    p = sub.add_parser("report", help="aggregate verdict.json files found under a directory")
    p.add_argument("directory")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
