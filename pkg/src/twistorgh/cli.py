"""Command-line front end.

    twistorgh classify  --metric flat --fibermap omega --t 1
    twistorgh verify    --metric perturbed_flat --seed 7
    twistorgh curvature --metric fubini_study
    twistorgh catalog

Exit codes: 0 success, 1 input error, 2 classifier inconsistency (or a failed
verification suite).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import analysis, catalog, suites
from .fibermaps import FiberMap
from .riemann import curvature_operator, decompose

SCHEMA = "twistor-gh/1"
EXIT_OK, EXIT_INPUT, EXIT_INCONSISTENT = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    metric: str = "flat"
    params: dict = field(default_factory=dict)
    fibermap: str | None = None
    t: list = field(default_factory=lambda: [1.0])
    tol: float = analysis.DEFAULT_TOL
    points: int = 2
    fiber_points: int = 8
    seed: int = 0
    output: str = "human"
    timestamp: bool = True

    def validate(self) -> None:
        if self.tol <= 0:
            raise InputError("--tol must be positive")
        if any(t <= 0 for t in self.t):
            raise InputError("--t values must be positive")
        if self.points < 1 or self.fiber_points < 1:
            raise InputError("--points and --fiber-points must be at least 1")
        if self.metric not in catalog.ENTRIES:
            raise InputError(f"unknown metric {self.metric!r}; choose from {', '.join(catalog.names())}")

    def header(self) -> dict:
        return {
            "schema": SCHEMA,
            "metric": self.metric,
            "params": catalog.entry(self.metric).merged(self.params),
            "fibermap": self.fibermap,
            "seed": self.seed,
            "tol": self.tol,
        }


def _chart(cfg: RunConfig):
    try:
        return catalog.build(cfg.metric, cfg.params)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def _fibermap(text: str) -> FiberMap:
    try:
        return FiberMap.parse(text)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _sci(v: float) -> str:
    return f"{v:.2e}"


# -- commands --------------------------------------------------------------------

def cmd_classify(cfg: RunConfig) -> tuple[dict, int]:
    chart = _chart(cfg)
    fm = _fibermap(cfg.fibermap or "omega")
    if fm.needs_omega and chart.J is None:
        raise InputError(f"fibre map {fm} needs a metric with an almost-complex structure")
    doc = cfg.header()
    doc.update(command="classify", fibermap=str(fm), points=cfg.points * cfg.fiber_points, reports=[])
    code = EXIT_OK
    for t in cfg.t:
        rep = analysis.analyze(chart, fm, t, cfg.points, cfg.fiber_points, cfg.seed, cfg.tol, strict=False)
        if rep.inconsistency:
            code = EXIT_INCONSISTENT
        doc["reports"].append(rep.to_dict())
    return doc, code


def cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    chart = _chart(cfg)
    maps = None if cfg.fibermap is None else [_fibermap(cfg.fibermap)]
    if maps and maps[0].needs_omega and chart.J is None:
        raise InputError(f"fibre map {maps[0]} needs a metric with an almost-complex structure")
    checks = suites.run_all(chart, maps, tuple(cfg.t), cfg.seed, n_points=1, n_fiber=cfg.fiber_points)
    doc = cfg.header()
    doc.update(command="verify", t=list(cfg.t), passed=all(c.passed for c in checks),
               checks=[c.to_dict() for c in checks])
    return doc, EXIT_OK if doc["passed"] else EXIT_INCONSISTENT


def cmd_curvature(cfg: RunConfig) -> tuple[dict, int]:
    chart = _chart(cfg)
    pts = analysis.base_points(cfg.points, chart.radius)
    rows = []
    for p in pts:
        d = decompose(curvature_operator(chart, p))
        rows.append({
            "x": [float(v) for v in p],
            "s": d.s,
            "Wplus_spectrum": [float(v) for v in np.linalg.eigvalsh(d.Wplus)[::-1]],
            "Wminus_spectrum": [float(v) for v in np.linalg.eigvalsh(d.Wminus)[::-1]],
            "B_norm": float(np.linalg.norm(d.B)),
        })
    doc = cfg.header()
    doc.update(command="curvature", points=rows, flags=catalog.measured_flags(chart, pts))
    return doc, EXIT_OK


def cmd_catalog(cfg: RunConfig) -> tuple[dict, int]:
    entries = []
    for name in catalog.names():
        e = catalog.entry(name)
        entries.append({"name": name, "description": e.description, "defaults": dict(e.defaults),
                        "flags": e.flags(e.defaults), "classes": e.classes(e.defaults)})
    return {"schema": SCHEMA, "command": "catalog", "entries": entries}, EXIT_OK


COMMANDS = {"classify": cmd_classify, "verify": cmd_verify, "curvature": cmd_curvature, "catalog": cmd_catalog}


# -- rendering ---------------------------------------------------------------------

def render_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def render_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cmd = doc["command"]
    if cmd == "classify":
        names = list(analysis.RESIDUAL_NAMES)
        w.writerow(["metric", "fibermap", "t", *(f"r_{n}" for n in names), "class"])
        for r in doc["reports"]:
            w.writerow([doc["metric"], doc["fibermap"], r["t"], *(repr(r["residuals"][n]) for n in names), r["class"]])
    elif cmd == "verify":
        w.writerow(["suite", "check", "defect", "tol", "passed", "where"])
        for c in doc["checks"]:
            w.writerow([c["suite"], c["check"], repr(c["defect"]), c["tol"], c["passed"], c["where"]])
    elif cmd == "curvature":
        w.writerow(["x1", "x2", "x3", "x4", "s", "wp1", "wp2", "wp3", "wm1", "wm2", "wm3", "B_norm"])
        for r in doc["points"]:
            w.writerow([*r["x"], r["s"], *r["Wplus_spectrum"], *r["Wminus_spectrum"], r["B_norm"]])
    else:
        w.writerow(["name", "defaults", "omega_class"])
        for e in doc["entries"]:
            w.writerow([e["name"], json.dumps(e["defaults"]), e["classes"].get("omega", "")])
    return buf.getvalue()


def render_human(doc: dict) -> str:
    out = []
    cmd = doc["command"]
    if cmd == "classify":
        for r in doc["reports"]:
            out.append(f"{doc['metric']}  fibermap={doc['fibermap']}  t={r['t']:g}  points={r['points']}")
            out += [f"  r_{k:<7s} {_sci(v)}" for k, v in r["residuals"].items()]
            if r["marginal"]:
                out.append(f"  marginal: {', '.join(r['marginal'])}")
            if r["inconsistency"]:
                out.append(f"  INCONSISTENT: {r['inconsistency']}")
            out.append(f"  class: {r['label']}")
    elif cmd == "verify":
        for c in doc["checks"]:
            status = "ok  " if c["passed"] else "FAIL"
            line = f"{status} {c['suite']:<13s} {c['check']:<60s} {_sci(c['defect'])} (tol {c['tol']:.0e})"
            if not c["passed"]:
                line += f"  at {c['where']}"
            out.append(line)
        out.append("verdict: " + ("all suites pass" if doc["passed"] else "FAILED"))
    elif cmd == "curvature":
        for r in doc["points"]:
            out.append(f"x=({', '.join(f'{v:.3g}' for v in r['x'])})  s={_sci(r['s'])}  "
                       f"W+=({', '.join(_sci(v) for v in r['Wplus_spectrum'])})  "
                       f"W-=({', '.join(_sci(v) for v in r['Wminus_spectrum'])})  |B|={_sci(r['B_norm'])}")
        out.append("flags: " + (", ".join(k for k, v in doc["flags"].items() if v) or "none"))
    else:
        for e in doc["entries"]:
            cls = ", ".join(f"{k}={v}" for k, v in e["classes"].items())
            out.append(f"{e['name']:<15s} {json.dumps(e['defaults']):<28s} {cls}")
    if "timestamp" in doc:
        out.insert(0, f"generated {doc['timestamp']}")
    return "\n".join(out) + "\n"


RENDERERS = {"json": render_json, "csv": render_csv, "human": render_human}


# -- argument parsing --------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _params(text: str) -> dict:
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"--params is not valid JSON: {exc}") from exc
    if not isinstance(value, dict):
        raise argparse.ArgumentTypeError("--params must be a JSON object")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="twistorgh", description="Gray-Hervella classes of twistor spaces of 4-dimensional charts.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--metric", default="flat", help="catalog metric name (default: flat)")
    p.add_argument("--params", type=_params, default={}, help='metric parameters as JSON, e.g. \'{"r": 2}\'')
    p.add_argument("--fibermap", default=None,
                   help="id | antipodal | omega | lambda:<+|->:<a>,<b> (classify default: omega; verify default: all)")
    p.add_argument("--t", type=float, action="append", help="fibre scale; repeatable (default: 1)")
    p.add_argument("--tol", type=float, default=analysis.DEFAULT_TOL, help="vanishing threshold (default: 1e-7)")
    p.add_argument("--points", type=int, default=2, help="base sample points (default: 2)")
    p.add_argument("--fiber-points", type=int, default=8, dest="fiber_points", help="fibre samples per point (default: 8)")
    p.add_argument("--seed", type=int, default=0, help="seed for random fibre samples and perturbations")
    p.add_argument("--output", choices=sorted(RENDERERS), default="human")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp (for byte-stable reports)")
    return p


def config_from(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(ns.metric, dict(ns.params), ns.fibermap, ns.t or [1.0], ns.tol, ns.points,
                    ns.fiber_points, ns.seed, ns.output, not ns.no_timestamp)
    if cfg.metric == "perturbed_flat" and "seed" not in cfg.params:
        cfg.params["seed"] = cfg.seed
    cfg.validate()
    return cfg


def run(argv=None) -> tuple[str, int]:
    """Parse ``argv`` and return the rendered report and exit code."""
    ns = build_parser().parse_args(argv)
    cfg = config_from(ns)
    doc, code = COMMANDS[ns.command](cfg)
    if cfg.timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return RENDERERS[cfg.output](doc), code


def main(argv=None) -> int:
    try:
        text, code = run(argv)
    except InputError as exc:
        print(f"twistorgh: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
