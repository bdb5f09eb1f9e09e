"""Command-line front end.

Every command writes one JSON document (schema 1) and, where it produces
tables, an optional CSV file.  Exit codes: 0 all checks pass, 1 a check
failed, 2 invalid configuration, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels, solver, sources, talenti
from .errors import ConditionNotSatisfied, ConvergenceError, DomainError, PositivityError
from .quadrature import SCHEDULE, sphere_rule
from .special import Normalization, ProblemParams, torsion_constant

SCHEMA = 1
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("kernel", "solve", "trace", "symmetrize", "verify", "sweep", "calibrate", "report")
CLAIMS = (
    "thm1",
    "thm1-crossing",
    "thm2",
    "green",
    "s-gt1",
    "higher-order",
    "mass",
    "classical",
    "sharpness",
    "rho",
)
CLAIM_ALIASES = {"crossing": "thm1-crossing", "mass-concentration": "mass", "green-talenti": "green"}
SWEEPS = ("thm1", "s-gt1", "green", "thm2", "sharpness", "explore")
CSV_COLUMNS = ["claim", "N", "s", "normalization", "lhs", "rhs", "margin", "tol", "pass"]

DEFAULTS = {
    "N": None,
    "s": None,
    "normalization": Normalization.DELTA_LIMIT.value,
    "log_branch": "integral",
    "profile": None,
    "source": None,
    "xi": None,
    "rho": None,
    "height": 1.0,
    "x": None,
    "y": None,
    "theta": None,
    "tau": None,
    "kind": "green",
    "grid": 256,
    "order": None,
    "radii": 20,
    "tol": talenti.DEFAULT_TOL,
    "quad_tol": 1e-8,
    "sweep_quad_tol": 1e-6,
    "seed": 20240601,
    "count": 100,
    "N_list": None,
    "s_list": None,
    "eps": [0.5, 0.2, 0.1, 0.05, 0.02, 0.01],
    "claim": None,
    "inputs": [],
}


class ConfigError(Exception):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclass
class RunConfig:
    command: str
    options: dict
    json_out: Optional[str] = None
    csv_out: Optional[str] = None
    problems: list = field(default_factory=list)

    def get(self, key):
        return self.options.get(key)

    def params(self) -> ProblemParams:
        return ProblemParams(self.options["N"], self.options["s"], self.options["normalization"], self.options["log_branch"])


def worker_count() -> int:
    env = os.environ.get("FRAC_TALENTI_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# configuration


def _floats(text):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _point_from(value, N):
    """A point given as coordinates, or as a scalar meaning value * e_1."""
    vals = _floats(value)
    if vals is None:
        return None
    if len(vals) == 1 and N and N > 1:
        vals = vals + [0.0] * (N - 1)
    return np.array(vals)


def _validate(cfg: RunConfig):
    o = cfg.options
    problems = cfg.problems
    cmd = cfg.command
    needs_params = cmd not in ("report",)
    if needs_params and not (cmd == "sweep" and o.get("N_list")):
        if o["N"] is None:
            problems.append("N is required")
        elif int(o["N"]) != o["N"] or not 1 <= int(o["N"]) <= 3:
            problems.append(f"N must be 1, 2 or 3 (got {o['N']})")
        else:
            o["N"] = int(o["N"])
    if needs_params and cmd != "symmetrize" and not (cmd == "sweep" and o.get("s_list")):
        if o["s"] is None:
            problems.append("s is required")
        elif not (isinstance(o["s"], (int, float)) and o["s"] > 0 and math.isfinite(o["s"])):
            problems.append(f"s must be a positive number (got {o['s']})")
    try:
        o["normalization"] = Normalization(o["normalization"]).value
    except ValueError:
        problems.append(f"normalization must be GreenLimit or DeltaLimit (got {o['normalization']!r})")
    if o["log_branch"] not in ("integral", "printed"):
        problems.append(f"log_branch must be integral or printed (got {o['log_branch']!r})")
    for key in ("tol", "quad_tol", "sweep_quad_tol"):
        if not (isinstance(o[key], (int, float)) and o[key] > 0):
            problems.append(f"{key} must be positive")
    if not (isinstance(o["grid"], int) and o["grid"] >= 2):
        problems.append("grid must be an integer >= 2")
    if o["order"] is not None and not (isinstance(o["order"], int) and o["order"] >= 1):
        problems.append("order must be a positive integer")
    if not (isinstance(o["count"], int) and o["count"] >= 1):
        problems.append("count must be a positive integer")
    if not isinstance(o["seed"], int):
        problems.append("seed must be an integer")
    if o["profile"] is not None:
        try:
            o["source"] = sources.source_to_dict(sources.parse_profile(o["profile"]))
        except DomainError as exc:
            problems.append(f"profile: {exc}")
    if o["source"] is not None and not problems:
        try:
            sources.source_from_dict(o["source"])
        except (DomainError, KeyError, TypeError) as exc:
            problems.append(f"source: {exc}")
    if cmd == "verify":
        if o["claim"] not in CLAIMS:
            problems.append(f"verify needs a claim in {', '.join(CLAIMS)} (got {o['claim']!r})")
    if cmd == "sweep" and o["claim"] not in SWEEPS:
        problems.append(f"sweep needs a kind in {', '.join(SWEEPS)} (got {o['claim']!r})")
    if cmd == "kernel" and o["kind"] not in ("green", "martin", "martin-limit", "poisson", "t-moment"):
        problems.append(f"unknown kernel kind {o['kind']!r}")
    if problems:
        raise ConfigError(problems)


def build_config(args) -> RunConfig:
    options = dict(DEFAULTS)
    problems = []
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
            if not isinstance(data, dict):
                raise ValueError("top level must be an object")
            unknown = sorted(set(data) - set(DEFAULTS))
            problems.extend(f"unknown config key {k!r}" for k in unknown)
            options.update({k: v for k, v in data.items() if k in DEFAULTS})
        except (OSError, ValueError) as exc:
            problems.append(f"cannot read config {args.config}: {exc}")
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None and val != []:
            options[key] = val
    for key in ("N_list", "s_list", "eps"):
        if options[key] is not None:
            try:
                options[key] = _floats(options[key])
            except ValueError:
                problems.append(f"{key} must be a comma-separated list of numbers")
    if options["N_list"]:
        options["N_list"] = [int(n) for n in options["N_list"]]
    if args.command == "report":
        options["inputs"] = ([args.claim] if args.claim else []) + list(args.inputs or [])
        options["claim"] = None
    options["claim"] = CLAIM_ALIASES.get(options["claim"], options["claim"])
    cfg = RunConfig(args.command, options, args.json, args.csv, problems)
    _validate(cfg)
    return cfg


# ---------------------------------------------------------------------------
# helpers


def _source(cfg):
    if cfg.get("source") is not None:
        return sources.source_from_dict(cfg.get("source"))
    if cfg.get("xi") is not None and cfg.get("rho") is not None:
        xi = _point_from(cfg.get("xi"), cfg.get("N"))
        return sources.BumpSource(tuple(xi), float(cfg.get("rho")), float(cfg.get("height")))
    raise DomainError("a source is required (--profile, --xi/--rho, or 'source' in the config)")


def _rule(cfg, N):
    order = cfg.get("order")
    return talenti.default_trace_rule(N) if order is None else sphere_rule(N, order)


def _quadrature_echo(cfg, N=None):
    out = {"schedule": [list(x) for x in SCHEDULE], "quad_tol": cfg.get("quad_tol")}
    if N is not None:
        out["trace_rule_nodes"] = len(_rule(cfg, N))
    return out


def _report_dicts(reports):
    return [r.to_dict() for r in reports]


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def dump_json(doc) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_kernel(cfg):
    p = cfg.params()
    N = p.N
    kind = cfg.get("kind")
    x = _point_from(cfg.get("x"), N)
    y = _point_from(cfg.get("y"), N)
    theta = _point_from(cfg.get("theta"), N)
    result = {"kind": kind}
    if kind == "green":
        result["value"] = kernels.green(p, x, y)
        if p.critical:
            printed = ProblemParams(N, p.s, p.normalization, "printed")
            result["printed_log_value"] = kernels.green(printed, x, y)
    elif kind == "martin":
        result["value"] = kernels.martin(p, y, theta)
    elif kind == "martin-limit":
        gl = p.with_normalization(Normalization.GREEN_LIMIT)
        result["value"] = kernels.martin_from_green_limit(gl, y, theta)
        result["closed_form"] = kernels.martin(gl, y, theta)
    elif kind == "poisson":
        result["value"] = kernels.poisson(x, theta, N)
    else:
        result["value"] = kernels.t_moment(N, float(cfg.get("tau")), x)
    return {"result": result}, [], True


def cmd_solve(cfg):
    p = cfg.params()
    f = _source(cfg)
    h = solver.SolutionHandle(p, f)
    tol = cfg.get("quad_tol")
    if cfg.get("x") is not None:
        x = _point_from(cfg.get("x"), p.N)
        value = solver.solve_at(h, x, tol)
        return {"result": {"x": x.tolist(), "u": value}}, [], True
    grid = solver.default_radial_grid(cfg.get("grid"))
    vals = solver.radial_solution_profile(h, grid, tol)
    rows = [[repr(float(r)), repr(float(v))] for r, v in zip(grid, vals)]
    return {"result": {"radii": grid.tolist(), "u": vals.tolist()}}, [("r", "u"), rows], True


def cmd_trace(cfg):
    p = cfg.params()
    f = _source(cfg)
    rule = _rule(cfg, p.N)
    tr = solver.boundary_trace(solver.SolutionHandle(p, f), rule, cfg.get("quad_tol"))
    hm = solver.harmonic_mean_value(tr, p.s)
    rows = [[*map(lambda c: repr(float(c)), node), repr(float(v))] for node, v in zip(np.atleast_2d(tr.nodes), tr.values)]
    header = tuple(f"theta{i + 1}" for i in range(p.N)) + ("psi",)
    return {"result": {"values": tr.values.tolist(), "symmetrized_value": hm}}, [header, rows], True


def cmd_symmetrize(cfg):
    f = _source(cfg)
    N = cfg.get("N")
    fs = sources.schwarz(f, N)
    result = {
        "input": sources.source_to_dict(f),
        "rearranged": sources.source_to_dict(fs),
        "symmetric_decreasing_input": isinstance(f, sources.RadialProfile) and f.symmetric_decreasing,
        "l1_norm": sources.lp_norm(f, 1, N),
        "l2_norm": sources.lp_norm(f, 2, N),
    }
    if isinstance(f, sources.RadialProfile):
        result["measure_f_ne_fstar"] = sources.measure_not_rearranged(f, N)
    return {"result": result}, [], True


def _verify_reports(cfg):
    claim = cfg.get("claim")
    p = cfg.params()
    tol = cfg.get("tol")
    qt = cfg.get("quad_tol")
    N = p.N
    if claim == "thm1":
        return [talenti.verify_reverse_boundary_talenti(p, _source(cfg), tol)]
    if claim == "s-gt1":
        return [talenti.verify_s_gt1(p, _source(cfg), tol)]
    if claim == "classical":
        return [talenti.verify_classical_equality(p, _source(cfg))]
    if claim == "thm2":
        return [talenti.verify_bump_boundary_talenti(p, _source(cfg), tol, _rule(cfg, N), qt)]
    if claim == "higher-order":
        return [talenti.verify_higher_order_bump(p, _source(cfg), tol, _rule(cfg, N), qt)]
    if claim == "green":
        xi = _point_from(cfg.get("xi"), N)
        if xi is None:
            raise DomainError("green needs --xi")
        return [talenti.verify_green_boundary_talenti(p, xi)]
    if claim == "mass":
        radii = np.linspace(1.0 / cfg.get("radii"), 1.0, cfg.get("radii"))
        grid = solver.default_radial_grid(cfg.get("grid"))
        return [talenti.verify_mass_concentration(p, _source(cfg), radii, grid, tol, qt)]
    if claim == "thm1-crossing":
        f = _source(cfg)
        c = talenti.locate_crossing(p, f, solver.default_radial_grid(cfg.get("grid")), qt)
        meta = {**p.as_dict(), "grid_size": c.grid_size, "refined": c.refined, "index": c.index}
        return [talenti.VerificationReport("thm1-crossing", c.lower, c.upper, c.upper - c.lower, 0.0, c.lower < c.upper, p.normalization.value, meta)]
    if claim == "sharpness":
        rows = talenti.sharpness_sweep(p, cfg.get("eps"))
        values = [r["value"] for r in rows]
        ok = all(r["above_limit"] for r in rows) and all(b <= a for a, b in zip(values, values[1:]))
        last = rows[-1]
        meta = {**p.as_dict(), "rows": rows}
        return [talenti.VerificationReport("sharpness", last["limit"], last["value"], last["excess"], 0.0, ok, p.normalization.value, meta)]
    # rho
    xi = _point_from(cfg.get("xi"), N)
    rho = cfg.get("rho")
    if xi is None:
        raise DomainError("rho needs --xi")
    star = talenti.max_admissible_rho(N, p.s, xi)
    meta = {**p.as_dict(), "xi": xi.tolist(), "max_admissible_rho": star}
    if rho is not None:
        lhs, rhs = talenti.rho_condition_sides(N, p.s, xi, rho)
        ok = talenti.check_rho_condition(N, p.s, xi, rho)
        meta["rho"] = rho
    else:
        lhs, rhs = talenti.rho_condition_sides(N, p.s, xi, star)
        ok = True
    return [talenti.VerificationReport("rho", lhs, rhs, rhs - lhs, 0.0, bool(ok), p.normalization.value, meta)]


def cmd_verify(cfg):
    reports = _verify_reports(cfg)
    rows = [r.csv_row() for r in reports]
    return {"claim": cfg.get("claim"), "reports": _report_dicts(reports)}, [CSV_COLUMNS, rows], all(r.passed for r in reports)


def _sweep_tasks(cfg):
    kind = cfg.get("claim")
    rng = np.random.default_rng(cfg.get("seed"))
    N_list = cfg.get("N_list") or [cfg.get("N")]
    s_list = cfg.get("s_list") or [cfg.get("s")]
    norm = cfg.get("normalization")
    tol = cfg.get("tol")
    qt = cfg.get("sweep_quad_tol")
    count = cfg.get("count")
    tasks = []
    if kind in ("thm1", "s-gt1"):
        profiles = [sources.random_profile(rng) for _ in range(count)]
        fn = talenti.verify_reverse_boundary_talenti if kind == "thm1" else talenti.verify_s_gt1
        for N in N_list:
            for s in s_list:
                p = ProblemParams(int(N), s, norm)
                tasks += [(fn, (p, f, tol)) for f in profiles]
    elif kind == "green":
        for N in N_list:
            for s in s_list:
                p = ProblemParams(int(N), s, norm)
                for _ in range(count):
                    v = rng.normal(size=int(N))
                    xi = v / np.linalg.norm(v) * rng.uniform(0.01, 0.99)
                    tasks.append((talenti.verify_green_boundary_talenti, (p, xi)))
    elif kind == "thm2":
        for N in N_list:
            for s in s_list:
                p = ProblemParams(int(N), s, norm)
                for r in (0.25, 0.5, 0.75):
                    xi = np.zeros(int(N))
                    xi[0] = r
                    rho = 0.9 * talenti.max_admissible_rho(int(N), s, xi)
                    f = sources.BumpSource(tuple(xi), rho, 1.0)
                    tasks.append((talenti.verify_bump_boundary_talenti, (p, f, tol, _rule(cfg, int(N)), qt)))
    return tasks


def cmd_sweep(cfg):
    kind = cfg.get("claim")
    if kind == "sharpness":
        p = cfg.params()
        rows = talenti.sharpness_sweep(p, cfg.get("eps"))
        ok = all(r["above_limit"] for r in rows)
        table = [[repr(r[k]) for k in ("epsilon", "value", "limit", "excess", "excess_over_eps2")] for r in rows]
        return {"kind": kind, "rows": rows}, [("epsilon", "value", "limit", "excess", "excess_over_eps2"), table], ok
    if kind == "explore":
        N_list = cfg.get("N_list") or [cfg.get("N")]
        s_list = cfg.get("s_list") or [cfg.get("s")]
        rows = []
        for N in N_list:
            rows += talenti.exploratory_sweep(int(N), s_list, (0.3, 0.5, 0.7), (0.01, 0.05, 0.1), quad_tol=cfg.get("sweep_quad_tol"))
        cols = ("N", "s", "xi", "rho", "lhs", "rhs", "margin")
        return {"kind": kind, "exploratory": True, "rows": rows}, [cols, [[repr(r[c]) for c in cols] for r in rows]], True
    tasks = _sweep_tasks(cfg)
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        # map keeps submission order, so output does not depend on scheduling
        reports = list(pool.map(lambda t: t[0](*t[1]), tasks))
    doc = {
        "kind": kind,
        "count": len(reports),
        "failures": sum(not r.passed for r in reports),
        "reports": _report_dicts(reports),
    }
    return doc, [CSV_COLUMNS, [r.csv_row() for r in reports]], all(r.passed for r in reports)


def cmd_calibrate(cfg):
    p = cfg.params()
    one = sources.RadialProfile((0.0, 1.0), (1.0,))
    rule = _rule(cfg, p.N) if cfg.get("order") is not None else sphere_rule(p.N, 4)
    tr = solver.boundary_trace(solver.SolutionHandle(p, one), rule, cfg.get("quad_tol"))
    nu = 2.0 ** (p.s - 1.0) if p.normalization is Normalization.DELTA_LIMIT else 1.0
    # torsion oracle value times the normalization ratio relative to DeltaLimit
    oracle = 2.0**p.s * torsion_constant(p.N, p.s) * (nu / 2.0 ** (p.s - 1.0))
    rel = float(np.max(np.abs(tr.values / oracle - 1.0)))
    ok = rel <= 1e-6
    report = talenti.VerificationReport(
        "calibration", float(tr.values.mean()), oracle, oracle - float(tr.values.mean()), 1e-6, ok,
        p.normalization.value, {**p.as_dict(), "max_relative_error": rel, "trace": tr.values.tolist()},
    )
    return {"reports": [report.to_dict()]}, [CSV_COLUMNS, [report.csv_row()]], ok


_CLAIM_TITLES = {
    "thm1": "Reverse boundary comparison for radial sources (s < 1)",
    "thm1-crossing": "Failure of the pointwise comparison near the boundary",
    "thm2": "Boundary comparison for admissible off-centre bumps",
    "green-talenti": "Rearranged Martin kernel below its value at the origin",
    "s-gt1": "Boundary comparison for radial sources, s > 1",
    "higher-order": "Off-centre bumps for s in (1, N]",
    "mass-concentration": "Mass concentration",
    "classical": "Equality of boundary values at s = 1",
    "sharpness": "Sharpness of the lower bound",
    "rho": "Admissibility of the bump radius",
    "calibration": "Normalization calibration against the torsion function",
}


def cmd_report(cfg):
    inputs = cfg.get("inputs") or []
    if not inputs:
        raise DomainError("report needs at least one JSON input")
    rows = []
    for path in inputs:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        for rep in doc.get("reports", []):
            rows.append((path, rep))
    lines = ["# Verification summary", "", "| claim | N | s | normalization | lhs | rhs | margin | pass |", "|---|---|---|---|---|---|---|---|"]
    for _, rep in rows:
        m = rep.get("metadata", {})
        lines.append(
            f"| {_CLAIM_TITLES.get(rep['claim'], rep['claim'])} | {m.get('N', '')} | {m.get('s', '')} | "
            f"{rep['normalization']} | {rep['lhs']:.10g} | {rep['rhs']:.10g} | {rep['margin']:.3e} | "
            f"{'yes' if rep['pass'] else 'NO'} |"
        )
    markdown = "\n".join(lines) + "\n"
    ok = all(rep["pass"] for _, rep in rows)
    return {"markdown": markdown, "count": len(rows), "failures": sum(not r["pass"] for _, r in rows)}, [], ok


HANDLERS = {
    "kernel": cmd_kernel,
    "solve": cmd_solve,
    "trace": cmd_trace,
    "symmetrize": cmd_symmetrize,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "calibrate": cmd_calibrate,
    "report": cmd_report,
}


# ---------------------------------------------------------------------------
# entry points


def _parser():
    ap = argparse.ArgumentParser(prog="frac-talenti", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("claim", nargs="?", help="claim for verify / kind for sweep")
    ap.add_argument("inputs", nargs="*", help="JSON files for report")
    ap.add_argument("--config", help="JSON configuration file")
    ap.add_argument("--json", help="write the JSON report here (default: stdout)")
    ap.add_argument("--csv", help="write the CSV table here")
    ap.add_argument("--N", type=int)
    ap.add_argument("--s", type=float)
    ap.add_argument("--normalization")
    ap.add_argument("--log-branch", dest="log_branch")
    ap.add_argument("--profile", help='radial profile "r1:v1,r2:v2,...,1:vk"')
    ap.add_argument("--xi", help="bump centre or point (comma-separated, or a scalar along e1)")
    ap.add_argument("--rho", type=float)
    ap.add_argument("--height", type=float)
    ap.add_argument("--x")
    ap.add_argument("--y")
    ap.add_argument("--theta")
    ap.add_argument("--tau", type=float)
    ap.add_argument("--kind", help="kernel kind: green, martin, martin-limit, poisson, t-moment")
    ap.add_argument("--grid", type=int, help="number of radial grid points")
    ap.add_argument("--order", type=int, help="sphere rule order for traces")
    ap.add_argument("--radii", type=int, help="number of radii for mass concentration")
    ap.add_argument("--tol", type=float)
    ap.add_argument("--quad-tol", dest="quad_tol", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--count", type=int)
    ap.add_argument("--N-list", dest="N_list")
    ap.add_argument("--s-list", dest="s_list")
    ap.add_argument("--eps")
    return ap


def run(command: str, cfg: RunConfig) -> tuple:
    """Execute a validated command; returns (exit code, JSON text)."""
    doc = {"schema": SCHEMA, "command": command, "config": {k: v for k, v in cfg.options.items() if v is not None}}
    try:
        body, table, ok = HANDLERS[command](cfg)
    except ConvergenceError as exc:
        doc.update({"status": "non-convergence", "error": str(exc), "operation": exc.operation, "params": exc.params})
        return EXIT_NUMERIC, dump_json(doc)
    except PositivityError as exc:
        doc.update({"status": "non-convergence", "error": str(exc)})
        return EXIT_NUMERIC, dump_json(doc)
    except (ConditionNotSatisfied, DomainError) as exc:
        doc.update({"status": "config-error", "error": str(exc)})
        return EXIT_CONFIG, dump_json(doc)
    doc.update(body)
    n = cfg.get("N")
    doc["quadrature"] = _quadrature_echo(cfg, n if command in ("trace", "verify") and n else None)
    doc["status"] = "pass" if ok else "fail"
    if cfg.csv_out and table:
        _write_csv(cfg.csv_out, table[0], table[1])
    return (EXIT_PASS if ok else EXIT_FAIL), dump_json(doc)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        print(dump_json({"schema": SCHEMA, "command": args.command, "status": "config-error", "errors": exc.problems}), end="")
        return EXIT_CONFIG
    code, text = run(args.command, cfg)
    if cfg.json_out:
        with open(cfg.json_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    elif args.command == "report" and code != EXIT_CONFIG:
        sys.stdout.write(json.loads(text)["markdown"])
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
