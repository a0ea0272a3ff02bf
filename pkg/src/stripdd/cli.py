"""Command line front end: audit | solve0 | trace.

Reads a JSON config, validates it exhaustively (unknown keys rejected),
runs the requested command, and writes deterministic CSV/JSON outputs.

Exit codes: 0 success, 1 config/IO error, 2 infeasible hypotheses (audit),
3 partial trace (corrector failure; partial outputs still written).
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from .continuation import TraceConfig, solve_lambda0, trace_curve
from .linsolve import SolverFailure
from .mesh import DomainSpec, build_grid, lift_boundary
from .system import Coefficients, physical_fields, BlockState

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_PARTIAL = 3


class ConfigError(Exception):
    pass


_SCHEMA = {
    "domain": {"length", "width", "nx", "ny"},
    "coefficients": {"d_n", "c_n", "d_p", "c_p"},
    "doping": None,  # number or {kind, path}
    "boundary": {"u", "n", "p"},
    "homotopy": {"steps", "newton_tol", "newton_maxit", "alpha0"},
    "solver": {"kind", "tol", "maxit"},
    "seed": None,
    "output_dir": None,
}

_HOMOTOPY_DEFAULTS = {"steps": 10, "newton_tol": 1e-10, "newton_maxit": 25, "alpha0": 1.0}
_SOLVER_DEFAULTS = {"kind": "direct", "tol": 1e-12, "maxit": 400}


def _require(cfg, key, section=None):
    where = f"{section}.{key}" if section else key
    container = cfg
    if key not in container:
        raise ConfigError(f"missing config key: {where}")
    return container[key]


def _reject_unknown(d, allowed, section):
    for k in d:
        if k not in allowed:
            raise ConfigError(f"unknown config key: {section}.{k}" if section else f"unknown config key: {k}")


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be an object")
    _reject_unknown(cfg, set(_SCHEMA), None)
    for section in ("domain", "coefficients", "boundary", "seed", "output_dir"):
        _require(cfg, section)
    return cfg


def _build_domain(dom):
    if not isinstance(dom, dict):
        raise ConfigError("domain must be an object")
    _reject_unknown(dom, _SCHEMA["domain"], "domain")
    for k in _SCHEMA["domain"]:
        _require(dom, k, "domain")
    try:
        return DomainSpec(
            length=float(dom["length"]),
            width=float(dom["width"]),
            nx=int(dom["nx"]),
            ny=int(dom["ny"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid domain: {exc}") from exc


def _boundary_trace(grid, spec, name):
    if isinstance(spec, (int, float)):
        return np.full(grid.boundary_idx.size, float(spec))
    if not isinstance(spec, dict):
        raise ConfigError(f"boundary.{name} must be a number or an object")
    kind = spec.get("kind")
    bx = grid.x[grid.boundary_idx]
    if kind == "constant":
        _reject_unknown(spec, {"kind", "value"}, f"boundary.{name}")
        return np.full(bx.size, float(_require(spec, "value", f"boundary.{name}")))
    if kind == "linear_x":
        _reject_unknown(spec, {"kind", "start", "end"}, f"boundary.{name}")
        v0 = float(_require(spec, "start", f"boundary.{name}"))
        v1 = float(_require(spec, "end", f"boundary.{name}"))
        return v0 + (v1 - v0) * bx / grid.spec.length
    if kind == "file":
        _reject_unknown(spec, {"kind", "path"}, f"boundary.{name}")
        path = _require(spec, "path", f"boundary.{name}")
        try:
            vals = np.loadtxt(path, ndmin=1)
        except OSError as exc:
            raise ConfigError(f"boundary.{name}: cannot read {path}: {exc}") from exc
        if vals.size != grid.boundary_idx.size:
            raise ConfigError(
                f"boundary.{name}: file has {vals.size} values, expected "
                f"{grid.boundary_idx.size} boundary nodes"
            )
        return vals.astype(float)
    raise ConfigError(f"boundary.{name}.kind must be constant | linear_x | file")


def _doping_field(grid, spec):
    if spec is None:
        return np.zeros(grid.n_nodes)
    if isinstance(spec, (int, float)):
        return np.full(grid.n_nodes, float(spec))
    if isinstance(spec, dict):
        _reject_unknown(spec, {"kind", "path"}, "doping")
        if spec.get("kind") != "file":
            raise ConfigError("doping.kind must be 'file'")
        path = _require(spec, "path", "doping")
        try:
            vals = np.loadtxt(path, ndmin=1)
        except OSError as exc:
            raise ConfigError(f"doping: cannot read {path}: {exc}") from exc
        if vals.size != grid.n_nodes:
            raise ConfigError(
                f"doping: file has {vals.size} values, expected {grid.n_nodes} nodes"
            )
        return vals.astype(float)
    raise ConfigError("doping must be a number or {kind: file, path: ...}")


def build_problem(cfg):
    """Construct (grid, coeffs, homotopy dict, solver dict, seed, outdir)."""
    grid = build_grid(_build_domain(cfg["domain"]))

    co = cfg["coefficients"]
    if not isinstance(co, dict):
        raise ConfigError("coefficients must be an object")
    _reject_unknown(co, _SCHEMA["coefficients"], "coefficients")
    for k in _SCHEMA["coefficients"]:
        _require(co, k, "coefficients")

    bnd = cfg["boundary"]
    if not isinstance(bnd, dict):
        raise ConfigError("boundary must be an object")
    _reject_unknown(bnd, _SCHEMA["boundary"], "boundary")
    for k in _SCHEMA["boundary"]:
        _require(bnd, k, "boundary")

    a_u = lift_boundary(grid, _boundary_trace(grid, bnd["u"], "u"))
    a_n = lift_boundary(grid, _boundary_trace(grid, bnd["n"], "n"))
    a_p = lift_boundary(grid, _boundary_trace(grid, bnd["p"], "p"))
    D = _doping_field(grid, cfg.get("doping"))

    try:
        coeffs = Coefficients(
            d_n=float(co["d_n"]),
            c_n=float(co["c_n"]),
            d_p=float(co["d_p"]),
            c_p=float(co["c_p"]),
            D=D,
            a_u=a_u,
            a_n=a_n,
            a_p=a_p,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid coefficients: {exc}") from exc

    hom = dict(_HOMOTOPY_DEFAULTS)
    if "homotopy" in cfg:
        _reject_unknown(cfg["homotopy"], _SCHEMA["homotopy"], "homotopy")
        hom.update(cfg["homotopy"])
    sol = dict(_SOLVER_DEFAULTS)
    if "solver" in cfg:
        _reject_unknown(cfg["solver"], _SCHEMA["solver"], "solver")
        sol.update(cfg["solver"])
    if sol["kind"] not in ("direct", "contraction"):
        raise ConfigError("solver.kind must be direct | contraction")

    seed = cfg["seed"]
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    outdir = Path(str(cfg["output_dir"]))
    return grid, coeffs, hom, sol, seed, outdir


def _fmt(v):
    return f"{v:.15g}"


def _write_fields(path, grid, coeffs, state):
    u, n, p = physical_fields(grid, coeffs, state)
    lines = ["x,y,u,n,p"]
    for i in range(grid.n_nodes):
        lines.append(
            ",".join(_fmt(v) for v in (grid.x[i], grid.y[i], u[i], n[i], p[i]))
        )
    path.write_text("\n".join(lines) + "\n")


def _write_curve(path, points):
    header = (
        "lambda,residual_norm,dist_to_h0,newton_iters,min_n,min_p,"
        "neg_part_norm_n,neg_part_norm_p"
    )
    lines = [header]
    for pt in points:
        lines.append(
            ",".join(
                [
                    _fmt(pt.lam),
                    _fmt(pt.residual_norm),
                    _fmt(pt.dist_to_h0),
                    str(pt.newton_iters),
                    _fmt(pt.min_n),
                    _fmt(pt.min_p),
                    _fmt(pt.neg_part_norm_n),
                    _fmt(pt.neg_part_norm_p),
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")


def cmd_audit(cfg):
    grid, coeffs, hom, sol, seed, outdir = build_problem(cfg)
    report = bounds_mod.audit(grid, coeffs, alpha0=float(hom["alpha0"]), seed=seed)
    outdir.mkdir(parents=True, exist_ok=True)
    doc = report.to_dict()
    # json has no inf literal; serialize unconstrained bounds as strings
    for key in ("d0", "d0_proof"):
        if math.isinf(doc[key]):
            doc[key] = "unconstrained"
    (outdir / "bounds.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if report.all_ok() else EXIT_INFEASIBLE


def _trace_config(hom, sol):
    return TraceConfig(
        steps=int(hom["steps"]),
        newton_tol=float(hom["newton_tol"]),
        newton_maxit=int(hom["newton_maxit"]),
        linear_solver=sol["kind"],
        solver_tol=float(sol["tol"]),
        solver_maxit=int(sol["maxit"]),
    )


def cmd_trace(cfg):
    grid, coeffs, hom, sol, seed, outdir = build_problem(cfg)
    result = trace_curve(grid, coeffs, _trace_config(hom, sol))
    outdir.mkdir(parents=True, exist_ok=True)
    _write_curve(outdir / "curve.csv", result.points)
    if result.complete:
        _write_fields(outdir / "fields_lambda1.csv", grid, coeffs, result.points[-1].state)
        return EXIT_OK
    print(
        f"trace aborted at lambda={result.failed_lambda}: {result.failure}",
        file=sys.stderr,
    )
    return EXIT_PARTIAL


def cmd_solve0(cfg):
    grid, coeffs, hom, sol, seed, outdir = build_problem(cfg)
    try:
        h0 = solve_lambda0(grid, coeffs, warn=False)
    except SolverFailure as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PARTIAL
    outdir.mkdir(parents=True, exist_ok=True)
    _write_fields(outdir / "fields_lambda0.csv", grid, coeffs, h0)
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="stripdd",
        description="Homotopy continuation solver and feasibility auditor for "
        "steady drift-diffusion systems on narrow strips.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("audit", "compute feasibility constants and verdicts"),
        ("solve0", "solve the decoupled lambda=0 system"),
        ("trace", "trace the homotopy curve to lambda=1"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to JSON config")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        handler = {"audit": cmd_audit, "solve0": cmd_solve0, "trace": cmd_trace}[args.command]
        return handler(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
