"""Command-line entry point.

    semihyp <validate|solve|bounds|certify|blowup|scan> (--config PATH | --preset NAME)
            [--t T] [--derivatives] [--set section.key=value]... [--out PATH]
            [--emit-plot PATH] [--dump-config]

Exit codes: 0 success, 1 semantic failure, 2 usage or schema error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from typing import Optional

import numpy as np

from . import blowup as bl
from . import bounds as bd
from . import config as cf
from . import solver as sv
from .exprlang import ExprError
from .presets import PRESETS, preset, problem_from_dict
from .problem import ProblemError, check_compat0, check_compat1, validate

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
COMMANDS = ("validate", "solve", "bounds", "certify", "blowup", "scan")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Output helpers


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def solution_csv(fld: sv.SolutionField) -> str:
    n = fld.problem.n
    cols = ["x", "t"] + [f"u{i + 1}" for i in range(n)]
    blocks = [fld.u]
    if fld.dudx is not None:
        cols += [f"du{i + 1}dx" for i in range(n)]
        blocks.append(fld.dudx)
    if fld.dudt is not None:
        cols += [f"du{i + 1}dt" for i in range(n)]
        blocks.append(fld.dudt)
    nt, nx1 = len(fld.times), len(fld.x)
    X = np.broadcast_to(fld.x, (nt, nx1)).reshape(-1)
    Tt = np.broadcast_to(fld.times[:, None], (nt, nx1)).reshape(-1)
    data = [X, Tt]
    for b in blocks:
        data += [b[:, i, :].reshape(-1) for i in range(n)]
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    np.savetxt(buf, np.column_stack(data), fmt="%.17g", delimiter=",")
    return buf.getvalue()


def solution_json(fld: sv.SolutionField) -> str:
    doc = {"x": fld.x, "t": fld.times,
           "u": np.moveaxis(fld.u, 1, 0)}
    if fld.dudx is not None:
        doc["dudx"] = np.moveaxis(fld.dudx, 1, 0)
    if fld.dudt is not None:
        doc["dudt"] = np.moveaxis(fld.dudt, 1, 0)
    return json.dumps(_clean(doc)) + "\n"


def plot_csv(fld: sv.SolutionField) -> str:
    """Long format: x, t, component, value."""
    rows = ["x,t,component,value"]
    for li, t in enumerate(fld.times):
        for i in range(fld.problem.n):
            for j, x in enumerate(fld.x):
                rows.append(f"{x:.17g},{t:.17g},u{i + 1},{fld.u[li, i, j]:.17g}")
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# Commands


def _problem(cfg: cf.ProblemConfig):
    return problem_from_dict(cfg.problem_dict())


def _horizon(cfg, args) -> float:
    return float(args.t) if args.t is not None else cfg.grid.T


def _checks(p, T, out, derivatives: bool = False) -> bool:
    rep = validate(p, T)
    c0 = check_compat0(p)
    ok = rep.ok and c0.ok
    print(f"validation: {'ok' if rep.ok else 'FAILED'} "
          f"(lambda in [{rep.lambda_min:.6g}, {rep.lambda_max:.6g}])", file=out)
    for issue in rep.issues:
        print(f"  - {issue}", file=out)
    print(f"compatibility order 0: {'ok' if c0.ok else 'FAILED'} "
          f"residuals {', '.join('%.3e' % r for r in c0.residuals)}", file=out)
    if derivatives:
        c1 = check_compat1(p)
        ok = ok and c1.ok
        print(f"compatibility order 1: {'ok' if c1.ok else 'FAILED'} "
              f"residuals {', '.join('%.3e' % r for r in c1.residuals)}", file=out)
    return ok


def cmd_validate(cfg, args) -> int:
    p = _problem(cfg)
    return EXIT_OK if _checks(p, _horizon(cfg, args), sys.stdout, derivatives=True) else EXIT_FAIL


def _out_path(cfg, args) -> str:
    return args.out or cfg.output.path


def cmd_solve(cfg, args) -> int:
    p = _problem(cfg)
    T = _horizon(cfg, args)
    if not _checks(p, T, sys.stdout, derivatives=args.derivatives):
        print("error: problem checks failed; nothing solved", file=sys.stderr)
        return EXIT_FAIL
    M = cfg.bounds.M or bd.default_range(p, T)
    lip = bd.estimate_lipschitz(p, M, T, density=cfg.bounds.density)
    try:
        fld = sv.solve(p, cfg.grid.nx, T, lip, dt_user=cfg.grid.dt_user,
                       eps_fix=cfg.solver.eps_fix, max_iter=cfg.solver.max_iter,
                       derivatives=args.derivatives, eps_evt=cfg.solver.eps_evt)
    except sv.RangeExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("hint: run the 'blowup' command to test for finite-time blow-up",
              file=sys.stderr)
        return EXIT_FAIL
    except sv.ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("hint: raise bounds.M, or run the 'blowup' command if the solution grows",
              file=sys.stderr)
        return EXIT_FAIL
    plan = fld.plan
    print(f"slab plan: {len(plan.boundaries) - 1} slabs of width {plan.theta:.6g} "
          f"({plan.provenance}); q0 = {plan.q:.6g}, L_f = {lip.L_f:.6g}, "
          f"L_h = {lip.L_h:.6g}, M = {lip.M:.6g}")
    for d in fld.diagnostics:
        print(f"  slab {d.index}: [{d.t0:.6g}, {d.t1:.6g}] levels {d.levels} "
              f"iterations {d.iterations} max ratio {_fmt(d.max_ratio)}")
    path = _out_path(cfg, args)
    text = solution_json(fld) if cfg.output.format == "json" else solution_csv(fld)
    write_atomic(path, text)
    print(f"wrote {path}")
    if args.emit_plot:
        write_atomic(args.emit_plot, plot_csv(fld))
        print(f"wrote {args.emit_plot}")
    return EXIT_OK


def cmd_bounds(cfg, args) -> int:
    p = _problem(cfg)
    T = _horizon(cfg, args)
    M = cfg.bounds.M or bd.default_range(p, T)
    lip = bd.estimate_lipschitz(p, M, T, density=cfg.bounds.density)
    maxima = bd.compute_maxima(p, T, M, density=cfg.bounds.density)
    rep = bd.apriori_bounds(p, lip, T, maxima)
    doc = {"lipschitz": lip.as_dict(), "maxima": maxima.__dict__, "apriori": rep.as_dict()}
    print(f"theta0 = {rep.theta0:.17g}, theta1 = {rep.theta1:.17g}, "
          f"global sup bound = exp({rep.log_global_u:.6g})")
    path = _out_path(cfg, args)
    write_atomic(path, dumps(doc))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_certify(cfg, args) -> int:
    if cfg.certificate is None:
        raise cf.ConfigError("certificate: section is required for the certify command")
    p = _problem(cfg)
    T = _horizon(cfg, args)
    c = cfg.certificate
    try:
        cert = bd.certify_growth(p, T, F=c.majorant.F, H=c.majorant.H,
                                 sigma=c.majorant.sigma, delta=c.majorant.delta,
                                 C_f=c.C_f, C_h=c.C_h)
    except bd.MajorantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"class: {cert.cls}")
    path = _out_path(cfg, args)
    write_atomic(path, dumps(cert.as_dict()))
    print(f"wrote {path}")
    return EXIT_OK


def _blowup_params(cfg, args):
    b = cfg.blowup or cf.BlowupSection()
    t_max = float(args.t) if args.t is not None else (b.t_max or cfg.grid.T)
    return b.u_max, t_max, b.theta_min


def cmd_blowup(cfg, args) -> int:
    p = _problem(cfg)
    u_max, t_max, theta_min = _blowup_params(cfg, args)
    if not _checks(p, t_max, sys.stdout):
        return EXIT_FAIL
    v = bl.run_until_blowup(p, u_max, t_max, cfg.grid.nx, theta_min=theta_min,
                            eps_fix=cfg.solver.eps_fix, max_iter=cfg.solver.max_iter,
                            eps_evt=cfg.solver.eps_evt)
    t_star = "n/a" if v.t_star is None else f"{v.t_star:.6g}"
    print(f"verdict: {v.status} at t = {v.reached_t:.6g}, peak {v.peak:.6g}, T* = {t_star}")
    if v.message:
        print(f"  {v.message}")
    path = _out_path(cfg, args)
    write_atomic(path, dumps(v.as_dict(full=True)))
    print(f"wrote {path}")
    return EXIT_FAIL if v.status == bl.INCONCLUSIVE else EXIT_OK


def cmd_scan(cfg, args) -> int:
    if cfg.scan is None:
        raise cf.ConfigError("scan: section is required for the scan command")
    u_max, t_max, theta_min = _blowup_params(cfg, args)
    members = []
    for entry in cfg.scan.families:
        members += bl.expand_grid(entry.family, entry.params, entry.amplitudes)
    rows = bl.frontier_scan(members, u_max, t_max, cfg.grid.nx, theta_min=theta_min,
                            eps_fix=cfg.solver.eps_fix, max_iter=cfg.solver.max_iter,
                            eps_evt=cfg.solver.eps_evt)
    lines = [",".join(bl.SCAN_HEADER)]
    for r in rows:
        cells = [_fmt(r[k]) for k in bl.SCAN_HEADER]
        cells[1] = '"' + cells[1] + '"'
        lines.append(",".join(cells))
        print(f"{r['family']} {r['params']}: {r['verdict']}")
    path = _out_path(cfg, args)
    write_atomic(path, "\n".join(lines) + "\n")
    print(f"wrote {path}")
    return EXIT_OK


HANDLERS = {"validate": cmd_validate, "solve": cmd_solve, "bounds": cmd_bounds,
            "certify": cmd_certify, "blowup": cmd_blowup, "scan": cmd_scan}


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("configuration")
    src.add_argument("--config", metavar="PATH", help="JSON configuration file")
    src.add_argument("--preset", choices=PRESETS, help="use a built-in configuration")
    src.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="SECTION.KEY=VALUE",
                     help="override a config entry (value parsed as JSON); repeatable")
    src.add_argument("--dump-config", action="store_true",
                     help="print the resolved configuration and exit")
    common.add_argument("--t", type=float, metavar="T", help="time horizon (overrides grid.T)")
    common.add_argument("--derivatives", action="store_true",
                        help="also run the derivative pass and add du/dx, du/dt columns")
    common.add_argument("--out", metavar="PATH", help="output file (overrides output.path)")
    common.add_argument("--emit-plot", metavar="PATH",
                        help="write a long-format x,t,component,value CSV (solve only)")

    parser = argparse.ArgumentParser(
        prog="semihyp",
        description="Semilinear hyperbolic systems with nonlocal boundary conditions.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "validate": "check signs, differentiability and corner compatibility",
        "solve": "march the Picard slab scheme and write the solution",
        "bounds": "Lipschitz constants, slab widths and a priori bounds",
        "certify": "classify nonlinearity growth and compute radius bounds",
        "blowup": "march with dynamic slab widths until completion or blow-up",
        "scan": "run blow-up detection over growth-family parameter grids",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name], description=helps[name])
    return parser


def resolve_config(args) -> dict:
    if args.config and args.preset:
        raise UsageError("give either --config or --preset, not both")
    if args.preset:
        doc = preset(args.preset)
    elif args.config:
        doc = cf.load(args.config)
    else:
        raise UsageError("one of --config or --preset is required")
    if not isinstance(doc, dict):
        raise cf.ConfigError("<root>: configuration must be a JSON object")
    for item in args.overrides:
        cf.apply_override(doc, item)
    return doc


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc = resolve_config(args)
        cfg = cf.from_dict(doc)
        if args.dump_config:
            sys.stdout.write(dumps(cfg.to_dict()))
            return EXIT_OK
        return HANDLERS[args.command](cfg, args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"semihyp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (cf.ConfigError, ExprError, ProblemError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
