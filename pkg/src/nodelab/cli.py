"""Command line front end.

Subcommands: solve, nodal, scan, inradius, capacity, sweep, report.  Each
prints one JSON line on success so shell pipelines can pick results apart
with jq.  Exit codes: 0 all checks passed, 2 checks ran but some failed,
1 execution error (bad config, solver failure, and so on).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .capacity import solve_capacity
from .config import load_config, parse_config
from .domain import Grid, build_grid, sample_closed_form
from .eigensolve import assemble_operator, lowest_eigenpairs
from .errors import NodelabError
from .fieldio import (
    components_to_csv,
    records_to_csv,
    save_field,
    summaries_to_json,
)
from .harness import read_rows, run_sweep
from .nodal import extract_nodal_domains
from .asymmetry import scan_asymmetry
from .powerlaw import fit_power_law
from .report import emit_report


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _mode_label(mode) -> str:
    return "x".join(str(m) for m in mode)


def _config(args):
    overrides = {
        "seed": args.seed,
        "eps0": args.eps0,
        "jobs": args.jobs,
        "out": args.out,
    }
    if args.config:
        return load_config(args.config, overrides)
    return parse_config("", overrides)


def _cmd_solve(args) -> int:
    cfg = _config(args)
    spec = cfg.domain_spec()
    n_cells = args.n_cells or cfg.resolution_for(cfg.modes[0])
    grid = build_grid(spec, n_cells)
    op = assemble_operator(grid)
    pairs = lowest_eigenpairs(op, k=args.k, seed=cfg.seed)
    saved = []
    if args.save:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        for p in pairs:
            path = out / f"{cfg.name}-eig{p.k:03d}.field"
            save_field(p.field, path)
            saved.append(str(path))
    _emit(
        {
            "command": "solve",
            "kind": cfg.kind,
            "n_cells": n_cells,
            "k": args.k,
            "eigenvalues": [p.lam for p in pairs],
            "max_residual": max(p.residual for p in pairs),
            "saved": saved,
        }
    )
    return 0


def _cmd_nodal(args) -> int:
    cfg = _config(args)
    spec = cfg.domain_spec()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    counts, files = {}, []
    for mode in cfg.modes:
        grid = build_grid(spec, cfg.resolution_for(mode))
        _, field = sample_closed_form(spec, mode, grid)
        decomp = extract_nodal_domains(field)
        label = _mode_label(mode)
        counts[label] = len(decomp.components)
        path = out / f"{cfg.name}-{label}-components.csv"
        components_to_csv(decomp, path)
        files.append(str(path))
    _emit({"command": "nodal", "components": counts, "files": files})
    return 0


def _cmd_scan(args) -> int:
    cfg = _config(args)
    spec = cfg.domain_spec()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    files, entries = [], []
    stats = {}
    for mode in cfg.modes:
        grid = build_grid(spec, cfg.resolution_for(mode))
        lam, field = sample_closed_form(spec, mode, grid)
        label = _mode_label(mode)
        records = []
        for r in cfg.scan_radii(lam):
            if r < 4 * grid.spacing:
                continue
            recs, summary = scan_asymmetry(
                field, lam, [r], cfg.max_centers, seed=cfg.seed
            )
            records.extend(recs)
            entries.append((cfg.kind, label, lam, r, summary))
        if not records:
            continue
        path = out / f"{cfg.name}-{label}-balls.csv"
        records_to_csv(records, path)
        files.append(str(path))
        stats[label] = {
            "min_frac": min(min(x.pos_frac, x.neg_frac) for x in records),
            "n_records": len(records),
        }
    summary_path = out / f"{cfg.name}-scan-summary.json"
    summaries_to_json(entries, summary_path)
    _emit(
        {
            "command": "scan",
            "modes": stats,
            "records_csv": files,
            "summary_json": str(summary_path),
        }
    )
    return 0


def _cmd_inradius(args) -> int:
    cfg = _config(args)
    spec = cfg.domain_spec()
    points = []
    for mode in cfg.modes:
        grid = build_grid(spec, cfg.resolution_for(mode))
        lam, field = sample_closed_form(spec, mode, grid)
        decomp = extract_nodal_domains(field)
        points.append((lam, max(c.inradius for c in decomp.components)))
    result = {
        "command": "inradius",
        "points": [[lam, r] for lam, r in points],
        "exponent": None,
        "coefficient": None,
        "r_squared": None,
    }
    if len(points) >= 3:
        fit = fit_power_law(points)
        result.update(
            exponent=fit.exponent,
            coefficient=fit.coefficient,
            r_squared=fit.r_squared,
        )
    _emit(result)
    return 0


def _concentric_masks(dim: int, rho: float, outer: float, n_cells: int):
    """Box grid holding two concentric balls with a one-node collar."""
    half = 1.1 * outer
    h = 2 * half / n_cells
    shape = (n_cells + 1,) * dim
    grid = Grid(h, shape, (-half,) * dim, (False,) * dim,
                np.ones(shape, dtype=bool))
    axes = [(-half + h * np.arange(n)) ** 2 for n in shape]
    rr = np.zeros(shape)
    for d, sq in enumerate(axes):
        rr = rr + sq.reshape([-1 if i == d else 1 for i in range(dim)])
    f_mask = rr <= rho * rho * (1 + 1e-12)
    outer_mask = rr <= outer * outer * (1 + 1e-12)
    return grid, f_mask, outer_mask


def _cmd_capacity(args) -> int:
    if args.rho <= 0 or args.outer <= args.rho:
        raise NodelabError("need 0 < rho < outer")
    grid, f_mask, outer_mask = _concentric_masks(
        args.dim, args.rho, args.outer, args.n_cells
    )
    prob = solve_capacity(f_mask, outer_mask, grid)
    if args.dim == 3:
        reference = 4 * math.pi / (1 / args.rho - 1 / args.outer)
    else:
        reference = 2 * math.pi / math.log(args.outer / args.rho)
    rel_err = abs(prob.energy - reference) / reference
    passed = rel_err <= args.rtol
    _emit(
        {
            "command": "capacity",
            "dim": args.dim,
            "rho": args.rho,
            "outer": args.outer,
            "n_cells": args.n_cells,
            "value": prob.energy,
            "reference": reference,
            "rel_err": rel_err,
            "method": prob.method,
            "passed": passed,
        }
    )
    return 0 if passed else 2


def _cmd_sweep(args) -> int:
    cfg = _config(args)
    result = run_sweep(cfg)
    _emit(
        {
            "command": "sweep",
            "rows": len(result.rows),
            "new_rows": result.new_rows,
            "reused_modes": list(result.reused_modes),
            "csv": str(result.csv_path),
            "summary": str(result.summary_path),
        }
    )
    return 0


def _cmd_report(args) -> int:
    cfg = _config(args)
    out = Path(cfg.out)
    rows = read_rows(out / "results.csv")
    result = emit_report(rows, out)
    _emit(
        {
            "command": "report",
            "passed": result.passed,
            "sections": {s.name: s.passed for s in result.sections},
            "report_md": str(result.md_path),
            "report_json": str(result.json_path),
            "plots": [str(p) for p in result.svg_paths],
        }
    )
    return 0 if result.passed else 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=None,
                        help="experiment config file (defaults apply if omitted)")
    common.add_argument("--out", metavar="DIR", default=None,
                        help="output directory (overrides config)")
    common.add_argument("--jobs", metavar="N", type=int, default=None,
                        help="worker threads for sweeps")
    common.add_argument("--seed", metavar="S", type=int, default=None,
                        help="subsampling seed")
    common.add_argument("--eps0", metavar="X", type=float, default=None,
                        help="wavelength-ball scale")

    parser = argparse.ArgumentParser(
        prog="nodelab",
        description="eigenfunction nodal-geometry toolkit",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("solve", parents=[common],
                       help="lowest eigenpairs of the configured domain")
    p.add_argument("--k", type=int, default=6, help="number of eigenpairs")
    p.add_argument("--n-cells", type=int, default=0,
                   help="override grid resolution")
    p.add_argument("--save", action="store_true",
                   help="write eigenfunctions as .field files")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("nodal", parents=[common],
                       help="nodal decompositions of the configured modes")
    p.set_defaults(func=_cmd_nodal)

    p = sub.add_parser("scan", parents=[common],
                       help="ball asymmetry scan along the nodal set")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("inradius", parents=[common],
                       help="inner radii per mode with a power-law fit")
    p.set_defaults(func=_cmd_inradius)

    p = sub.add_parser("capacity", parents=[common],
                       help="concentric-ball capacity against the closed form")
    p.add_argument("--dim", type=int, choices=(2, 3), default=3)
    p.add_argument("--rho", type=float, default=0.25,
                   help="inner ball radius")
    p.add_argument("--outer", type=float, default=1.0,
                   help="outer ball radius")
    p.add_argument("--n-cells", type=int, default=96,
                   help="cells across the bounding box")
    p.add_argument("--rtol", type=float, default=0.05,
                   help="acceptance threshold on the relative error")
    p.set_defaults(func=_cmd_capacity)

    p = sub.add_parser("sweep", parents=[common],
                       help="run the configured sweep (idempotent)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", parents=[common],
                       help="render report.md/report.json from stored rows")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NodelabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
