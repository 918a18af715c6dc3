"""Sweep runner: one row store per output directory, idempotent per mode.

A sweep walks the configured modes, runs the requested checks, and appends
long-format rows to results.csv.  Rows are keyed by (config hash, mode):
once a mode has rows under a given config hash it is never recomputed, so
rerunning a finished sweep rewrites the identical file byte for byte.

CSV columns (frozen; values are repr-formatted so parsing round-trips):

    config_hash, name, mode, component, lam, n_cells, check, metric, value
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .asymmetry import (
    doubling_scan,
    scan_asymmetry,
    verify_positivity_bound,
    wavelength_ball_centers,
)
from .config import ExperimentConfig
from .domain import build_grid, iter_rescaled, sample_closed_form
from .eigensolve import dirichlet_ground_value
from .errors import ConfigError, PreconditionError
from .capacity import verify_thm61
from .nodal import extract_nodal_domains

COLUMNS = (
    "config_hash",
    "name",
    "mode",
    "component",
    "lam",
    "n_cells",
    "check",
    "metric",
    "value",
)

_DEFAULT_CHECKS = {
    2: ("inradius", "asymmetry", "doubling", "posvol"),
    3: ("inradius", "thm61"),
}


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[dict, ...]
    new_rows: int
    reused_modes: tuple[str, ...]
    csv_path: Path
    summary_path: Path


def _mode_name(mode) -> str:
    return "x".join(str(m) for m in mode)


def _mode_sort_key(row: dict):
    mode = tuple(int(t) for t in row["mode"].split("x"))
    component = int(row["component"]) if row["component"] else -1
    return (row["config_hash"], row["name"], mode, component,
            row["check"], row["metric"])


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_rows(csv_path: Path) -> list[dict]:
    if not Path(csv_path).exists():
        return []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is not None and tuple(reader.fieldnames) != COLUMNS:
            raise ConfigError(
                f"{csv_path} has columns {reader.fieldnames}, expected {COLUMNS}"
            )
        return list(reader)


def write_rows(csv_path: Path, rows: list[dict]):
    tmp = Path(str(csv_path) + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([row[c] for c in COLUMNS])
    os.replace(tmp, csv_path)


def _rows_for_mode(cfg: ExperimentConfig, mode) -> list[dict]:
    spec = cfg.domain_spec()
    n_cells = cfg.resolution_for(mode)
    grid = build_grid(spec, n_cells)
    lam, field = sample_closed_form(spec, mode, grid)
    checks = cfg.checks or _DEFAULT_CHECKS.get(grid.ndim, ("inradius",))

    base = {
        "config_hash": cfg.config_hash,
        "name": cfg.name,
        "mode": _mode_name(mode),
        "lam": _fmt(float(lam)),
        "n_cells": str(n_cells),
    }

    def row(check, metric, value, component=""):
        out = dict(base)
        out.update(check=check, metric=metric, value=_fmt(value),
                   component=component)
        return out

    rows: list[dict] = []
    decomp = None
    if "inradius" in checks or "thm61" in checks:
        decomp = extract_nodal_domains(field)

    if "inradius" in checks:
        radii = [c.inradius for c in decomp.components]
        rows.append(row("inradius", "inradius_max", max(radii)))
        rows.append(row("inradius", "inradius_min", min(radii)))
        rows.append(row("inradius", "n_components", len(radii)))

    if "asymmetry" in checks:
        radii = [r for r in cfg.scan_radii(lam) if r >= 4 * grid.spacing]
        if radii:
            records, summary = scan_asymmetry(
                field, lam, radii, cfg.max_centers, seed=cfg.seed
            )
            rows.append(row("asymmetry", "min_frac", summary.min_frac))
            rows.append(row("asymmetry", "p05_frac", summary.p05_frac))
            rows.append(row("asymmetry", "n_records", summary.n_records))
            rows.append(row("asymmetry", "n_radii", len(radii)))

    if "doubling" in checks or "posvol" in checks:
        centers = wavelength_ball_centers(
            field, lam, cfg.eps0, cfg.max_centers, seed=cfg.seed
        )
        if "doubling" in checks:
            scan = doubling_scan(field, lam, cfg.eps0, centers=centers)
            rows.append(row("doubling", "beta_max", scan.max_beta))
            rows.append(row("doubling", "beta_p50", scan.quantile(0.5)))
            rows.append(row("doubling", "beta_p95", scan.quantile(0.95)))
            rows.append(row("doubling", "n_centers", len(centers)))
        if "posvol" in checks:
            ratios = []
            for _, unit in iter_rescaled(field, centers, lam, cfg.eps0):
                try:
                    ratios.append(verify_positivity_bound(unit).ratio)
                except PreconditionError:
                    continue
            if ratios:
                rows.append(row("posvol", "ratio_min", min(ratios)))
                rows.append(row("posvol", "n_balls", len(ratios)))

    if "thm61" in checks:
        if grid.ndim != 3:
            raise ConfigError("thm61 check needs a 3D domain")
        by_size = sorted(decomp.components, key=lambda c: (-c.node_count, c.id))
        for comp in by_size[: cfg.components_per_mode]:
            submask = decomp.labels == comp.id
            lam1 = dirichlet_ground_value(grid, submask)
            check = verify_thm61(
                submask, grid, lam1, max_centers=cfg.alpha_centers,
                seed=cfg.seed,
            )
            cid = str(comp.id)
            rows.append(row("thm61", "lam1", check.lam1, cid))
            rows.append(row("thm61", "alpha", check.alpha, cid))
            rows.append(row("thm61", "inradius", check.inradius, cid))
            rows.append(row("thm61", "slack", check.slack, cid))
            rows.append(
                row("thm61", "lam1_inrad2", check.lam1 * check.inradius**2, cid)
            )
    return rows


def run_sweep(cfg: ExperimentConfig, out_dir=None, jobs=None) -> SweepResult:
    """Run all configured modes, reusing stored rows where they exist."""
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "results.csv"
    summary_path = out / "summary.json"

    existing = read_rows(csv_path)
    have = {(r["config_hash"], r["mode"]) for r in existing}
    todo = [m for m in cfg.modes
            if (cfg.config_hash, _mode_name(m)) not in have]
    reused = tuple(
        _mode_name(m) for m in cfg.modes
        if (cfg.config_hash, _mode_name(m)) in have
    )

    workers = jobs if jobs is not None else cfg.jobs
    new_rows: list[dict] = []
    if todo:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for rows in pool.map(lambda m: _rows_for_mode(cfg, m), todo):
                    new_rows.extend(rows)
        else:
            for m in todo:
                new_rows.extend(_rows_for_mode(cfg, m))

    all_rows = sorted(existing + new_rows, key=_mode_sort_key)
    write_rows(csv_path, all_rows)

    summary = {
        "name": cfg.name,
        "config_hash": cfg.config_hash,
        "kind": cfg.kind,
        "modes": {
            _mode_name(m): {
                "lam": cfg.mode_eigenvalue(m),
                "n_cells": cfg.resolution_for(m),
            }
            for m in cfg.modes
        },
        "row_count": len(all_rows),
    }
    tmp = Path(str(summary_path) + ".tmp")
    tmp.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n",
                   encoding="utf-8")
    os.replace(tmp, summary_path)

    return SweepResult(
        rows=tuple(all_rows),
        new_rows=len(new_rows),
        reused_modes=reused,
        csv_path=csv_path,
        summary_path=summary_path,
    )
