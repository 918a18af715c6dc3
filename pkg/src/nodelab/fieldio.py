"""Field and decomposition serialization.

The binary field format is one JSON header line (dims, spacing, origin,
periodicity, run-length encoded inside mask) followed by the float64
little-endian values of the inside nodes in C order.  CSV writers exist for
eyeballing fields, components, and scan records in anything that reads
tables; they are debugging aids, not the sweep store.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .domain import Grid, ScalarField
from .errors import FieldFormatError

_MAGIC = "nodelab-field"
_VERSION = 1


def _mask_runs(mask: np.ndarray) -> list[int]:
    """Alternating run lengths of the C-order mask, first run counts False."""
    flat = mask.ravel()
    if flat.size == 0:
        return []
    change = np.flatnonzero(flat[1:] != flat[:-1])
    edges = np.concatenate(([0], change + 1, [flat.size]))
    runs = np.diff(edges).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return [int(r) for r in runs]


def _runs_to_mask(runs, size: int) -> np.ndarray:
    mask = np.zeros(size, dtype=bool)
    pos, val = 0, False
    for r in runs:
        r = int(r)
        if r < 0 or pos + r > size:
            raise FieldFormatError("mask runs exceed the stated grid size")
        if val:
            mask[pos : pos + r] = True
        pos += r
        val = not val
    if pos != size:
        raise FieldFormatError(
            f"mask runs cover {pos} nodes, grid has {size}"
        )
    return mask


def save_field(field: ScalarField, path) -> Path:
    grid = field.grid
    header = {
        "format": _MAGIC,
        "version": _VERSION,
        "dims": list(grid.shape),
        "spacing": grid.spacing,
        "origin": list(grid.origin),
        "periodic": [bool(p) for p in grid.periodic],
        "mask_runs": _mask_runs(grid.inside),
    }
    payload = np.ascontiguousarray(
        field.values[grid.inside], dtype="<f8"
    ).tobytes()
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)
    return path


def read_field(path) -> ScalarField:
    with open(path, "rb") as fh:
        line = fh.readline()
        body = fh.read()
    try:
        header = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FieldFormatError(f"unreadable field header: {exc}") from exc
    if header.get("format") != _MAGIC:
        raise FieldFormatError("not a field file (bad magic)")
    if header.get("version") != _VERSION:
        raise FieldFormatError(
            f"unsupported field version {header.get('version')!r}"
        )
    shape = tuple(int(n) for n in header["dims"])
    size = int(np.prod(shape))
    mask = _runs_to_mask(header["mask_runs"], size).reshape(shape)
    n_inside = int(mask.sum())
    expected = n_inside * 8
    if len(body) != expected:
        raise FieldFormatError(
            f"payload holds {len(body)} bytes, expected {expected}"
        )
    grid = Grid(
        spacing=float(header["spacing"]),
        shape=shape,
        origin=tuple(float(x) for x in header["origin"]),
        periodic=tuple(bool(p) for p in header["periodic"]),
        inside=mask,
    )
    values = np.zeros(shape)
    values[mask] = np.frombuffer(body, dtype="<f8")
    return ScalarField(grid, values)


def field_to_csv(field: ScalarField, path) -> Path:
    """One row per inside node: integer index, coordinates, value."""
    grid = field.grid
    ndim = grid.ndim
    path = Path(path)
    idx = np.argwhere(grid.inside)
    vals = field.values[grid.inside]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            [f"i{d}" for d in range(ndim)]
            + [f"x{d}" for d in range(ndim)]
            + ["value"]
        )
        for row, v in zip(idx, vals):
            coords = [
                repr(grid.origin[d] + grid.spacing * int(row[d]))
                for d in range(ndim)
            ]
            w.writerow([int(i) for i in row] + coords + [repr(float(v))])
    return path


def components_to_csv(decomp, path) -> Path:
    """One row per nodal component: id, sign, sizes, deepest point."""
    ndim = decomp.grid.ndim
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["id", "sign", "volume", "node_count", "inradius"]
            + [f"deepest_x{d}" for d in range(ndim)]
        )
        for c in decomp.components:
            w.writerow(
                [c.id, c.sign, repr(c.volume), c.node_count, repr(c.inradius)]
                + [repr(x) for x in c.deepest_point]
            )
    return path


def summaries_to_json(entries, path) -> Path:
    """Scan summaries keyed by domain|mode|lam|radius.

    entries: iterable of (domain, mode, lam, radius, ScanSummary).
    """
    obj = {}
    for domain, mode, lam, radius, s in entries:
        key = f"{domain}|{mode}|{float(lam)!r}|{float(radius)!r}"
        obj[key] = {
            "lam": s.lam,
            "n_centers": s.n_centers,
            "n_records": s.n_records,
            "min_frac": s.min_frac,
            "p05_frac": s.p05_frac,
        }
    path = Path(path)
    path.write_text(
        json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return path


def records_to_csv(records, path) -> Path:
    """AsymmetryRecord stream as CSV, one ball per row."""
    records = list(records)
    path = Path(path)
    ndim = len(records[0].center) if records else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            [f"center_x{d}" for d in range(ndim)]
            + [
                "radius",
                "pos_frac",
                "neg_frac",
                "nodal_frac",
                "cells",
                "clipped",
                "lam",
            ]
        )
        for r in records:
            w.writerow(
                [repr(x) for x in r.center]
                + [
                    repr(r.radius),
                    repr(r.pos_frac),
                    repr(r.neg_frac),
                    repr(r.nodal_frac),
                    r.cells,
                    int(r.clipped),
                    repr(r.lam),
                ]
            )
    return path
