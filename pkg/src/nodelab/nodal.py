"""Nodal domains of a scalar field and their discrete geometry.

A node is nodal when |value| <= zero_tol * max|value|; the remaining inside
nodes split into positive and negative sets, and connected components are
taken with face adjacency only (diagonal neighbours do not connect, so the
checkerboard patterns of product modes come out with the full component
count).  On periodic axes components are merged across the seam.

Volumes count one h^n cell per node.  The inner radius of a component is
the largest exact Euclidean distance from one of its nodes to the nearest
node outside the component, computed per component on its bounding window
(distances to the complement are local, so the crop is exact).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .domain import Grid, ScalarField
from .errors import (
    AllNodalError,
    InfiniteDistanceError,
    OutOfDomainError,
    UnderResolvedBallError,
    UnknownComponentError,
)


@dataclass(frozen=True)
class NodalComponent:
    id: int
    sign: int
    volume: float
    node_count: int
    inradius: float
    deepest_index: tuple[int, ...]
    deepest_point: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class NodalDecomposition:
    """Labelled sign components of a field.

    labels      grid-shaped int array, 0 for nodal/outside nodes
    components  per-label geometry, ids 1..K ordered by first node index
    nodal_cells sorted flat indices of the nodal nodes
    """

    grid: Grid
    labels: np.ndarray
    components: tuple[NodalComponent, ...]
    nodal_cells: np.ndarray

    def component(self, component_id: int) -> NodalComponent:
        if not 1 <= component_id <= len(self.components):
            raise UnknownComponentError(
                f"no component {component_id}; have 1..{len(self.components)}"
            )
        return self.components[component_id - 1]


class _DSU:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def _merge_seams(labels: np.ndarray, grid: Grid, count: int) -> np.ndarray:
    """Relabel so components touching across periodic seams are joined."""
    if count == 0 or not any(grid.periodic):
        return labels
    dsu = _DSU(count + 1)
    for d in range(grid.ndim):
        if not grid.periodic[d]:
            continue
        first = [slice(None)] * grid.ndim
        last = [slice(None)] * grid.ndim
        first[d] = 0
        last[d] = -1
        a = labels[tuple(last)].ravel()
        b = labels[tuple(first)].ravel()
        for la, lb in zip(a[(a > 0) & (b > 0)], b[(a > 0) & (b > 0)]):
            dsu.union(int(la), int(lb))
    remap = np.arange(count + 1)
    for i in range(1, count + 1):
        remap[i] = dsu.find(i)
    return remap[labels]


def _tiled_edt(mask: np.ndarray, grid: Grid) -> np.ndarray:
    """Exact Euclidean distance to the nearest False node, wrapping
    periodic axes by tiling three periods and cropping the middle copy."""
    reps = tuple(3 if p else 1 for p in grid.periodic)
    if any(p for p in grid.periodic):
        tiled = np.tile(mask, reps)
        dist = ndimage.distance_transform_edt(tiled, sampling=grid.spacing)
        crop = tuple(
            slice(n, 2 * n) if p else slice(None)
            for n, p in zip(grid.shape, grid.periodic)
        )
        return np.ascontiguousarray(dist[crop])
    return ndimage.distance_transform_edt(mask, sampling=grid.spacing)


def label_components(mask: np.ndarray, grid: Grid):
    """Face-connected components of a mask, merged across periodic seams.

    Returns (labels, count) with compact labels 1..count ordered by each
    component's first node in C order.
    """
    structure = ndimage.generate_binary_structure(grid.ndim, 1)
    labels, n = ndimage.label(np.asarray(mask, bool), structure=structure)
    labels = _merge_seams(labels, grid, n)
    flat = labels.ravel()
    uniq, first_idx = np.unique(flat, return_index=True)
    keep = uniq > 0
    order = uniq[keep][np.argsort(first_idx[keep])]
    remap = np.zeros(int(labels.max()) + 1, dtype=np.int32)
    remap[order] = np.arange(1, len(order) + 1)
    return remap[labels], len(order)


def distance_transform(mask: np.ndarray, grid: Grid) -> ScalarField:
    """Exact Euclidean distance from each True node to the nearest False node."""
    mask = np.asarray(mask, bool)
    if mask.shape != tuple(grid.shape):
        raise ValueError("mask shape does not match grid")
    if mask.all():
        raise InfiniteDistanceError("mask has no complement node")
    dist = _tiled_edt(mask, grid)
    return ScalarField(grid.with_inside(mask), dist)


def _component_geometry(labels, comp_id, grid, obj):
    """(inradius, deepest index) for one label, on its bounding window."""
    wraps = False
    for d in range(grid.ndim):
        if not grid.periodic[d]:
            continue
        first = [slice(None)] * grid.ndim
        last = [slice(None)] * grid.ndim
        first[d], last[d] = 0, -1
        if (labels[tuple(first)] == comp_id).any() and (
            labels[tuple(last)] == comp_id
        ).any():
            wraps = True
    if wraps:
        dist = _tiled_edt(labels == comp_id, grid)
        flat = int(np.argmax(dist))
        idx = np.unravel_index(flat, grid.shape)
        return float(dist[idx]), idx

    window = tuple(
        slice(max(s.start - 1, 0), min(s.stop + 1, n))
        for s, n in zip(obj, grid.shape)
    )
    sub = labels[window] == comp_id
    dist = ndimage.distance_transform_edt(sub, sampling=grid.spacing)
    flat = int(np.argmax(dist))
    local = np.unravel_index(flat, sub.shape)
    idx = tuple(s.start + i for s, i in zip(window, local))
    return float(dist[local]), idx


def extract_nodal_domains(field: ScalarField, zero_tol: float = 1e-12) -> NodalDecomposition:
    """Label the sign components of a field; see module docstring."""
    grid = field.grid
    top = field.max_abs
    if top == 0.0:
        raise AllNodalError("field is identically zero")
    tol_abs = zero_tol * top
    v = field.values
    nodal = grid.inside & (np.abs(v) <= tol_abs)
    pos = grid.inside & (v > tol_abs)
    neg = grid.inside & (v < -tol_abs)
    if not pos.any() and not neg.any():
        raise AllNodalError("every inside node is nodal at this tolerance")

    structure = ndimage.generate_binary_structure(grid.ndim, 1)
    lab_pos, n_pos = ndimage.label(pos, structure=structure)
    lab_neg, n_neg = ndimage.label(neg, structure=structure)
    labels = lab_pos + np.where(lab_neg > 0, lab_neg + n_pos, 0)
    labels = _merge_seams(labels, grid, n_pos + n_neg)

    # Compact ids, ordered by each component's first node in C order.
    flat = labels.ravel()
    uniq, first_idx = np.unique(flat, return_index=True)
    keep = uniq > 0
    order = uniq[keep][np.argsort(first_idx[keep])]
    remap = np.zeros(int(labels.max()) + 1, dtype=np.int32)
    remap[order] = np.arange(1, len(order) + 1)
    labels = remap[labels]

    counts = np.bincount(labels.ravel(), minlength=len(order) + 1)
    signs = np.zeros(len(order) + 1, dtype=int)
    signs[labels[pos].ravel()] = 1
    signs[labels[neg].ravel()] = -1

    comps = []
    objects = ndimage.find_objects(labels)
    for cid in range(1, len(order) + 1):
        inradius, idx = _component_geometry(labels, cid, grid, objects[cid - 1])
        point = tuple(
            float(grid.origin[d] + grid.spacing * idx[d]) for d in range(grid.ndim)
        )
        comps.append(
            NodalComponent(
                id=cid,
                sign=int(signs[cid]),
                volume=float(counts[cid]) * grid.cell_volume,
                node_count=int(counts[cid]),
                inradius=inradius,
                deepest_index=idx,
                deepest_point=point,
            )
        )

    labels = labels.astype(np.int32)
    labels.flags.writeable = False
    return NodalDecomposition(
        grid=grid,
        labels=labels,
        components=tuple(comps),
        nodal_cells=np.flatnonzero(nodal.ravel()),
    )


def inner_radius(decomp: NodalDecomposition, component_id: int):
    """(inradius, deepest point) of one component."""
    c = decomp.component(component_id)
    return c.inradius, c.deepest_point


def ball_window(grid: Grid, center, radius: float):
    """Node window covering a ball: (index arrays for np.ix_, dist^2 array).

    Periodic axes wrap; non-periodic axes clip at the box, so the returned
    window may cover less than the full ball there.
    """
    axes_idx = []
    dist2 = 0.0
    for d in range(grid.ndim):
        reach = int(np.floor(radius / grid.spacing)) + 1
        i0 = int(np.floor((center[d] - grid.origin[d]) / grid.spacing))
        ii = np.arange(i0 - reach, i0 + reach + 2)
        x = grid.origin[d] + ii * grid.spacing
        dd = grid.axis_delta(d, x, center[d]) ** 2
        if grid.periodic[d]:
            ii = ii % grid.shape[d]
        else:
            keep = (ii >= 0) & (ii < grid.shape[d])
            ii, dd = ii[keep], dd[keep]
        sh = [1] * grid.ndim
        sh[d] = -1
        axes_idx.append(ii)
        dist2 = dist2 + dd.reshape(sh)
    return axes_idx, dist2


@dataclass(frozen=True)
class BallCount:
    """Cell-counted sign fractions of a field inside one ball."""

    center: tuple[float, ...]
    radius: float
    pos_frac: float
    neg_frac: float
    nodal_frac: float
    cells: int
    clipped: bool


def positivity_volume_in_ball(
    field: ScalarField, center, radius: float, zero_tol: float = 1e-12
) -> BallCount:
    """Fractions of ball cells where the field is positive / negative / nodal.

    Cells are counted by their centers.  Parts of the ball outside the
    domain are dropped from the denominator and flagged via `clipped`.
    """
    grid = field.grid
    if radius < 2 * grid.spacing:
        raise UnderResolvedBallError(
            f"radius {radius:.4g} below two grid spacings {2 * grid.spacing:.4g}"
        )
    for d in range(grid.ndim):
        if grid.periodic[d] and 2 * radius > grid.period(d):
            raise OutOfDomainError("ball wraps onto itself on a periodic axis")
        if not grid.periodic[d]:
            lo, hi = grid.origin[d], grid.origin[d] + grid.extent(d)
            if not (lo - 1e-12 <= center[d] <= hi + 1e-12):
                raise OutOfDomainError(f"center {tuple(center)} outside the box")

    idx, dist2 = ball_window(grid, center, radius)
    in_ball = dist2 <= radius * radius * (1 + 1e-12)
    sub_inside = grid.inside[np.ix_(*idx)]
    sub_vals = field.values[np.ix_(*idx)]

    counted = in_ball & sub_inside
    cells = int(counted.sum())
    if cells == 0:
        raise OutOfDomainError("ball contains no domain cells")
    # Clipped if the ball covers non-domain cells, or stuck out of the box
    # (in which case the window holds fewer lattice cells than a free ball).
    clipped = bool((in_ball & ~sub_inside).any())
    if not clipped:
        clipped = int(in_ball.sum()) < _lattice_ball_count(grid, center, radius)

    tol_abs = zero_tol * field.max_abs
    vals = sub_vals[counted]
    pos = int((vals > tol_abs).sum())
    neg = int((vals < -tol_abs).sum())
    return BallCount(
        center=tuple(float(c) for c in center),
        radius=float(radius),
        pos_frac=pos / cells,
        neg_frac=neg / cells,
        nodal_frac=(cells - pos - neg) / cells,
        cells=cells,
        clipped=clipped,
    )


def _lattice_ball_count(grid: Grid, center, radius: float) -> int:
    """How many lattice cells the ball would hold with no box in the way."""
    dist2 = 0.0
    for d in range(grid.ndim):
        reach = int(np.floor(radius / grid.spacing)) + 1
        i0 = int(np.floor((center[d] - grid.origin[d]) / grid.spacing))
        ii = np.arange(i0 - reach, i0 + reach + 2)
        x = grid.origin[d] + ii * grid.spacing
        dd = (x - center[d]) ** 2
        sh = [1] * grid.ndim
        sh[d] = -1
        dist2 = dist2 + dd.reshape(sh)
    return int((dist2 <= radius * radius * (1 + 1e-12)).sum())
