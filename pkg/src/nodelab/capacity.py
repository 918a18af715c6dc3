"""Condenser capacity, cube-local Rayleigh quotients, and spectral bounds.

The discrete capacity of a set F grounded outside an outer set solves the
flat Laplace system with potential 1 on F and 0 beyond the outer set, then
evaluates the face-difference Dirichlet energy of the solution.  Because
the solve minimises exactly the quadratic form that `rayleigh_quotient`
and `check_mazya_poincare` integrate, set monotonicity of the capacity is
inherited from the variational principle rather than hoped for: enlarging
F (or shrinking the outer set) shrinks the admissible class.

`local_rayleigh_min` partitions the grid into cubes and takes the smallest
per-cube quotient; since faces are attached to base nodes, the cube
energies add up to the global energy exactly and the minimum can never
exceed the global quotient (mediant inequality).

`asym_alpha` measures the worst complement fraction over balls whose half
ball meets the complement; combined with the inner radius it gives the
lower spectral bound checked by `verify_thm61` (n = 3) and the area-aware
2D variant checked by `verify_2d_remark`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg, spsolve

from .domain import Grid, ScalarField
from .eigensolve import (
    assemble_operator,
    dirichlet_ground_value,
    gradient_energy_density,
)
from .errors import (
    ConvergenceError,
    DegenerateRegionError,
    EmptyDomainError,
    NoZeroSetError,
    OutOfDomainError,
    PreconditionError,
    UndefinedAlphaError,
    UnsupportedDimensionError,
)
from .nodal import _tiled_edt, ball_window, label_components

_DIRECT_SOLVE_LIMIT = 40_000


@dataclass(frozen=True, eq=False)
class CubePartition:
    """Axis-aligned cube blocks covering every grid node exactly once.

    Cube side defaults to eight times the largest inradius of the set being
    analysed; trailing partial cubes are merged into their neighbours.
    """

    grid: Grid
    h_cube: float
    blocks: tuple[tuple[slice, ...], ...]

    def __post_init__(self):
        covered = np.zeros(self.grid.shape, dtype=np.int32)
        for blk in self.blocks:
            covered[blk] += 1
        if covered.min() != 1 or covered.max() != 1:
            raise ValueError("blocks must partition the grid nodes")


def build_cube_partition(
    grid: Grid,
    omega_mask: np.ndarray | None = None,
    h_cube: float | None = None,
) -> CubePartition:
    """Partition the grid into cubes of side ~h_cube (default 8 * inradius)."""
    if h_cube is None:
        if omega_mask is None:
            raise ValueError("need omega_mask or an explicit h_cube")
        mask = np.asarray(omega_mask, bool)
        if mask.all() or not mask.any():
            raise ValueError("omega_mask must be a proper subset of the grid")
        inrad = float(_tiled_edt(mask, grid).max())
        h_cube = 8.0 * inrad
    cells = max(1, int(round(h_cube / grid.spacing)))
    per_axis = []
    for n in grid.shape:
        starts = list(range(0, n, cells))
        if len(starts) > 1 and n - starts[-1] < cells:
            starts.pop()  # merge the trailing partial cube into its neighbour
        stops = starts[1:] + [n]
        per_axis.append([slice(a, b) for a, b in zip(starts, stops)])
    blocks = tuple(tuple(combo) for combo in product(*per_axis))
    return CubePartition(grid=grid, h_cube=cells * grid.spacing, blocks=blocks)


@dataclass(frozen=True)
class LocalRayleighMin:
    value: float
    block_index: int
    block: tuple[slice, ...]
    n_blocks: int


def local_rayleigh_min(psi: ScalarField, partition: CubePartition) -> LocalRayleighMin:
    """Smallest per-cube Rayleigh quotient; never exceeds the global one."""
    if psi.grid is not partition.grid and psi.grid.shape != partition.grid.shape:
        raise ValueError("partition built for a different grid")
    grid = psi.grid
    energy = gradient_energy_density(psi.values, grid)
    mass = psi.values**2 * grid.cell_volume
    best = None
    for i, blk in enumerate(partition.blocks):
        den = float(mass[blk].sum())
        if den == 0.0:
            continue
        ratio = float(energy[blk].sum()) / den
        if best is None or ratio < best[0]:
            best = (ratio, i, blk)
    if best is None:
        raise DegenerateRegionError("psi vanishes on every cube")
    return LocalRayleighMin(
        value=best[0], block_index=best[1], block=best[2],
        n_blocks=len(partition.blocks),
    )


@dataclass(frozen=True, eq=False)
class CapacityProblem:
    """Solved condenser: potential, energy, and the masks that defined it."""

    grid: Grid
    f_mask: np.ndarray
    outer_mask: np.ndarray
    potential: ScalarField
    energy: float
    residual: float
    method: str


def solve_capacity(
    f_mask: np.ndarray,
    outer_mask: np.ndarray,
    grid: Grid,
    rtol: float = 1e-10,
) -> CapacityProblem:
    """Potential 1 on F, grounded outside the outer set; energy = capacity."""
    f_mask = np.asarray(f_mask, bool)
    outer = np.asarray(outer_mask, bool)
    if f_mask.shape != tuple(grid.shape) or outer.shape != tuple(grid.shape):
        raise ValueError("masks must have the grid shape")
    if not f_mask.any():
        zero = ScalarField(grid.with_inside(outer), np.zeros(grid.shape))
        return CapacityProblem(grid, f_mask, outer, zero, 0.0, 0.0, "empty")
    if (f_mask & ~outer).any():
        raise PreconditionError("F must sit inside the outer set")
    for d in range(grid.ndim):
        if grid.periodic[d]:
            continue
        sl = [slice(None)] * grid.ndim
        for edge in (0, -1):
            sl[d] = edge
            if outer[tuple(sl)].any():
                raise OutOfDomainError(
                    "outer set touches the grid edge; capacity needs a collar"
                )

    u_full = np.where(f_mask, 1.0, 0.0)
    unknown = outer & ~f_mask
    method = "fixed"
    residual = 0.0
    if unknown.any():
        op = assemble_operator(grid.with_inside(np.ones(grid.shape, bool)),
                               submask=unknown)
        h2 = grid.spacing**2
        rhs_grid = np.zeros(grid.shape)
        find = f_mask.astype(float)
        for d in range(grid.ndim):
            for s in (1, -1):
                if grid.periodic[d]:
                    rhs_grid += np.roll(find, s, axis=d)
                else:
                    shifted = np.zeros_like(find)
                    src = [slice(None)] * grid.ndim
                    dst = [slice(None)] * grid.ndim
                    if s > 0:
                        src[d] = slice(0, grid.shape[d] - 1)
                        dst[d] = slice(1, grid.shape[d])
                    else:
                        src[d] = slice(1, grid.shape[d])
                        dst[d] = slice(0, grid.shape[d] - 1)
                    shifted[tuple(dst)] = find[tuple(src)]
                    rhs_grid += shifted
        b = rhs_grid[unknown] / h2
        if op.dim <= _DIRECT_SOLVE_LIMIT:
            x = spsolve(sparse.csc_matrix(op.matrix), b)
            method = "direct"
        else:
            from pyamg import smoothed_aggregation_solver

            ml = smoothed_aggregation_solver(op.matrix)
            x, info = cg(op.matrix, b, rtol=rtol, atol=0.0,
                         M=ml.aspreconditioner(), maxiter=2000)
            if info != 0:
                raise ConvergenceError(f"capacity CG did not converge ({info})")
            method = "amg-cg"
        residual = float(
            np.linalg.norm(op.matrix @ x - b) / max(np.linalg.norm(b), 1e-300)
        )
        if residual > 10 * max(rtol, 1e-14):
            raise ConvergenceError(
                f"capacity solve residual {residual:.3e} above {rtol:.1e}",
                best_residual=residual,
            )
        u_full[unknown] = x

    energy = float(gradient_energy_density(u_full, grid).sum())
    pot = ScalarField(grid.with_inside(outer | f_mask), u_full)
    return CapacityProblem(grid, f_mask, outer, pot, energy, residual, method)


def capacity(f_mask, outer_mask, grid: Grid, rtol: float = 1e-10) -> float:
    return solve_capacity(f_mask, outer_mask, grid, rtol).energy


@dataclass(frozen=True)
class MazyaCheck:
    """Cube Poincare inequality through the capacity of the zero set."""

    lhs: float
    rhs_over_cap: float
    fitted_c5: float
    cap: float
    side: float


def _double_cube(cube, grid: Grid):
    out = []
    for d, sl in enumerate(cube):
        span = sl.stop - sl.start
        lo = sl.start - (span + 1) // 2
        hi = sl.stop + (span + 1) // 2
        if lo < 0 or hi > grid.shape[d]:
            raise OutOfDomainError("doubled cube leaves the grid")
        out.append(slice(lo, hi))
    return tuple(out)


def check_mazya_poincare(
    u: ScalarField, cube: tuple[slice, ...], zero_tol: float = 1e-12
) -> MazyaCheck:
    """Compare int_Q u^2 with a^n/cap(F, 2Q) * int_Q |grad u|^2.

    F is the discrete zero set of u inside the cube Q.  The fitted constant
    lhs / rhs is the quantity that should stay bounded across inputs.
    """
    grid = u.grid
    cube = tuple(cube)
    if len(cube) != grid.ndim:
        raise ValueError("cube must have one slice per axis")
    double = _double_cube(cube, grid)

    q_mask = np.zeros(grid.shape, dtype=bool)
    q_mask[cube] = True
    sup_q = float(np.max(np.abs(u.values[q_mask])))
    if sup_q == 0.0:
        raise DegenerateRegionError("u vanishes identically on the cube")
    f_mask = q_mask & (np.abs(u.values) <= zero_tol * sup_q)
    if not f_mask.any():
        raise NoZeroSetError("u has no zero set inside the cube")

    outer = np.zeros(grid.shape, dtype=bool)
    outer[double] = True
    cap = capacity(f_mask, outer, grid)

    side = max((sl.stop - sl.start) for sl in cube) * grid.spacing
    lhs = float((u.values[q_mask] ** 2).sum()) * grid.cell_volume
    energy_q = float(gradient_energy_density(u.values, grid)[q_mask].sum())
    if energy_q == 0.0:
        raise DegenerateRegionError("u is constant on the cube")
    rhs_over_cap = side**grid.ndim * energy_q / cap
    return MazyaCheck(
        lhs=lhs,
        rhs_over_cap=rhs_over_cap,
        fitted_c5=lhs / rhs_over_cap,
        cap=cap,
        side=side,
    )


@dataclass(frozen=True)
class IsoCapacityCheck:
    cap: float
    volume: float
    ratio: float


def check_isocapacity(f_mask, outer_mask, grid: Grid) -> IsoCapacityCheck:
    """cap(F) / Vol(F)^(1/3): bounded below in 3D by the isocapacitary bound."""
    if grid.ndim != 3:
        raise UnsupportedDimensionError(
            f"isocapacity ratio is a 3D check, grid is {grid.ndim}D"
        )
    f_mask = np.asarray(f_mask, bool)
    if not f_mask.any():
        raise EmptyDomainError("F is empty")
    cap = capacity(f_mask, outer_mask, grid)
    vol = float(f_mask.sum()) * grid.cell_volume
    return IsoCapacityCheck(cap=cap, volume=vol, ratio=cap / vol ** (1.0 / 3.0))


@dataclass(frozen=True)
class AlphaRecord:
    center: tuple[float, ...]
    radius: float
    fraction: float


def alpha_scan(
    omega_mask: np.ndarray,
    grid: Grid,
    radii,
    max_centers: int = 512,
    seed: int = 0,
) -> list[AlphaRecord]:
    """Complement fractions of balls whose half ball meets the complement."""
    omega = np.asarray(omega_mask, bool)
    if omega.shape != tuple(grid.shape):
        raise ValueError("omega_mask must have the grid shape")
    if omega.all():
        raise UndefinedAlphaError("complement of omega is empty")
    dist = _tiled_edt(omega, grid)
    records = []
    for r in radii:
        r = float(r)
        ok = np.ones(grid.shape, dtype=bool)
        for d in range(grid.ndim):
            if grid.periodic[d]:
                if 2 * r > grid.period(d) * (1 + 1e-12):
                    ok[:] = False
            else:
                lo = grid.origin[d] + r - 1e-12
                hi = grid.origin[d] + grid.extent(d) - r + 1e-12
                sel = (grid.axes[d] >= lo) & (grid.axes[d] <= hi)
                sh = [1] * grid.ndim
                sh[d] = -1
                ok &= sel.reshape(sh)
        ok &= dist <= r / 2 + 1e-12
        flat = np.flatnonzero(ok.ravel())
        if flat.size == 0:
            continue
        if flat.size > max_centers:
            stride = int(math.ceil(flat.size / max_centers))
            flat = flat[seed % stride :: stride]
        comp = ~omega
        for f in flat:
            idx = np.unravel_index(int(f), grid.shape)
            center = tuple(
                float(grid.origin[d] + grid.spacing * idx[d])
                for d in range(grid.ndim)
            )
            win, dist2 = ball_window(grid, center, r)
            in_ball = dist2 <= r * r * (1 + 1e-12)
            n_ball = int(in_ball.sum())
            n_comp = int((in_ball & comp[np.ix_(*win)]).sum())
            records.append(AlphaRecord(center, r, n_comp / n_ball))
    if not records:
        raise UndefinedAlphaError("no admissible ball at any requested radius")
    return records


def asym_alpha(omega_mask, grid: Grid, radii, max_centers: int = 512,
               seed: int = 0) -> float:
    """Worst-case complement fraction: the discrete asymmetry constant."""
    records = alpha_scan(omega_mask, grid, radii, max_centers, seed)
    return min(rec.fraction for rec in records)


@dataclass(frozen=True)
class Thm61Check:
    lam1: float
    alpha: float
    inradius: float
    bound_shape: float
    slack: float


def verify_thm61(
    omega_mask,
    grid: Grid,
    lam1: float,
    radii=None,
    max_centers: int = 512,
    seed: int = 0,
) -> Thm61Check:
    """Slack of lam1 >= C * alpha^(1-2/n) / inradius^2 in n = 3."""
    if grid.ndim != 3:
        raise UnsupportedDimensionError("this bound is checked in 3D only")
    omega = np.asarray(omega_mask, bool)
    dist = _tiled_edt(omega, grid)
    inrad = float(dist.max())
    if inrad == 0.0:
        raise EmptyDomainError("omega has no interior node")
    if radii is None:
        radii = [2 * inrad, 3 * inrad, 4 * inrad]
    alpha = asym_alpha(omega, grid, radii, max_centers, seed)
    bound_shape = alpha ** (1.0 / 3.0) / inrad**2
    return Thm61Check(
        lam1=float(lam1),
        alpha=alpha,
        inradius=inrad,
        bound_shape=bound_shape,
        slack=float(lam1) / bound_shape,
    )


@dataclass(frozen=True)
class Remark2DCheck:
    lam1: float
    inradius: float
    rhs_shape: float
    fitted: float


def verify_2d_remark(omega_mask, grid: Grid, area_min: float) -> Remark2DCheck:
    """2D variant: lam1 against min(sqrt(A), inradius) / inradius^3.

    Every complement component must carry area at least area_min; that
    hypothesis is measured, not assumed.
    """
    if grid.ndim != 2:
        raise UnsupportedDimensionError("this bound is checked in 2D only")
    omega = np.asarray(omega_mask, bool)
    comp = ~omega
    if not comp.any():
        raise UndefinedAlphaError("complement of omega is empty")
    labels, count = label_components(comp, grid)
    areas = np.bincount(labels.ravel())[1:] * grid.cell_volume
    if areas.size and float(areas.min()) < area_min:
        raise PreconditionError(
            f"complement component area {areas.min():.4g} below A = {area_min:.4g}"
        )
    lam1 = dirichlet_ground_value(grid, omega)
    inrad = float(_tiled_edt(omega, grid).max())
    rhs_shape = min(math.sqrt(area_min), inrad) / inrad**3
    return Remark2DCheck(
        lam1=lam1, inradius=inrad, rhs_shape=rhs_shape, fitted=lam1 / rhs_shape
    )
