"""Local asymmetry of sign domains and doubling-type growth exponents.

The quantities here live on wavelength balls.  For an eigenfunction with
eigenvalue lam, a ball of radius r = sqrt(eps0/lam) rescaled to the unit
ball carries a field whose growth exponent

    beta_r = log( sup_{|x|<=1} |phi| / sup_{|x|<=r} |phi| )

controls how much volume each sign can occupy: the positive-volume fraction
of the unit ball is bounded below by 1 / max(beta, 3)^(n-1) up to a fixed
constant, and near the nodal set both signs must hold a definite fraction
of every ball.  Everything is measured on cell centers with the discrete
suprema taken over grid nodes; no interpolation enters the exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import (
    CoefficientField,
    Grid,
    ScalarField,
    _ball_in_domain,
    iter_rescaled,
)
from .eigensolve import assemble_operator
from .errors import (
    DegenerateRegionError,
    InvalidResolutionError,
    NoNodalSetError,
    OutOfDomainError,
    PreconditionError,
    UnderResolvedBallError,
)
from .nodal import NodalDecomposition, ball_window, positivity_volume_in_ball


@dataclass(frozen=True)
class GrowthExponent:
    """Doubling exponents of a unit-ball field between radius r and 1.

    beta_plus uses the signed suprema and is None when the field has no
    positive part on the inner ball (undefined_plus is then set); beta uses
    absolute values and is always defined.  clamped = max(beta, 3).
    """

    r: float
    beta: float
    beta_plus: float | None
    clamped: float
    undefined_plus: bool


def _ball_masks(grid: Grid, radius: float):
    dist2 = 0.0
    for d in range(grid.ndim):
        sh = [1] * grid.ndim
        sh[d] = -1
        dist2 = dist2 + (grid.axes[d] ** 2).reshape(sh)
    return grid.inside & (dist2 <= radius * radius * (1 + 1e-12))


def growth_exponent(field: ScalarField, r: float) -> GrowthExponent:
    """Measure the doubling exponent of a unit-ball field at inner radius r."""
    if not 0 < r < 1:
        raise ValueError("inner radius must lie in (0, 1)")
    grid = field.grid
    outer = _ball_masks(grid, 1.0)
    inner = _ball_masks(grid, r)
    v = field.values
    sup1 = float(np.max(np.abs(v[outer]))) if outer.any() else 0.0
    if sup1 == 0.0:
        raise DegenerateRegionError("field vanishes on the unit ball")
    supr = float(np.max(np.abs(v[inner])))
    if supr == 0.0:
        raise DegenerateRegionError("field vanishes on the inner ball")
    beta = math.log(sup1 / supr)

    s1 = float(np.max(v[outer]))
    sr = float(np.max(v[inner]))
    if sr <= 0.0:
        beta_plus, undefined = None, True
    else:
        beta_plus, undefined = math.log(s1 / sr), False
    return GrowthExponent(
        r=r,
        beta=beta,
        beta_plus=beta_plus,
        clamped=max(beta, 3.0),
        undefined_plus=undefined,
    )


def clamp_growth(beta: float) -> float:
    """Growth exponents enter volume bounds floored at 3."""
    if not math.isfinite(beta):
        raise ValueError("growth exponent must be finite")
    return max(beta, 3.0)


@dataclass(frozen=True)
class PositivityBound:
    """Positive-volume fraction of the unit ball against its growth bound."""

    lhs: float
    rhs_shape: float
    ratio: float
    growth: GrowthExponent


def verify_positivity_bound(
    field: ScalarField, r: float = 0.5, zero_tol: float = 0.05
) -> PositivityBound:
    """Compare Vol({phi > 0} in B1)/Vol(B1) with 1/clamped^(n-1).

    Requires a near-zero center value: the bound is a statement about balls
    centered on the nodal set.
    """
    grid = field.grid
    center_idx = grid.nearest_index((0.0,) * grid.ndim)
    outer = _ball_masks(grid, 1.0)
    sup_abs = float(np.max(np.abs(field.values[outer])))
    if sup_abs == 0.0:
        raise DegenerateRegionError("field vanishes on the unit ball")
    if abs(float(field.values[center_idx])) > zero_tol * sup_abs:
        raise PreconditionError(
            "center value is not small; ball is not centered on the nodal set"
        )
    count = positivity_volume_in_ball(field, (0.0,) * grid.ndim, 1.0)
    g = growth_exponent(field, r)
    b = g.beta_plus if g.beta_plus is not None else g.beta
    clamped = clamp_growth(b)
    rhs = 1.0 / clamped ** (grid.ndim - 1)
    return PositivityBound(
        lhs=count.pos_frac, rhs_shape=rhs, ratio=count.pos_frac / rhs, growth=g
    )


@dataclass(frozen=True)
class Prop42Check:
    """At a positive point, bounded fields keep volume >= C/gamma."""

    gamma: float
    pos_frac: float
    product: float
    cells: int


def check_prop42(field: ScalarField, x0, r: float) -> Prop42Check:
    """gamma = sup_B phi / phi(x0); reports pos_frac * gamma (bounded below)."""
    grid = field.grid
    idx = grid.nearest_index(x0)
    if not grid.inside[idx]:
        raise OutOfDomainError(f"x0 {tuple(x0)} is not an inside node")
    v0 = float(field.values[idx])
    if v0 <= 0.0:
        raise PreconditionError("phi(x0) must be positive")
    count = positivity_volume_in_ball(field, x0, r)
    if count.clipped:
        raise OutOfDomainError("ball around x0 leaves the domain")
    win, dist2 = ball_window(grid, x0, r)
    sel = (dist2 <= r * r * (1 + 1e-12)) & grid.inside[np.ix_(*win)]
    sup = float(np.max(field.values[np.ix_(*win)][sel]))
    gamma = sup / v0
    return Prop42Check(
        gamma=gamma,
        pos_frac=count.pos_frac,
        product=count.pos_frac * gamma,
        cells=count.cells,
    )


def sign_change_mask(field: ScalarField, zero_tol: float = 1e-12) -> np.ndarray:
    """Nodes on or next to the discrete nodal set.

    Marks inside nodes with |v| <= zero_tol * max|v| plus both endpoints of
    any face whose values have strictly opposite signs.
    """
    grid = field.grid
    tol_abs = zero_tol * field.max_abs
    v = field.values
    sign = np.zeros(grid.shape, dtype=np.int8)
    sign[grid.inside & (v > tol_abs)] = 1
    sign[grid.inside & (v < -tol_abs)] = -1
    near = grid.inside & (sign == 0)
    for d in range(grid.ndim):
        if grid.periodic[d]:
            flip = sign * np.roll(sign, -1, axis=d) == -1
            near |= flip | np.roll(flip, 1, axis=d)
        else:
            prod = sign.take(range(0, grid.shape[d] - 1), axis=d) * sign.take(
                range(1, grid.shape[d]), axis=d
            )
            flip = prod == -1
            lo = [slice(None)] * grid.ndim
            hi = [slice(None)] * grid.ndim
            lo[d] = slice(0, grid.shape[d] - 1)
            hi[d] = slice(1, grid.shape[d])
            sub = near[tuple(lo)]
            sub |= flip
            near[tuple(lo)] = sub
            sub = near[tuple(hi)]
            sub |= flip
            near[tuple(hi)] = sub
    return near & grid.inside


def _stride_subsample(
    flat_indices: np.ndarray, max_count: int, offset: int = 0
) -> np.ndarray:
    if flat_indices.size <= max_count:
        return flat_indices
    stride = int(math.ceil(flat_indices.size / max_count))
    return flat_indices[offset % stride :: stride]


@dataclass(frozen=True)
class AsymmetryRecord:
    """Sign fractions of one ball centered on the nodal set."""

    center: tuple[float, ...]
    radius: float
    pos_frac: float
    neg_frac: float
    nodal_frac: float
    cells: int
    clipped: bool
    lam: float

    @property
    def min_frac(self) -> float:
        return min(self.pos_frac, self.neg_frac)


@dataclass(frozen=True)
class ScanSummary:
    lam: float
    n_centers: int
    n_records: int
    min_frac: float
    p05_frac: float


def scan_asymmetry(
    field: ScalarField,
    lam: float,
    radii,
    max_centers: int = 512,
    zero_tol: float = 1e-12,
    seed: int = 0,
):
    """Measure min(pos, neg) fractions on balls centered along the nodal set.

    Centers are the sign-change nodes, subsampled by a fixed stride in node
    order so reruns see the same set.  Returns (records, summary).
    """
    grid = field.grid
    radii = [float(r) for r in radii]
    if not radii:
        raise ValueError("need at least one radius")
    for r in radii:
        if r < 4 * grid.spacing:
            raise UnderResolvedBallError(
                f"scan radius {r:.4g} below 4h = {4 * grid.spacing:.4g}"
            )
    near = sign_change_mask(field, zero_tol)
    flat = np.flatnonzero(near.ravel())
    if flat.size == 0:
        raise NoNodalSetError("field has no discrete nodal set")
    chosen = _stride_subsample(flat, max_centers, seed)

    records = []
    for f in chosen:
        idx = np.unravel_index(int(f), grid.shape)
        center = tuple(
            float(grid.origin[d] + grid.spacing * idx[d]) for d in range(grid.ndim)
        )
        for r in radii:
            c = positivity_volume_in_ball(field, center, r, zero_tol)
            records.append(
                AsymmetryRecord(
                    center=center,
                    radius=r,
                    pos_frac=c.pos_frac,
                    neg_frac=c.neg_frac,
                    nodal_frac=c.nodal_frac,
                    cells=c.cells,
                    clipped=c.clipped,
                    lam=lam,
                )
            )
    mins = np.array([rec.min_frac for rec in records])
    summary = ScanSummary(
        lam=lam,
        n_centers=int(chosen.size),
        n_records=len(records),
        min_frac=float(mins.min()),
        p05_frac=float(np.percentile(mins, 5.0)),
    )
    return records, summary


def wavelength_ball_centers(
    field: ScalarField,
    lam: float,
    eps0: float = 1.0,
    max_centers: int = 512,
    zero_tol: float = 1e-12,
    seed: int = 0,
    margin_cells: int = 6,
) -> list[tuple[float, ...]]:
    """Nodal-set nodes that admit a full wavelength ball, subsampled.

    Exact zeros are preferred as centers (rescaled fields then vanish at
    the origin to interpolation accuracy); sign-change neighbours fill in
    when there are too few.  The ball must clear the domain boundary by
    `margin_cells` grid cells: the spline resampler's implicit extension
    pollutes second derivatives within a few cells of the edge, and a
    tangent ball would hand that artifact to every downstream residual.
    """
    grid = field.grid
    r = math.sqrt(eps0 / lam)
    r_eff = r + margin_cells * grid.spacing
    tol_abs = zero_tol * field.max_abs
    exact = grid.inside & (np.abs(field.values) <= tol_abs)
    near = sign_change_mask(field, zero_tol)
    candidates = exact if exact.sum() >= max(8, max_centers // 8) else near
    feasible, is_exact = _feasible_centers(grid, r_eff)
    flat = np.flatnonzero((candidates & feasible).ravel())
    if flat.size == 0:
        raise NoNodalSetError(
            "no nodal node admits a full wavelength ball inside the domain"
        )
    chosen = _stride_subsample(flat, max_centers, seed)

    kept = []
    for f in chosen:
        idx = np.unravel_index(int(f), grid.shape)
        center = tuple(
            float(grid.origin[d] + grid.spacing * idx[d]) for d in range(grid.ndim)
        )
        if not is_exact:
            try:
                _ball_in_domain(grid, center, r_eff)
            except OutOfDomainError:
                continue
        kept.append(center)
    if not kept:
        raise NoNodalSetError(
            "no nodal node admits a full wavelength ball inside the domain"
        )
    return kept


def _feasible_centers(grid: Grid, r: float):
    """(mask of centers whose r-ball stays in the domain, mask-is-exact flag).

    For box, torus, disk, and stadium geometry the test is exact; for
    hand-built masks it is only the box test and callers recheck per node.
    """
    spec = grid.spec
    mask = np.ones(grid.shape, dtype=bool)
    for d in range(grid.ndim):
        if grid.periodic[d]:
            if 2 * r > grid.period(d) * (1 + 1e-12):
                mask[:] = False
        else:
            lo = grid.origin[d] + r - 1e-12
            hi = grid.origin[d] + grid.extent(d) - r + 1e-12
            ok = (grid.axes[d] >= lo) & (grid.axes[d] <= hi)
            sh = [1] * grid.ndim
            sh[d] = -1
            mask &= ok.reshape(sh)
    if spec is None or spec.kind == "masked":
        return mask, False
    if spec.kind == "disk":
        xx, yy = np.meshgrid(*grid.axes, indexing="ij")
        mask &= np.hypot(xx, yy) + r <= spec.radius * (1 + 1e-12)
    elif spec.kind == "stadium":
        xx, yy = np.meshgrid(*grid.axes, indexing="ij")
        gap = np.maximum(np.abs(xx) - spec.dims[0] / 2, 0.0)
        mask &= np.hypot(gap, yy) + r <= spec.radius * (1 + 1e-12)
    return mask, True


@dataclass(frozen=True)
class DoublingScan:
    """Growth exponents over wavelength balls along the nodal set."""

    lam: float
    eps0: float
    r: float
    centers: tuple[tuple[float, ...], ...]
    growths: tuple[GrowthExponent, ...]

    @property
    def betas(self) -> np.ndarray:
        return np.array([g.beta for g in self.growths])

    @property
    def max_beta(self) -> float:
        return float(self.betas.max())

    def quantile(self, q: float) -> float:
        return float(np.percentile(self.betas, 100 * q))


def doubling_scan(
    field: ScalarField,
    lam: float,
    eps0: float = 1.0,
    max_centers: int = 512,
    r: float = 0.5,
    oversample: float = 2.0,
    centers=None,
    zero_tol: float = 1e-12,
    seed: int = 0,
) -> DoublingScan:
    """Absolute growth exponents beta_r on wavelength balls at nodal centers."""
    grid = field.grid
    ball = math.sqrt(eps0 / lam)
    if ball < 8 * grid.spacing:
        raise InvalidResolutionError(
            f"wavelength ball radius {ball:.4g} below 8h = {8 * grid.spacing:.4g}"
        )
    if centers is None:
        centers = wavelength_ball_centers(field, lam, eps0, max_centers,
                                          zero_tol, seed)
    growths = []
    for _, unit in iter_rescaled(field, centers, lam, eps0, oversample):
        growths.append(growth_exponent(unit, r))
    return DoublingScan(
        lam=lam,
        eps0=eps0,
        r=r,
        centers=tuple(tuple(c) for c in centers),
        growths=tuple(growths),
    )


@dataclass(frozen=True)
class EllipticDiagnostics:
    """Qualitative elliptic behaviour of a rescaled unit-ball field."""

    residual: float
    max_principle_ratio: float
    mean_value_ratio: float | None
    flagged: bool


def elliptic_diagnostics(
    field: ScalarField,
    coeffs: CoefficientField,
    r1: float = 0.25,
    r2: float = 0.5,
    zero_tol: float = 0.05,
    residual_tol: float = 0.05,
) -> EllipticDiagnostics:
    """Check a unit-ball field behaves like a solution of its equation.

    First verifies the discrete residual of -div(a grad u) = eps0 q u on
    core nodes (a precondition: garbage in, error out).  Then measures
      * max_principle_ratio: worst sup_shell(u+) / sup_ball(u) over a fixed
        family of interior balls (near 1 for true solutions when eps0 is
        small; flagged when < 0.9 and eps0 <= 0.1),
      * mean_value_ratio: sup_{B_r1} u^- / sup_{B_r2} u^+ for fields
        vanishing at the center (the two-sided comparison constant).
    """
    grid = field.grid
    n = grid.ndim
    h = grid.spacing
    eps0 = coeffs.eps0
    v = field.values

    ball_mask = _ball_masks(grid, 1.0)
    core = _ball_masks(grid, 1.0 - 3 * h)
    op = assemble_operator(grid, coeffs, submask=ball_mask)
    vec = v[op.unknown]
    resid_full = op.matrix @ vec - eps0 * (coeffs.q[op.unknown] * vec)
    core_rows = op.index[core & op.unknown]
    core_rows = core_rows[core_rows >= 0]
    if core_rows.size == 0:
        raise DegenerateRegionError("no core nodes to evaluate the residual on")
    num = float(np.linalg.norm(resid_full[core_rows]))
    den = float(np.linalg.norm(vec[core_rows]))
    if den == 0.0:
        raise DegenerateRegionError("field vanishes on the core")
    scale = max(1.0, eps0 * float(coeffs.q.max()))
    residual = num / (den * scale)
    if residual > residual_tol:
        raise PreconditionError(
            f"discrete residual {residual:.3g} above {residual_tol:.3g}: "
            "field does not satisfy the rescaled equation"
        )

    rho = 0.5
    centers = [(0.0,) * n]
    for d in range(n):
        for s in (+1.0, -1.0):
            c = [0.0] * n
            c[d] = 0.3 * s
            centers.append(tuple(c))
    worst = math.inf
    for c in centers:
        win, dist2 = ball_window(grid, c, rho)
        sub = v[np.ix_(*win)]
        inside = grid.inside[np.ix_(*win)]
        in_ball = (dist2 <= rho * rho * (1 + 1e-12)) & inside
        shell = in_ball & (dist2 >= (rho - 1.5 * h) ** 2)
        if not in_ball.any() or not shell.any():
            continue
        top = float(np.max(sub[in_ball]))
        if top <= 0.0:
            continue
        shell_top = max(float(np.max(sub[shell])), 0.0)
        worst = min(worst, shell_top / top)
    flagged = bool(eps0 <= 0.1 and worst < 0.9)

    mean_ratio = None
    center_idx = grid.nearest_index((0.0,) * n)
    sup_abs = float(np.max(np.abs(v[ball_mask])))
    if abs(float(v[center_idx])) <= zero_tol * sup_abs:
        inner = _ball_masks(grid, r1)
        mid = _ball_masks(grid, r2)
        neg_top = float(np.max(-v[inner]))
        pos_top = float(np.max(v[mid]))
        if pos_top > 0:
            mean_ratio = max(neg_top, 0.0) / pos_top
    return EllipticDiagnostics(
        residual=residual,
        max_principle_ratio=worst,
        mean_value_ratio=mean_ratio,
        flagged=flagged,
    )


def component_ball_ratio(
    decomp: NodalDecomposition, component_id: int, center, radius: float
) -> float:
    """Fraction of a ball's domain cells lying in one nodal component.

    The component must reach into the half ball, mirroring how the local
    volume bounds are stated.
    """
    comp = decomp.component(component_id)
    grid = decomp.grid
    win, dist2 = ball_window(grid, center, radius)
    labels = decomp.labels[np.ix_(*win)]
    inside = grid.inside[np.ix_(*win)]
    in_ball = (dist2 <= radius * radius * (1 + 1e-12)) & inside
    cells = int(in_ball.sum())
    if cells == 0:
        raise OutOfDomainError("ball contains no domain cells")
    half = (dist2 <= (radius / 2) ** 2 * (1 + 1e-12)) & (labels == comp.id)
    if not half.any():
        raise PreconditionError(
            f"component {component_id} does not meet the half ball"
        )
    return int(((labels == comp.id) & in_ball).sum()) / cells
