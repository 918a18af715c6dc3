"""Domains, grids, scalar fields, and variable coefficients.

Everything downstream works on uniform Cartesian grids.  Curved domains
(disk, stadium) are realised by masking nodes of a bounding box rather than
by boundary-fitted meshes; periodic domains (torus) store one node per cell
with no duplicated seam, so index arithmetic mod shape is exact.

The wavelength rescaling maps a ball of radius r = sqrt(eps0 / lambda)
around a chosen point onto the unit ball.  An eigenfunction restricted to
such a ball solves, in the rescaled variable, a divergence-form equation

    -d_i(a^{ij} d_j u) = eps0 * q * u

whose coefficients are uniformly elliptic and C^1-bounded independently of
lambda.  On a flat background the rescaled coefficients are simply
a^{ij} = delta_{ij}, q = 1, which is what `wavelength_rescale` returns
unless explicit coefficients are passed in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np
from scipy import ndimage

from .bessel import bessel_j, bessel_zeros
from .errors import (
    InvalidResolutionError,
    IllPosedOperatorError,
    OutOfDomainError,
    UnsupportedModeError,
)

KINDS = ("rectangle", "torus", "disk", "stadium", "masked")


@dataclass(frozen=True)
class DomainSpec:
    """What domain to build.

    kind      one of rectangle, torus, disk, stadium, masked
    dims      side lengths: all axes for rectangle/torus/masked bounding box,
              the straight-segment length for a stadium
    radius    disk radius, or stadium cap radius
    boundary  "dirichlet" or "periodic" (torus forces periodic)
    """

    kind: str
    dims: tuple[float, ...] = ()
    radius: float = 0.0
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        object.__setattr__(self, "dims", tuple(float(d) for d in self.dims))
        if self.kind in ("rectangle", "torus", "masked"):
            if not self.dims or any(d <= 0 for d in self.dims):
                raise ValueError(f"{self.kind} needs positive side lengths")
        if self.kind in ("disk", "stadium") and self.radius <= 0:
            raise ValueError(f"{self.kind} needs a positive radius")
        if self.kind == "stadium" and len(self.dims) != 1:
            raise ValueError("stadium takes dims=(straight_length,)")
        if self.kind == "disk" and self.dims:
            raise ValueError("disk takes no dims, only radius")
        want = "periodic" if self.kind == "torus" else "dirichlet"
        if self.boundary != want:
            raise ValueError(f"{self.kind} domain requires {want} boundary")

    @property
    def box(self) -> tuple[float, ...]:
        """Bounding box side lengths."""
        if self.kind in ("rectangle", "torus", "masked"):
            return self.dims
        if self.kind == "disk":
            return (2 * self.radius, 2 * self.radius)
        return (self.dims[0] + 2 * self.radius, 2 * self.radius)

    @property
    def box_origin(self) -> tuple[float, ...]:
        if self.kind in ("rectangle", "torus", "masked"):
            return (0.0,) * len(self.dims)
        if self.kind == "disk":
            return (-self.radius, -self.radius)
        return (-(self.dims[0] / 2 + self.radius), -self.radius)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform Cartesian grid over a box, with an inside-the-domain mask.

    spacing   one spacing h for all axes
    shape     node counts per axis; periodic axes hold one node per cell
    origin    coordinate of node index 0 per axis
    periodic  per-axis wrap flags
    inside    bool array over nodes, True strictly inside the domain
    """

    spacing: float
    shape: tuple[int, ...]
    origin: tuple[float, ...]
    periodic: tuple[bool, ...]
    inside: np.ndarray
    spec: DomainSpec | None = None

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if any(n < 3 for n in self.shape):
            raise InvalidResolutionError(
                f"every axis needs at least 3 nodes, got shape {self.shape}"
            )
        inside = np.asarray(self.inside, dtype=bool)
        if inside.shape != tuple(self.shape):
            raise ValueError("inside mask shape does not match grid shape")
        inside = inside.copy()
        inside.flags.writeable = False
        object.__setattr__(self, "inside", inside)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.ndim

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(
            self.origin[d] + self.spacing * np.arange(self.shape[d])
            for d in range(self.ndim)
        )

    def period(self, axis: int) -> float:
        """Physical period of a periodic axis (shape * h)."""
        return self.shape[axis] * self.spacing

    def extent(self, axis: int) -> float:
        """Coordinate span covered by nodes on this axis."""
        if self.periodic[axis]:
            return self.period(axis)
        return (self.shape[axis] - 1) * self.spacing

    def axis_delta(self, axis: int, x: np.ndarray, center: float) -> np.ndarray:
        """Signed coordinate offsets x - center, wrapped on periodic axes."""
        d = np.asarray(x, dtype=float) - center
        if self.periodic[axis]:
            L = self.period(axis)
            d = (d + L / 2) % L - L / 2
        return d

    def with_inside(self, mask: np.ndarray) -> "Grid":
        return Grid(self.spacing, self.shape, self.origin, self.periodic,
                    mask, self.spec)

    def nearest_index(self, point) -> tuple[int, ...]:
        idx = []
        for d, c in enumerate(point):
            i = int(round((c - self.origin[d]) / self.spacing))
            if self.periodic[d]:
                i %= self.shape[d]
            elif not (0 <= i < self.shape[d]):
                raise OutOfDomainError(f"point {tuple(point)} outside grid box")
            idx.append(i)
        return tuple(idx)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Float64 values on the nodes of a grid, zero outside the inside mask."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != tuple(self.grid.shape):
            raise ValueError("values shape does not match grid shape")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v = np.where(self.grid.inside, v, 0.0)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @cached_property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def _c1_seminorm(arr: np.ndarray, grid: Grid) -> float:
    """Max over axes of the sup of one-sided difference quotients."""
    worst = 0.0
    for d in range(grid.ndim):
        if grid.periodic[d]:
            diff = np.roll(arr, -1, axis=d) - arr
        else:
            diff = np.diff(arr, axis=d)
        if diff.size:
            worst = max(worst, float(np.max(np.abs(diff))) / grid.spacing)
    return worst


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Symmetric matrix field a^{ij}, potential weight q, and scale eps0.

    Bounds are part of the data and are verified at construction:
      * C^1 bound: sup |a^{ij}| + sup |grad a^{ij}| <= k3 (differences)
      * 0 <= q <= k4
      * ellipticity xi . a xi >= k5 |xi|^2, spot-checked on random directions
    """

    grid: Grid
    aij: np.ndarray
    q: np.ndarray
    eps0: float
    k3: float = 4.0
    k4: float = 2.0
    k5: float = 0.5
    validate: bool = True

    def __post_init__(self):
        n = self.grid.ndim
        a = np.asarray(self.aij, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if a.shape != tuple(self.grid.shape) + (n, n):
            raise ValueError("aij must have shape grid.shape + (n, n)")
        if q.shape != tuple(self.grid.shape):
            raise ValueError("q must have the grid shape")
        if self.eps0 <= 0:
            raise ValueError("eps0 must be positive")
        a = a.copy()
        q = q.copy()
        a.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "aij", a)
        object.__setattr__(self, "q", q)
        if self.validate:
            self.check_bounds()

    def check_bounds(self):
        slack = 1 + 1e-9
        a, q, n = self.aij, self.q, self.grid.ndim
        if float(np.max(np.abs(a - np.swapaxes(a, -1, -2)))) > 1e-12 * max(
            1.0, float(np.max(np.abs(a)))
        ):
            raise IllPosedOperatorError("aij is not symmetric")
        c1 = float(np.max(np.abs(a)))
        c1 += max(
            _c1_seminorm(a[..., i, j], self.grid)
            for i in range(n)
            for j in range(n)
        )
        if c1 > self.k3 * slack:
            raise IllPosedOperatorError(
                f"C1 bound violated: {c1:.6g} > k3 = {self.k3:.6g}"
            )
        if float(q.min()) < -1e-12 or float(q.max()) > self.k4 * slack:
            raise IllPosedOperatorError(
                f"q out of [0, k4]: range [{q.min():.6g}, {q.max():.6g}]"
            )
        rng = np.random.default_rng(12345)
        for _ in range(16):
            xi = rng.standard_normal(n)
            xi /= np.linalg.norm(xi)
            quad = np.einsum("...ij,i,j->...", a, xi, xi)
            if float(quad.min()) < self.k5 / slack:
                raise IllPosedOperatorError(
                    f"ellipticity violated: min quadratic form "
                    f"{quad.min():.6g} < k5 = {self.k5:.6g}"
                )


def flat_coefficients(grid: Grid, eps0: float = 1.0) -> CoefficientField:
    """Identity a^{ij}, q = 1: the flat-background coefficient field."""
    n = grid.ndim
    aij = np.zeros(tuple(grid.shape) + (n, n))
    for d in range(n):
        aij[..., d, d] = 1.0
    return CoefficientField(grid, aij, np.ones(grid.shape), eps0,
                            k3=2.0, k4=1.0, k5=1.0)


def build_grid(spec: DomainSpec, n_cells: int, mask: np.ndarray | None = None) -> Grid:
    """Discretise a domain with n_cells cells across its longest box side."""
    if n_cells < 3:
        raise InvalidResolutionError(
            f"need at least 3 cells across the domain, got {n_cells}"
        )
    box = spec.box
    origin = spec.box_origin
    h = max(box) / n_cells

    if spec.kind == "torus":
        shape = tuple(int(round(L / h)) for L in box)
        if any(n < 3 for n in shape):
            raise InvalidResolutionError(
                f"torus axis resolved by fewer than 3 cells at n_cells={n_cells}"
            )
        inside = np.ones(shape, dtype=bool)
        return Grid(h, shape, origin, (True,) * len(shape), inside, spec)

    shape = tuple(int(round(L / h)) + 1 for L in box)
    periodic = (False,) * len(shape)
    axes = [origin[d] + h * np.arange(shape[d]) for d in range(len(shape))]

    if spec.kind in ("rectangle", "masked"):
        inside = np.ones(shape, dtype=bool)
        for d in range(len(shape)):
            sl = [slice(None)] * len(shape)
            for edge in (0, -1):
                sl[d] = edge
                inside[tuple(sl)] = False
        if spec.kind == "masked":
            if mask is None:
                raise ValueError("masked domain requires an explicit mask")
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != shape:
                raise ValueError(
                    f"mask shape {mask.shape} does not match grid shape {shape}"
                )
            inside &= mask
    elif spec.kind == "disk":
        X, Y = np.meshgrid(*axes, indexing="ij")
        inside = X * X + Y * Y < spec.radius**2 * (1 - 1e-12)
    else:  # stadium
        X, Y = np.meshgrid(*axes, indexing="ij")
        half = spec.dims[0] / 2
        gap = np.maximum(np.abs(X) - half, 0.0)
        inside = gap * gap + Y * Y < spec.radius**2 * (1 - 1e-12)

    return Grid(h, shape, origin, periodic, inside, spec)


def sample_closed_form(spec: DomainSpec, mode: tuple[int, ...], grid: Grid):
    """Sample an exact eigenfunction; returns (eigenvalue, field).

    Rectangle modes are products of sines with indices >= 1; torus modes use
    sin for a positive index, cos for a negative one, constant for zero;
    disk modes are (angular order k, radial zero index j >= 1), with k < 0
    selecting the sine angular factor.
    """
    mode = tuple(int(m) for m in mode)
    if spec.kind == "rectangle":
        if len(mode) != len(spec.dims) or any(m < 1 for m in mode):
            raise UnsupportedModeError(
                f"rectangle mode must be positive ints per axis, got {mode}"
            )
        lam = sum((m * math.pi / L) ** 2 for m, L in zip(mode, spec.dims))
        vals = np.ones(grid.shape)
        for d, (m, L) in enumerate(zip(mode, spec.dims)):
            ax = np.sin(m * math.pi * grid.axes[d] / L)
            vals = vals * ax.reshape([-1 if i == d else 1 for i in range(grid.ndim)])
        return lam, ScalarField(grid, vals)

    if spec.kind == "torus":
        if len(mode) != len(spec.dims):
            raise UnsupportedModeError(
                f"torus mode needs one integer per axis, got {mode}"
            )
        lam = sum((2 * math.pi * m / L) ** 2 for m, L in zip(mode, spec.dims))
        vals = np.ones(grid.shape)
        for d, (m, L) in enumerate(zip(mode, spec.dims)):
            t = 2 * math.pi * abs(m) * grid.axes[d] / L
            ax = np.sin(t) if m > 0 else (np.cos(t) if m < 0 else np.ones_like(t))
            vals = vals * ax.reshape([-1 if i == d else 1 for i in range(grid.ndim)])
        return lam, ScalarField(grid, vals)

    if spec.kind == "disk":
        if len(mode) != 2 or mode[1] < 1:
            raise UnsupportedModeError(
                f"disk mode is (angular_order, zero_index >= 1), got {mode}"
            )
        k, j = mode
        root = float(bessel_zeros(abs(k), j)[-1])
        X, Y = np.meshgrid(*grid.axes, indexing="ij")
        rho = np.hypot(X, Y) / spec.radius
        theta = np.arctan2(Y, X)
        ang = np.cos(k * theta) if k >= 0 else np.sin(-k * theta)
        vals = bessel_j(abs(k), root * rho) * ang
        return (root / spec.radius) ** 2, ScalarField(grid, vals)

    raise UnsupportedModeError(f"no closed-form modes for kind {spec.kind!r}")


def _ball_in_domain(grid: Grid, center, r: float):
    """Raise OutOfDomainError unless B(center, r) lies in the closed domain."""
    spec = grid.spec
    for d in range(grid.ndim):
        if grid.periodic[d]:
            if 2 * r > grid.period(d) * (1 + 1e-12):
                raise OutOfDomainError(
                    f"ball diameter {2 * r:.6g} exceeds period on axis {d}"
                )
        else:
            lo = grid.origin[d]
            hi = lo + grid.extent(d)
            if center[d] - r < lo - 1e-12 or center[d] + r > hi + 1e-12:
                raise OutOfDomainError(
                    f"ball of radius {r:.6g} at {tuple(center)} leaves the box"
                )
    if spec is not None and spec.kind == "disk":
        if math.hypot(*center) + r > spec.radius * (1 + 1e-12):
            raise OutOfDomainError("ball pokes out of the disk")
    elif spec is not None and spec.kind == "stadium":
        half = spec.dims[0] / 2
        gap = max(abs(center[0]) - half, 0.0)
        if math.hypot(gap, center[1]) + r > spec.radius * (1 + 1e-12):
            raise OutOfDomainError("ball pokes out of the stadium")
    elif spec is None or spec.kind == "masked":
        # No closed geometry to test against: every node the ball covers
        # must be an inside node.
        offs = [np.arange(-int(r / grid.spacing) - 1, int(r / grid.spacing) + 2)]
        offs = offs * grid.ndim
        idx = []
        dist2 = 0.0
        for d in range(grid.ndim):
            i0 = int(round((center[d] - grid.origin[d]) / grid.spacing))
            ii = i0 + offs[d]
            x = grid.origin[d] + ii * grid.spacing
            dd = (x - center[d]) ** 2
            if grid.periodic[d]:
                ii %= grid.shape[d]
            else:
                keep = (ii >= 0) & (ii < grid.shape[d])
                ii, dd = ii[keep], dd[keep]
            sh = [1] * grid.ndim
            sh[d] = -1
            idx.append(ii)
            dist2 = dist2 + dd.reshape(sh)
        sub = grid.inside[np.ix_(*idx)]
        if not bool(np.all(sub[dist2 <= r * r * (1 - 1e-12)])):
            raise OutOfDomainError("ball covers nodes outside the domain mask")


class _Resampler:
    """Spline resampler onto wavelength balls, filtering the source once.

    Quintic order keeps the interpolant's second derivatives accurate to
    O(h^4), so discrete residual checks on the resampled field measure the
    field and not the interpolation.
    """

    def __init__(self, field: ScalarField):
        self.grid = field.grid
        self.all_periodic = all(field.grid.periodic)
        mode = "grid-wrap" if self.all_periodic else "constant"
        self.mode = mode
        self.coef = ndimage.spline_filter(field.values, order=5, mode=mode)

    def __call__(self, center, r: float, oversample: float):
        grid = self.grid
        h_unit = grid.spacing / (r * oversample)
        n_cells = int(math.ceil(2 / h_unit))
        n_cells += n_cells % 2
        n_cells = max(n_cells, 8)
        hu = 2.0 / n_cells
        shape = (n_cells + 1,) * grid.ndim
        u_ax = -1.0 + hu * np.arange(n_cells + 1)
        mesh = np.meshgrid(*([u_ax] * grid.ndim), indexing="ij")
        coords = [
            (center[d] + r * mesh[d] - grid.origin[d]) / grid.spacing
            for d in range(grid.ndim)
        ]
        vals = ndimage.map_coordinates(
            self.coef, coords, order=5, mode=self.mode, prefilter=False
        )
        rr = sum(m * m for m in mesh)
        inside = rr <= 1.0 + 1e-12
        unit_grid = Grid(hu, shape, (-1.0,) * grid.ndim,
                         (False,) * grid.ndim, inside)
        return ScalarField(unit_grid, np.where(inside, vals, 0.0))


def wavelength_rescale(
    field: ScalarField,
    center,
    lam: float,
    eps0: float = 1.0,
    coeffs: CoefficientField | None = None,
    oversample: float = 2.0,
):
    """Resample a ball of radius sqrt(eps0/lam) onto the unit-ball grid.

    Returns (unit_field, unit_coeffs).  The unit grid always carries a node
    at the origin and resolves the source spacing `oversample` times over.
    Interpolation is by C^2 cubic splines, so difference quotients of the
    resampled field converge to the source derivatives and discrete
    residual checks on the unit grid stay meaningful.
    """
    if lam <= 0 or eps0 <= 0:
        raise ValueError("lam and eps0 must be positive")
    r = math.sqrt(eps0 / lam)
    _ball_in_domain(field.grid, center, r)
    unit_field = _Resampler(field)(center, r, oversample)
    ugrid = unit_field.grid
    if coeffs is None:
        unit_coeffs = flat_coefficients(ugrid, eps0)
    else:
        n = ugrid.ndim
        res = _Resampler(ScalarField(field.grid.with_inside(
            np.ones(field.grid.shape, bool)), coeffs.q))
        q_u = res(center, r, oversample).values
        aij_u = np.zeros(tuple(ugrid.shape) + (n, n))
        for i in range(n):
            for j in range(n):
                comp = ScalarField(
                    field.grid.with_inside(np.ones(field.grid.shape, bool)),
                    coeffs.aij[..., i, j],
                )
                aij_u[..., i, j] = _Resampler(comp)(center, r, oversample).values
        unit_coeffs = CoefficientField(
            ugrid, aij_u, np.clip(q_u, 0.0, coeffs.k4), eps0,
            k3=coeffs.k3, k4=coeffs.k4, k5=coeffs.k5,
        )
    return unit_field, unit_coeffs


def iter_rescaled(field: ScalarField, centers, lam: float, eps0: float = 1.0,
                  oversample: float = 2.0):
    """Yield (center, unit_field) over many centers, filtering the source once."""
    if lam <= 0 or eps0 <= 0:
        raise ValueError("lam and eps0 must be positive")
    r = math.sqrt(eps0 / lam)
    resampler = _Resampler(field)
    for c in centers:
        _ball_in_domain(field.grid, c, r)
        yield c, resampler(c, r, oversample)
