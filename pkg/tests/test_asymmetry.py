"""Local asymmetry machinery on the unit ball and on full domains.

Homogeneous fields make most of these exact: Re((x+iy)^d) doubles by
d log 2, a linear field splits every centered ball in half, and straight
nodal lines give min fractions of 1/2 up to lattice error of order
h/radius.
"""

import math

import numpy as np
import pytest

from nodelab import (
    DomainSpec,
    Grid,
    ScalarField,
    build_grid,
    check_prop42,
    clamp_growth,
    doubling_scan,
    elliptic_diagnostics,
    growth_exponent,
    sample_closed_form,
    scan_asymmetry,
    verify_positivity_bound,
    wavelength_ball_centers,
    wavelength_rescale,
)
from nodelab.asymmetry import sign_change_mask
from nodelab.domain import flat_coefficients
from nodelab.errors import (
    InvalidResolutionError,
    NoNodalSetError,
    OutOfDomainError,
    PreconditionError,
)

RECT = DomainSpec("rectangle", dims=(math.pi, math.pi))
TORUS = DomainSpec("torus", dims=(2 * math.pi, 2 * math.pi), boundary="periodic")


def unit_field(fn, n=256, ndim=2):
    """Sample fn on the unit ball, zero outside, like a rescaled field."""
    h = 2.0 / n
    axes = [np.linspace(-1.0, 1.0, n + 1)] * ndim
    mesh = np.meshgrid(*axes, indexing="ij")
    rr = np.sqrt(sum(m * m for m in mesh))
    grid = Grid(h, (n + 1,) * ndim, (-1.0,) * ndim, (False,) * ndim,
                rr <= 1.0 + 1e-12)
    return ScalarField(grid, fn(*mesh))


@pytest.mark.parametrize("d", [1, 2, 4])
def test_harmonic_polynomial_doubles_by_d_log2(d):
    f = unit_field(lambda x, y: np.real((x + 1j * y) ** d))
    ge = growth_exponent(f, 0.5)
    assert ge.beta == pytest.approx(d * math.log(2), abs=1e-2)
    assert ge.beta_plus == pytest.approx(d * math.log(2), abs=1e-2)


def test_constant_field_has_zero_growth():
    ge = growth_exponent(unit_field(lambda x, y: np.ones_like(x)), 0.5)
    assert ge.beta == 0.0
    assert ge.clamped == 3.0
    assert not ge.undefined_plus


def test_linear_field_growth_is_log_inverse_r():
    for r in (0.5, 0.25):
        ge = growth_exponent(unit_field(lambda x, y: x), r)
        assert ge.beta_plus == pytest.approx(math.log(1.0 / r), abs=1e-12)
        assert ge.beta >= 0.0


def test_nonpositive_field_flags_undefined_plus_growth():
    ge = growth_exponent(unit_field(lambda x, y: -np.ones_like(x)), 0.5)
    assert ge.undefined_plus
    assert ge.beta_plus is None
    assert ge.beta == 0.0  # two-sided growth still defined


def test_clamp_growth_floor():
    assert clamp_growth(2.0) == 3.0
    assert clamp_growth(5.0) == 5.0
    assert clamp_growth(3.0) == 3.0
    assert clamp_growth(clamp_growth(1.0)) == clamp_growth(1.0)


def test_positivity_bound_for_half_space():
    f = unit_field(lambda x, y: x)
    pb = verify_positivity_bound(f, 0.5)
    h = f.grid.spacing
    assert pb.lhs == pytest.approx(0.5, abs=3 * h)
    # beta_plus = log 2 clamps to 3, so the shape factor is 1/3
    assert pb.rhs_shape == pytest.approx(1.0 / 3.0)
    assert pb.ratio == pytest.approx(0.5 * 3.0, abs=0.05)


def test_positivity_bound_for_high_degree_sectors():
    f = unit_field(lambda x, y: np.real((x + 1j * y) ** 5))
    pb = verify_positivity_bound(f, 0.5)
    # five of ten sectors are positive; 5 log 2 > 3 so no clamping
    assert pb.lhs == pytest.approx(0.5, abs=0.02)
    assert pb.ratio == pytest.approx(0.5 * 5 * math.log(2), abs=0.05)


def test_positivity_bound_scale_invariant():
    f = unit_field(lambda x, y: np.real((x + 1j * y) ** 3))
    a = verify_positivity_bound(f, 0.5)
    b = verify_positivity_bound(ScalarField(f.grid, 40.0 * f.values), 0.5)
    assert b.ratio == pytest.approx(a.ratio, rel=1e-12)


def test_positivity_bound_needs_a_zero_at_the_center():
    f = unit_field(lambda x, y: 1.0 + x)
    with pytest.raises(PreconditionError):
        verify_positivity_bound(f, 0.5)


def test_positivity_bound_at_an_eigenfunction_crossing():
    g = build_grid(RECT, 256)
    lam, f = sample_closed_form(RECT, (2, 2), g)
    u, _ = wavelength_rescale(f, (math.pi / 2, math.pi / 2), lam)
    pb = verify_positivity_bound(u, 0.5)
    assert 0.4 <= pb.lhs <= 0.6


def test_prop42_trivial_fields():
    one = unit_field(lambda x, y: np.ones_like(x))
    chk = check_prop42(one, (0.0, 0.0), 0.5)
    assert (chk.gamma, chk.pos_frac, chk.product) == (1.0, 1.0, 1.0)

    affine = unit_field(lambda x, y: 1.0 + x)
    chk = check_prop42(affine, (0.0, 0.0), 0.5)
    assert chk.gamma == pytest.approx(1.5, abs=2 * affine.grid.spacing)
    assert chk.pos_frac == 1.0


def test_prop42_off_center_linear_field():
    f = unit_field(lambda x, y: x)
    chk = check_prop42(f, (0.5, 0.0), 0.4)
    assert chk.pos_frac == 1.0
    assert chk.gamma == pytest.approx(0.9 / 0.5, abs=3 * f.grid.spacing)
    with pytest.raises(PreconditionError):
        check_prop42(f, (-0.5, 0.0), 0.4)
    with pytest.raises(OutOfDomainError):
        check_prop42(f, (0.8, 0.0), 0.4)


def test_sign_change_mask_marks_the_nodal_strip():
    g = build_grid(RECT, 64)
    _, f = sample_closed_form(RECT, (2, 1), g)
    mask = sign_change_mask(f)
    xs = g.axes[0][:, None] * np.ones(g.shape)
    assert mask.any()
    assert np.abs(xs[mask] - math.pi / 2).max() <= 1.5 * g.spacing


def test_scan_on_straight_nodal_lines():
    g = build_grid(RECT, 128)
    lam, f = sample_closed_form(RECT, (2, 1), g)
    r = 1.5 / math.sqrt(lam)
    records, summary = scan_asymmetry(f, lam, [r], max_centers=256)
    assert summary.n_records == len(records)
    tol = 3 * g.spacing / r
    assert summary.min_frac == pytest.approx(0.5, abs=tol)
    for rec in records[:20]:
        assert rec.pos_frac + rec.neg_frac + rec.nodal_frac == pytest.approx(1.0)


def test_scan_summary_invariances():
    g = build_grid(RECT, 128)
    lam, f = sample_closed_form(RECT, (2, 1), g)
    r = 1.5 / math.sqrt(lam)
    _, base = scan_asymmetry(f, lam, [r], max_centers=256)
    _, scaled = scan_asymmetry(ScalarField(g, 7.0 * f.values), lam, [r],
                               max_centers=256)
    _, flipped = scan_asymmetry(ScalarField(g, -f.values), lam, [r],
                                max_centers=256)
    assert scaled.min_frac == base.min_frac
    assert flipped.min_frac == base.min_frac
    assert scaled.p05_frac == base.p05_frac


def test_scan_is_deterministic_per_seed():
    g = build_grid(RECT, 128)
    lam, f = sample_closed_form(RECT, (3, 2), g)
    r = 1.0 / math.sqrt(lam)
    a, _ = scan_asymmetry(f, lam, [r], max_centers=64, seed=3)
    b, _ = scan_asymmetry(f, lam, [r], max_centers=64, seed=3)
    assert [rec.center for rec in a] == [rec.center for rec in b]
    assert [rec.pos_frac for rec in a] == [rec.pos_frac for rec in b]


def test_scan_requires_a_nodal_set():
    g = build_grid(RECT, 64)
    with pytest.raises(NoNodalSetError):
        scan_asymmetry(ScalarField(g, np.ones(g.shape)), 1.0, [0.3])


def test_scan_on_disk_diameter():
    gd = build_grid(DomainSpec("disk", radius=1.0), 192)
    lam, fd = sample_closed_form(DomainSpec("disk", radius=1.0), (1, 1), gd)
    r = 1.0 / math.sqrt(lam)
    _, summary = scan_asymmetry(fd, lam, [r], max_centers=256)
    assert summary.min_frac == pytest.approx(0.5, abs=3 * gd.spacing / r)


def test_doubling_scan_on_torus_mode():
    g = build_grid(TORUS, 288)
    lam, f = sample_closed_form(TORUS, (4, 4), g)
    scan = doubling_scan(f, lam, max_centers=64)
    assert scan.max_beta <= 10.0 * math.sqrt(lam)
    assert scan.max_beta > 0
    # enlarging the center set can only push the max up
    subset = doubling_scan(f, lam, centers=scan.centers[:10])
    assert subset.max_beta <= scan.max_beta + 1e-12


def test_doubling_scan_rejects_under_resolved_wavelength():
    g = build_grid(TORUS, 64)
    lam, f = sample_closed_form(TORUS, (4, 4), g)
    with pytest.raises(InvalidResolutionError):
        doubling_scan(f, lam, max_centers=8)


def test_wavelength_ball_centers_sit_on_the_nodal_set():
    g = build_grid(RECT, 256)
    lam, f = sample_closed_form(RECT, (3, 2), g)
    centers = wavelength_ball_centers(f, lam, max_centers=32)
    assert 0 < len(centers) <= 32
    for c in centers:
        # every center is a node where the field changes sign nearby
        val = abs(math.sin(3 * c[0]) * math.sin(2 * c[1]))
        assert val < 3 * g.spacing * math.sqrt(lam)


def test_elliptic_diagnostics_on_a_linear_field():
    lin = unit_field(lambda x, y: x, n=128)
    diag = elliptic_diagnostics(lin, flat_coefficients(lin.grid, eps0=1e-9))
    assert diag.max_principle_ratio == pytest.approx(1.0, abs=1e-12)
    assert diag.mean_value_ratio == pytest.approx(0.5, abs=2 * lin.grid.spacing)
    assert not diag.flagged


def test_elliptic_diagnostics_reject_non_solutions():
    junk = unit_field(lambda x, y: np.sin(20 * x) * np.cos(17 * y), n=128)
    with pytest.raises(PreconditionError):
        elliptic_diagnostics(junk, flat_coefficients(junk.grid, eps0=1.0))


def test_rescaled_eigenfunction_respects_the_max_principle():
    g = build_grid(TORUS, 512)
    lam, f = sample_closed_form(TORUS, (4, 4), g)
    u, coeffs = wavelength_rescale(f, (math.pi / 4, math.pi / 4), lam, eps0=0.05)
    diag = elliptic_diagnostics(u, coeffs)
    assert diag.residual < 0.05
    assert diag.max_principle_ratio >= 0.9
    assert not diag.flagged
