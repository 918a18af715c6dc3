"""Grids, closed-form samples, and the wavelength-ball rescale.

The rescale test is the load-bearing one: a smooth eigenfunction pulled
back to the unit ball must agree pointwise with the analytic pullback
phi(c + r y), including across the periodic seam of a torus.
"""

import math

import numpy as np
import pytest

from nodelab import DomainSpec, build_grid, sample_closed_form, wavelength_rescale
from nodelab.domain import flat_coefficients, iter_rescaled
from nodelab.errors import OutOfDomainError, UnsupportedModeError


def rect(n=64, dims=(math.pi, math.pi)):
    return build_grid(DomainSpec("rectangle", dims=dims), n)


def test_rectangle_grid_layout():
    g = rect(32)
    assert g.shape == (33, 33)
    assert g.spacing == pytest.approx(math.pi / 32)
    assert g.origin == (0.0, 0.0)
    assert g.periodic == (False, False)
    # interior nodes only: the boundary ring is outside
    assert g.inside.sum() == 31 * 31
    assert not g.inside[0].any() and not g.inside[-1].any()


def test_torus_grid_has_no_duplicate_seam():
    spec = DomainSpec("torus", dims=(2 * math.pi, 2 * math.pi), boundary="periodic")
    g = build_grid(spec, 32)
    assert g.shape == (32, 32)
    assert g.periodic == (True, True)
    assert g.inside.all()
    assert g.period(0) == pytest.approx(2 * math.pi)


def test_disk_grid_mask_is_geometric():
    g = build_grid(DomainSpec("disk", radius=1.0), 40)
    xs = g.axes[0][:, None]
    ys = g.axes[1][None, :]
    expect = xs * xs + ys * ys < (1.0 - 1e-12)
    assert (g.inside == expect).all()


def test_rectangle_closed_form_mode():
    g = rect(48)
    lam, f = sample_closed_form(DomainSpec("rectangle", dims=(math.pi, math.pi)),
                                (3, 2), g)
    assert lam == pytest.approx(13.0)
    xs = g.axes[0][:, None]
    ys = g.axes[1][None, :]
    expect = np.where(g.inside, np.sin(3 * xs) * np.sin(2 * ys), 0.0)
    assert np.abs(f.values - expect).max() < 1e-12


def test_disk_ground_mode_eigenvalue_is_squared_bessel_zero():
    g = build_grid(DomainSpec("disk", radius=1.0), 64)
    lam, f = sample_closed_form(DomainSpec("disk", radius=1.0), (0, 1), g)
    assert lam == pytest.approx(2.404825557695773 ** 2, rel=1e-9)
    assert f.values[g.inside].max() > 0
    # radial mode: no sign change inside
    assert f.values[g.inside].min() > -1e-12


def test_unsupported_modes_rejected():
    g = rect(32)
    with pytest.raises(UnsupportedModeError):
        sample_closed_form(DomainSpec("rectangle", dims=(math.pi, math.pi)), (0, 2), g)
    gd = build_grid(DomainSpec("disk", radius=1.0), 32)
    with pytest.raises(UnsupportedModeError):
        sample_closed_form(DomainSpec("disk", radius=1.0), (0, 0), gd)


def test_rescale_matches_analytic_pullback():
    g = rect(256)
    spec = DomainSpec("rectangle", dims=(math.pi, math.pi))
    lam, f = sample_closed_form(spec, (3, 2), g)
    c = (math.pi / 2, math.pi / 2)
    u, coeffs = wavelength_rescale(f, c, lam, eps0=1.0)

    r = math.sqrt(1.0 / lam)
    y0 = u.grid.axes[0][:, None]
    y1 = u.grid.axes[1][None, :]
    ball = y0 ** 2 + y1 ** 2 <= 1.0
    exact = np.sin(3 * (c[0] + r * y0)) * np.sin(2 * (c[1] + r * y1))
    assert np.abs(u.values - exact)[ball].max() < 1e-9
    assert np.abs(u.values[~ball]).max() == 0.0

    # unit grid conventions: even cell count, node at the origin
    n = u.grid.shape[0] - 1
    assert n % 2 == 0 and n >= 8
    i0 = u.grid.nearest_index((0.0, 0.0))
    for d in range(2):
        assert u.grid.origin[d] + i0[d] * u.grid.spacing == pytest.approx(0.0, abs=1e-14)

    # pulled-back coefficients stay flat for the constant-coefficient case
    a = np.asarray(coeffs.aij)
    assert np.abs(a[..., 0, 0] - 1.0).max() == 0.0
    assert np.abs(a[..., 0, 1]).max() == 0.0
    assert coeffs.q.min() == coeffs.q.max() == 1.0


def test_rescale_wraps_torus_seam():
    spec = DomainSpec("torus", dims=(2 * math.pi, 2 * math.pi), boundary="periodic")
    g = build_grid(spec, 256)
    lam, f = sample_closed_form(spec, (4, 4), g)
    assert lam == pytest.approx(32.0)
    u, _ = wavelength_rescale(f, (0.0, 0.0), lam)  # ball straddles the seam
    r = math.sqrt(1.0 / lam)
    y0 = u.grid.axes[0][:, None]
    y1 = u.grid.axes[1][None, :]
    ball = y0 ** 2 + y1 ** 2 <= 1.0
    exact = np.sin(4 * r * y0) * np.sin(4 * r * y1)
    assert np.abs(u.values - exact)[ball].max() < 1e-9


def test_rescale_rejects_ball_leaving_box():
    g = rect(128)
    spec = DomainSpec("rectangle", dims=(math.pi, math.pi))
    lam, f = sample_closed_form(spec, (3, 2), g)
    with pytest.raises(OutOfDomainError):
        wavelength_rescale(f, (0.05, 0.05), lam)


def test_unit_grid_never_drops_below_eight_cells():
    # even a coarse source (r under 2 source cells) resamples onto a
    # unit grid of at least 8 cells; the scan layer is what rejects
    # under-resolved sources outright
    g = rect(16)
    spec = DomainSpec("rectangle", dims=(math.pi, math.pi))
    lam, f = sample_closed_form(spec, (2, 2), g)
    u, _ = wavelength_rescale(f, (math.pi / 2, math.pi / 2), lam)
    assert u.grid.shape[0] - 1 >= 8


def test_eps0_shrinks_the_ball():
    g = rect(256)
    spec = DomainSpec("rectangle", dims=(math.pi, math.pi))
    lam, f = sample_closed_form(spec, (3, 2), g)
    c = (math.pi / 2, math.pi / 2)
    u_small, coeffs = wavelength_rescale(f, c, lam, eps0=0.25)
    r = math.sqrt(0.25 / lam)
    y0 = u_small.grid.axes[0][:, None]
    y1 = u_small.grid.axes[1][None, :]
    ball = y0 ** 2 + y1 ** 2 <= 1.0
    exact = np.sin(3 * (c[0] + r * y0)) * np.sin(2 * (c[1] + r * y1))
    assert np.abs(u_small.values - exact)[ball].max() < 1e-9
    assert coeffs.eps0 == 0.25


def test_iter_rescaled_agrees_with_single_rescale():
    g = rect(192)
    spec = DomainSpec("rectangle", dims=(math.pi, math.pi))
    lam, f = sample_closed_form(spec, (3, 3), g)
    centers = [(math.pi / 2, math.pi / 2), (1.2, 1.5)]
    got = list(iter_rescaled(f, centers, lam))
    assert [c for c, _ in got] == centers
    for c, u in got:
        ref, _ = wavelength_rescale(f, c, lam)
        assert np.abs(u.values - ref.values).max() < 1e-12


def test_flat_coefficients_pass_their_own_checks():
    g = rect(32)
    coeffs = flat_coefficients(g, eps0=0.5)
    coeffs.check_bounds()
    assert coeffs.eps0 == 0.5
