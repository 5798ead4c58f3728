import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlab.errors import ScaleExceeded, WindowTooSmall
from dlab.lattice import (
    Box,
    boundaries,
    box_radius,
    canonical_edge,
    components,
    edge_class,
    interior,
    neighbors,
    primitive_contour_equiv,
    square_connected,
    boundary_edge_set,
    visible_boundary,
)


def test_edge_class():
    assert edge_class(((0, 0, 0), 3)) == "parallel"
    assert edge_class(((0, 0, 0), 1)) == "perpendicular"
    # d=1: axis 2 is the column direction
    assert edge_class(((5, -3), 2)) == "parallel"


def test_canonical_edge():
    assert canonical_edge((0, 0), (1, 0)) == ((0, 0), 1)
    assert canonical_edge((1, 0), (0, 0)) == ((0, 0), 1)
    assert canonical_edge((2, 5), (2, 4)) == ((2, 4), 2)
    with pytest.raises(ValueError):
        canonical_edge((0, 0), (1, 1))


def test_boundaries_singleton():
    bd, inner, outer = boundaries({(0, 0)})
    assert len(bd) == 4
    assert inner == {(0, 0)}
    assert len(outer) == 4


def test_boundaries_empty():
    bd, inner, outer = boundaries(set())
    assert bd == [] and inner == set() and outer == set()


def test_boundaries_two_by_two():
    box = {(x, y) for x in (0, 1) for y in (0, 1)}
    bd, _, _ = boundaries(box)
    assert len(bd) == 8


def test_components_modes():
    a = {(0, 0), (1, 1)}
    assert len(components(a, "l1")) == 2
    assert len(components(a, "l1plus")) == 1
    assert components(set()) == []
    # ordering: sorted by smallest member
    comps = components({(5, 5), (0, 0)})
    assert min(comps[0]) == (0, 0)


def test_interior_ring():
    ring = {v for v in box_radius(1, 2).cells() if v != (0, 0)}
    window = box_radius(3, 2)
    assert interior(ring, window) == {(0, 0)}
    assert interior({(0, 0)}, window) == set()
    assert interior(set(), window) == set()


def test_interior_window_too_small():
    with pytest.raises(WindowTooSmall):
        interior({(3, 0)}, box_radius(3, 2))


def test_visible_boundary():
    window = box_radius(4, 2)
    # convex set: everything visible from infinity
    box = {(x, y) for x in (0, 1) for y in (0, 1)}
    _, _, outer = boundaries(box)
    assert visible_boundary(box, None, window) == outer
    # singleton: the 2d neighbors
    assert visible_boundary({(0, 0)}, None, window) == set(neighbors((0, 0)))
    # ring seen from the inside: only the inner wall
    ring = {v for v in box_radius(1, 2).cells() if v != (0, 0)}
    inner_view = visible_boundary(ring, (0, 0), window)
    assert inner_view == {(0, 0)}
    outer_view = visible_boundary(ring, None, window)
    assert (0, 0) not in outer_view


def test_visible_boundary_l1plus_connected():
    rng = random.Random(0)
    window = box_radius(6, 2)
    from dlab.audits import random_set

    for _ in range(50):
        a = random_set(rng, 2, max_cells=12, radius=3)
        comps = components(a)
        vis = visible_boundary(set(comps[0]), None, window)
        assert len(components(vis, "l1plus")) <= 1


def test_primitive_contour_examples():
    assert primitive_contour_equiv({(0, 0)})
    assert primitive_contour_equiv({(0, 0), (1, 1)})  # both sides false, agree
    assert primitive_contour_equiv({(0, 0), (0, 1), (1, 0), (1, 1)})
    with pytest.raises(ScaleExceeded):
        primitive_contour_equiv({(i, 0) for i in range(17)})


def test_primitive_contour_exhaustive_3x3():
    cells = list(Box((0, 0), (2, 2)).cells())
    window = Box((-2, -2), (4, 4))
    for mask in range(1, 1 << 9):
        a = {cells[i] for i in range(9) if mask >> i & 1}
        assert primitive_contour_equiv(a, window=window)


def test_primitive_contour_sampled_wider_window():
    rng = random.Random(3)
    cells = list(Box((0, 0), (3, 2)).cells())
    window = Box((-2, -2), (5, 4))
    for _ in range(300):
        size = rng.randint(1, 10)
        a = set(rng.sample(cells, size))
        assert primitive_contour_equiv(a, window=window)


def test_boundary_edge_set_square_connectivity():
    # a connected set with connected complement has a square-connected boundary
    a = {(0, 0), (1, 0), (1, 1)}
    assert square_connected(boundary_edge_set(a))
    # two diagonal cells: still square-connected but splits into two contours
    assert square_connected(boundary_edge_set({(0, 0), (1, 1)}))


@settings(max_examples=60, deadline=None)
@given(st.sets(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=1, max_size=12))
def test_isoperimetry_random_sets(a):
    bd, _, _ = boundaries(a)
    d = 2
    assert len(bd) >= 2 * d * len(a) ** (1 - 1 / d) - 1e-9


def test_boundaries_pure():
    a = {(0, 0), (2, 1), (1, 1)}
    assert boundaries(a) == boundaries(set(a))
    w = box_radius(4, 2)
    assert interior(a, w) == interior(a, w)
