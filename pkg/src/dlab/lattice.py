"""Geometry of Z^d and the column lattice Z^(d+1).

Sites are plain integer tuples.  An edge of Z^n is stored in canonical form
``(base, axis)`` with ``axis`` in 1..n, standing for the unordered pair
{base, base + e_axis}; every undirected edge has exactly one such
representation.  All set operations are windowed: "infinity" is modelled by
the frame of an explicit finite :class:`Box`, and callers must keep their
sets at margin >= 1 from the frame.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ScaleExceeded, WindowTooSmall

Site = tuple
Edge = tuple  # (base_site, axis) with 1-based axis

PARALLEL = "parallel"
PERPENDICULAR = "perpendicular"


def l1(u, v):
    return sum(abs(a - b) for a, b in zip(u, v))


def neighbors(v):
    """The 2d nearest neighbors of a site."""
    out = []
    for i in range(len(v)):
        for s in (1, -1):
            w = list(v)
            w[i] += s
            out.append(tuple(w))
    return out


def add_unit(v, axis, step=1):
    w = list(v)
    w[axis - 1] += step
    return tuple(w)


def canonical_edge(x, y):
    """Canonical (base, axis) form of the edge {x, y}; x and y must be adjacent."""
    if l1(x, y) != 1:
        raise ValueError(f"{x} and {y} are not adjacent")
    for i, (a, b) in enumerate(zip(x, y)):
        if a != b:
            return (x, i + 1) if b > a else (y, i + 1)
    raise ValueError("unreachable")


def edge_endpoints(edge):
    base, axis = edge
    return base, add_unit(base, axis)


def edge_class(edge):
    """Classify a Z^(d+1) edge as parallel (vertical) or perpendicular."""
    base, axis = edge
    return PARALLEL if axis == len(base) else PERPENDICULAR


@dataclass(frozen=True)
class Box:
    """An axis-aligned box of lattice sites with inclusive bounds."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError(f"bad box bounds {self.lo}..{self.hi}")

    @property
    def d(self):
        return len(self.lo)

    def contains(self, v):
        return all(a <= x <= b for x, a, b in zip(v, self.lo, self.hi))

    def on_frame(self, v):
        return self.contains(v) and any(
            x == a or x == b for x, a, b in zip(v, self.lo, self.hi)
        )

    def cells(self):
        return itertools.product(*(range(a, b + 1) for a, b in zip(self.lo, self.hi)))

    def frame_cells(self):
        for v in self.cells():
            if self.on_frame(v):
                yield v

    def size(self):
        n = 1
        for a, b in zip(self.lo, self.hi):
            n *= b - a + 1
        return n

    def expand(self, margin):
        return Box(
            tuple(a - margin for a in self.lo), tuple(b + margin for b in self.hi)
        )

    @staticmethod
    def bounding(sites, margin=0):
        sites = list(sites)
        if not sites:
            raise ValueError("cannot bound an empty collection")
        d = len(sites[0])
        lo = tuple(min(v[i] for v in sites) - margin for i in range(d))
        hi = tuple(max(v[i] for v in sites) + margin for i in range(d))
        return Box(lo, hi)


def box_radius(radius, d):
    """The box {-radius..radius}^d."""
    return Box((-radius,) * d, (radius,) * d)


def boundaries(A):
    """Edge boundary (ordered pairs (u, v), u in A, v outside), inner and outer
    vertex boundaries of a finite set A."""
    A = set(A)
    edge_bd = []
    inner = set()
    outer = set()
    for u in A:
        for v in neighbors(u):
            if v not in A:
                edge_bd.append((u, v))
                inner.add(u)
                outer.add(v)
    return edge_bd, inner, outer


def _neighbor_fn(mode):
    if mode == "l1":
        return neighbors
    if mode == "l1plus":
        # sites at l1 distance <= 2 are considered connected
        def nb(v):
            d = len(v)
            out = []
            for delta in itertools.product((-2, -1, 0, 1, 2), repeat=d):
                if 0 < sum(abs(x) for x in delta) <= 2:
                    out.append(tuple(a + x for a, x in zip(v, delta)))
            return out

        return nb
    raise ValueError(f"unknown connectivity mode {mode!r}")


def components(A, mode="l1"):
    """Connected components of a finite set, sorted by smallest member."""
    A = set(A)
    nb = _neighbor_fn(mode)
    seen = set()
    comps = []
    for start in A:
        if start in seen:
            continue
        comp = {start}
        seen.add(start)
        stack = [start]
        while stack:
            u = stack.pop()
            for v in nb(u):
                if v in A and v not in seen:
                    seen.add(v)
                    comp.add(v)
                    stack.append(v)
        comps.append(frozenset(comp))
    comps.sort(key=lambda c: min(c))
    return comps


def is_connected(A, mode="l1"):
    A = set(A)
    return len(A) <= 1 or len(components(A, mode)) == 1


def _flood(window, blocked, seeds):
    """Sites of the window reachable from seeds without entering `blocked`."""
    reached = set()
    stack = [s for s in seeds if window.contains(s) and s not in blocked]
    reached.update(stack)
    while stack:
        u = stack.pop()
        for v in neighbors(u):
            if window.contains(v) and v not in blocked and v not in reached:
                reached.add(v)
                stack.append(v)
    return reached


def interior(A, window):
    """in(A): sites from which every path to infinity crosses A.

    Computed as the window cells (outside A) not reachable from the window
    frame; requires A to keep a one-site margin from the frame.
    """
    A = set(A)
    for v in A:
        if not window.contains(v) or window.on_frame(v):
            raise WindowTooSmall(f"{v} touches the window frame")
    outside = _flood(window, A, list(window.frame_cells()))
    return {v for v in window.cells() if v not in A and v not in outside}


def visible_boundary(A, v, window):
    """The outer vertex boundary of A visible from v (a site, or None for infinity)."""
    A = set(A)
    _, _, outer = boundaries(A)
    if v is None:
        seeds = list(window.frame_cells())
    else:
        if v in A:
            raise ValueError("viewpoint must lie outside the set")
        seeds = [v]
    reached = _flood(window, A, seeds)
    return {u for u in outer if u in reached}


# --- contours over the square-plaquette adjacency ------------------------------

def square_adjacent(e, f):
    """Whether two distinct lattice edges are sides of a common unit square."""
    if e == f:
        return False
    (a, ax1), (b, ax2) = e, f
    if ax1 == ax2:
        diff = [x - y for x, y in zip(b, a)]
        return sum(abs(x) for x in diff) == 1 and diff[ax1 - 1] == 0
    pts_e = set(edge_endpoints(e))
    pts_f = set(edge_endpoints(f))
    return len(pts_e & pts_f) == 1


def square_connected(edges):
    """Connectivity of an edge set in the unit-square adjacency graph."""
    edges = set(edges)
    if len(edges) <= 1:
        return True
    edges = list(edges)
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j in range(len(edges)):
            if j not in seen and square_adjacent(edges[i], edges[j]):
                seen.add(j)
                stack.append(j)
    return len(seen) == len(edges)


def boundary_edge_set(A):
    """Canonical edges crossing the boundary of A."""
    out = set()
    for u in A:
        for v in neighbors(u):
            if v not in A:
                out.add(canonical_edge(u, v))
    return out


def _is_contour(edges, window):
    """Whether `edges` equals the boundary edge set of some finite set and is
    square-connected.  Candidate sets are unions of the cells cut off from the
    frame when the edges are removed from the window graph."""
    edges = set(edges)
    if not edges or not square_connected(edges):
        return False
    blocked_pairs = {frozenset(edge_endpoints(e)) for e in edges}
    # components of the window graph with the candidate edges removed
    seen = set()
    comps = []
    for start in itertools.chain(window.frame_cells(), window.cells()):
        if start in seen:
            continue
        comp = {start}
        seen.add(start)
        stack = [start]
        touches_frame = window.on_frame(start)
        while stack:
            u = stack.pop()
            for v in neighbors(u):
                if (
                    window.contains(v)
                    and v not in seen
                    and frozenset((u, v)) not in blocked_pairs
                ):
                    seen.add(v)
                    comp.add(v)
                    stack.append(v)
                    touches_frame = touches_frame or window.on_frame(v)
        if not touches_frame:
            comps.append(frozenset(comp))
    for k in range(1, len(comps) + 1):
        for pick in itertools.combinations(comps, k):
            cand = set().union(*pick)
            if boundary_edge_set(cand) == edges:
                return True
    return False


def primitive_contour_equiv(A, window=None, max_size=16):
    """Check agreement of two characterizations of small sets A:

    (a) A and its complement are both connected;
    (b) the boundary edge set of A is a primitive contour (square-connected,
        and not a disjoint union of two nonempty contours).

    Both sides are computed independently; returns True iff they agree.
    """
    A = set(A)
    if len(A) > max_size:
        raise ScaleExceeded(f"|A|={len(A)} exceeds the exhaustive scale {max_size}")
    if not A:
        return True
    if window is None:
        window = Box.bounding(A, margin=2)
    # side (a): vertex connectivity of A and of its complement
    side_a = is_connected(A) and not interior(A, window)

    # side (b): boundary edge set is a primitive contour
    edges = boundary_edge_set(A)
    if not _is_contour(edges, window):
        side_b = False
    else:
        side_b = True
        # a contour is non-primitive iff it splits into two nonempty contours;
        # any sub-contour is a union of the nested-hull boundary pieces
        pieces = _contour_pieces(A, window)
        for k in range(1, len(pieces)):
            for pick in itertools.combinations(range(len(pieces)), k):
                part1 = set().union(*(pieces[i] for i in pick))
                part2 = edges - part1
                if not part1 or not part2:
                    continue
                if _is_contour(part1, window) and _is_contour(part2, window):
                    side_b = False
                    break
            if not side_b:
                break
    return side_a == side_b


def _contour_pieces(A, window):
    """Decompose boundary(A) into the boundary edge sets of the nested hulls of
    the components of A and of the finite components of its complement."""
    A = set(A)
    inside = interior(A, window)
    parts = components(A) + components(inside)
    hulls = []
    for c in parts:
        hull = set(c)
        for other in parts:
            if other is c:
                continue
            # other is below c if every escape path from it crosses c
            if set(other) <= interior(set(c), window) | set(c):
                hull |= set(other)
        hulls.append(hull)
    pieces = [boundary_edge_set(h) for h in hulls]
    return pieces
