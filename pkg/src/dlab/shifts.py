"""Shifts: finitely supported integer fields on Z^d and their complexity
functionals (total variation, level components, trip entropy, admissibility).

A shift acts on coupling fields by translating whole columns of disorder;
here we only deal with the base-lattice side.  Trip entropy is the minimal
total l1 length of a point sequence that starts at the origin and touches
every level component; the exact minimizer is found by a pruned search over
component orders and entry points, and a spanning-tree tour gives a certified
upper bound at any scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ScaleExceeded
from .lattice import Box, components, l1, neighbors

ADMISSIBILITY_TRIP_CONSTANT = 200.0


class Shift:
    """A map Z^d -> Z with finite support, stored sparsely."""

    __slots__ = ("d", "_m")

    def __init__(self, d, entries=None):
        self.d = d
        m = {}
        if entries:
            for site, val in dict(entries).items():
                if len(site) != d:
                    raise ValueError(f"site {site} is not {d}-dimensional")
                if val != 0:
                    m[tuple(site)] = int(val)
        self._m = m

    @classmethod
    def zero(cls, d):
        return cls(d)

    @classmethod
    def indicator(cls, site, value=1):
        return cls(len(site), {tuple(site): value})

    @classmethod
    def constant_on(cls, sites, value, d=None):
        sites = list(sites)
        if d is None:
            d = len(sites[0])
        return cls(d, {tuple(v): value for v in sites})

    def __call__(self, v):
        return self._m.get(tuple(v), 0)

    @property
    def support(self):
        return frozenset(self._m)

    def items(self):
        return self._m.items()

    def is_zero(self):
        return not self._m

    def l1_norm(self):
        return sum(abs(x) for x in self._m.values())

    def sup_norm(self):
        return max((abs(x) for x in self._m.values()), default=0)

    def __add__(self, other):
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        m = dict(self._m)
        for v, x in other._m.items():
            m[v] = m.get(v, 0) + x
        return Shift(self.d, m)

    def __neg__(self):
        return Shift(self.d, {v: -x for v, x in self._m.items()})

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        return (
            isinstance(other, Shift) and self.d == other.d and self._m == other._m
        )

    def __hash__(self):
        return hash((self.d, frozenset(self._m.items())))

    def __repr__(self):
        ent = sorted(self._m.items())
        return f"Shift(d={self.d}, {ent})"

    def to_json(self):
        entries = [[*site, val] for site, val in sorted(self._m.items())]
        return json.dumps({"d": self.d, "entries": entries})

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text) if isinstance(text, str) else text
        d = int(obj["d"])
        entries = {}
        for row in obj["entries"]:
            if len(row) != d + 1:
                raise ValueError(f"entry {row} does not match d={d}")
            entries[tuple(int(x) for x in row[:d])] = int(row[d])
        return cls(d, entries)


def tv(tau):
    """Total variation: sum of |tau(u) - tau(v)| over nearest-neighbor pairs."""
    total = 0
    supp = tau.support
    for u in supp:
        xu = tau(u)
        for axis in range(tau.d):
            for step in (1, -1):
                v = list(u)
                v[axis] += step
                v = tuple(v)
                if step == -1 and v in supp:
                    continue  # counted from the other endpoint
                total += abs(xu - tau(v))
    return total


@dataclass(frozen=True)
class LevelComponent:
    level: int
    sites: frozenset
    infinite: bool  # touches the window frame (level-0 background)


def default_window(tau, margin=1):
    pts = set(tau.support) | {(0,) * tau.d}
    return Box.bounding(pts, margin=margin)


def level_components(tau, window=None):
    """Connected components of the level sets of tau inside the window.

    The level-0 components touching the window frame are the infinite
    background (one per frame-connected piece; a single one for d >= 2).
    """
    if window is None:
        window = default_window(tau)
    for v in tau.support:
        if not window.contains(v) or window.on_frame(v):
            from .errors import WindowTooSmall

            raise WindowTooSmall(f"support site {v} too close to window frame")
    seen = set()
    out = []
    for start in window.cells():
        if start in seen:
            continue
        lev = tau(start)
        comp = {start}
        seen.add(start)
        stack = [start]
        touches = window.on_frame(start)
        while stack:
            u = stack.pop()
            for v in neighbors(u):
                if window.contains(v) and v not in seen and tau(v) == lev:
                    seen.add(v)
                    comp.add(v)
                    stack.append(v)
                    touches = touches or window.on_frame(v)
        out.append(LevelComponent(lev, frozenset(comp), touches and lev == 0))
    out.sort(key=lambda c: min(c.sites))
    return out


@dataclass(frozen=True)
class TripEntropyResult:
    value: int
    certificate: tuple
    exact: bool


def _route_cost(site_sets, origin, exact_limit=10):
    """Minimal total l1 length of a sequence from `origin` touching every set.

    Exact pruned search over visit orders and entry points; the sets must be
    few.  Returns (value, certificate including origin).
    """
    todo = [sorted(s) for s in site_sets if origin not in s]
    if not todo:
        return 0, (origin,)
    if len(todo) > exact_limit:
        raise ScaleExceeded(f"{len(todo)} components exceed exact scale {exact_limit}")
    n = len(todo)
    full = (1 << n) - 1
    best = [None]
    best_seq = [None]
    memo = {}

    def lower_bound(pos, mask):
        lb = 0
        for i in range(n):
            if mask & (1 << i):
                dmin = min(l1(pos, q) for q in todo[i])
                if dmin > lb:
                    lb = dmin
        return lb

    def dfs(pos, mask, cost, seq):
        if mask == 0:
            if best[0] is None or cost < best[0]:
                best[0] = cost
                best_seq[0] = tuple(seq)
            return
        key = (pos, mask)
        prev = memo.get(key)
        if prev is not None and prev <= cost:
            return
        memo[key] = cost
        if best[0] is not None and cost + lower_bound(pos, mask) >= best[0]:
            return
        choices = []
        for i in range(n):
            if mask & (1 << i):
                q = min(todo[i], key=lambda s: l1(pos, s))
                choices.append((l1(pos, q), i))
        choices.sort()
        for _, i in choices:
            for q in sorted(todo[i], key=lambda s: l1(pos, s)):
                step = l1(pos, q)
                if best[0] is not None and cost + step >= best[0]:
                    break
                seq.append(q)
                dfs(q, mask & ~(1 << i), cost + step, seq)
                seq.pop()

    dfs(origin, full, 0, [origin])
    return best[0], best_seq[0]


def _tour_upper(site_sets, origin):
    """Feasible root sequence from a spanning-tree preorder walk."""
    todo = [sorted(s) for s in site_sets if origin not in s]
    if not todo:
        return 0, (origin,)
    n = len(todo)
    # minimum spanning structure over {origin} + components, Prim-style
    dist_to_tree = []
    for comp in todo:
        dist_to_tree.append(min(l1(origin, q) for q in comp))
    parent = [-1] * n  # -1 means attached to origin
    in_tree = [False] * n
    children = {-1: []}
    for _ in range(n):
        i = min(
            (i for i in range(n) if not in_tree[i]), key=lambda i: dist_to_tree[i]
        )
        in_tree[i] = True
        children.setdefault(parent[i], []).append(i)
        children.setdefault(i, [])
        for j in range(n):
            if not in_tree[j]:
                dij = min(
                    l1(p, q) for p in todo[i] for q in todo[j]
                )
                if dij < dist_to_tree[j]:
                    dist_to_tree[j] = dij
                    parent[j] = i
    seq = [origin]
    order = []

    def walk(i):
        order.append(i)
        for j in children.get(i, []):
            walk(j)

    for j in children[-1]:
        walk(j)
    for i in order:
        pos = seq[-1]
        entry = min(todo[i], key=lambda q: l1(pos, q))
        seq.append(entry)
    value = sum(l1(seq[k - 1], seq[k]) for k in range(1, len(seq)))
    return value, tuple(seq)


def trip_entropy(tau, mode="exact", exact_limit=10, window=None):
    """Trip entropy of a shift: shortest origin-rooted tour of its level
    components (`exact`), or a certified upper bound (`upper`)."""
    comps = level_components(tau, window=window)
    origin = (0,) * tau.d
    sets = [c.sites for c in comps]
    if mode == "exact":
        if len(sets) > exact_limit:
            raise ScaleExceeded(
                f"{len(sets)} level components exceed exact scale {exact_limit}"
            )
        value, cert = _route_cost(sets, origin, exact_limit=exact_limit)
        return TripEntropyResult(value, cert, True)
    if mode == "upper":
        value, cert = _tour_upper(sets, origin)
        return TripEntropyResult(value, cert, False)
    raise ValueError(f"unknown mode {mode!r}")


def set_trip_entropy(sites, d=None, mode="exact", exact_limit=10):
    """Trip entropy of a finite set: origin-rooted tour of its components."""
    sites = set(map(tuple, sites))
    if not sites:
        return TripEntropyResult(0, ((0,) * (d or 2),), True)
    if d is None:
        d = len(next(iter(sites)))
    comps = components(sites)
    origin = (0,) * d
    if mode == "exact":
        value, cert = _route_cost(comps, origin, exact_limit=exact_limit)
        return TripEntropyResult(value, cert, True)
    value, cert = _tour_upper(comps, origin)
    return TripEntropyResult(value, cert, False)


def trip_entropy_auto(tau, exact_limit=10, window=None):
    """Exact trip entropy when small enough, else the tour upper bound."""
    try:
        return trip_entropy(tau, "exact", exact_limit=exact_limit, window=window)
    except ScaleExceeded:
        return trip_entropy(tau, "upper", window=window)


def is_admissible(
    tau,
    gap,
    alpha_par,
    alpha_perp,
    d=None,
    trip_constant=ADMISSIBILITY_TRIP_CONSTANT,
    trip_result=None,
):
    """Whether the energy gap dominates both complexity thresholds:
    (alpha_perp/2) * TV(tau)  and  min(alpha) * (d/trip_constant) * R(tau).

    When only the tour upper bound for R is available the check is
    conservative toward False.
    """
    if d is None:
        d = tau.d
    if trip_result is None:
        trip_result = trip_entropy_auto(tau)
    thr_tv = (alpha_perp / 2.0) * tv(tau)
    thr_trip = min(alpha_par, alpha_perp) * (d / trip_constant) * trip_result.value
    return abs(gap) >= max(thr_tv, thr_trip)


def enumerate_shifts(lambda_max, support_window, level_bound=2, max_cells=9):
    """All shifts supported in `support_window` with values in
    [-level_bound, level_bound] and total variation <= lambda_max.

    Depth-first over cells with incremental pruning on the total variation of
    already-determined edges (sites outside the window contribute level 0).
    """
    cells = sorted(support_window.cells())
    if len(cells) > max_cells:
        raise ScaleExceeded(f"{len(cells)} cells exceed enumeration scale {max_cells}")
    d = support_window.d
    index = {v: i for i, v in enumerate(cells)}
    inside = set(cells)
    # for each cell, edges that become fully determined once it is assigned
    # (neighbor outside the window, or neighbor with a smaller index)
    determined = []
    for v in cells:
        pairs = []
        for w in neighbors(v):
            if w not in inside:
                pairs.append(None)  # outside: value 0
            elif index[w] < index[v]:
                pairs.append(index[w])
        determined.append(pairs)
    out = []
    values = [0] * len(cells)
    levels = range(-level_bound, level_bound + 1)

    def rec(i, tv_so_far):
        if i == len(cells):
            out.append(
                Shift(d, {cells[j]: values[j] for j in range(len(cells)) if values[j]})
            )
            return
        for val in levels:
            t = tv_so_far
            ok = True
            for p in determined[i]:
                other = 0 if p is None else values[p]
                t += abs(val - other)
                if t > lambda_max:
                    ok = False
                    break
            if ok:
                values[i] = val
                rec(i + 1, t)
        values[i] = 0

    rec(0, 0)
    return out
