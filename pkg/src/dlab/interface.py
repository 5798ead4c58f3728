"""Interface analysis of cylinder configurations and the construction of
admissible shifts from interfaces.

A column is summarized by its sign-change structure: upward -/+ changes are
the odd sign changes (OSC), upward +/- changes the even ones (ESC).  Columns
with a unique sign change carry a height; columns with several are layered.
The overhang-removal move picks an even sign change, flips a block on the
side where the surrounding spins do not object, and repeats; each move
shrinks (|OSC|, -NESC) lexicographically and never increases the
perpendicular disagreement count, so it terminates with a height function.

The shift constructed from a configuration around a query set E copies the
interface heights on the components of the interface graph surrounding E,
fills enclosed pockets with the height visible on their walls, is zero on the
unbounded background, and resolves layered columns by overhang removal of an
auxiliary configuration.  Its energy gap provably dominates both the layering
excess over E and the total variation, and its trip entropy is controlled by
the gap; both sides are evaluated here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .disorder import CAP_SCALE, alphas, shift_field
from .errors import InvariantViolation
from .groundstate import (
    GroundResult,
    SpinConfiguration,
    ground_state,
    hamiltonian_scaled,
    layering,
)
from .lattice import Box, add_unit, components, interior, neighbors, visible_boundary
from .shifts import Shift, set_trip_entropy, trip_entropy_auto, tv

LAYERED = "layered"


@dataclass(frozen=True)
class InterfaceProfile:
    heights: dict  # site -> height, for non-layered profiled columns
    layered: frozenset  # profiled columns with several sign changes
    osc: dict  # site -> tuple of heights k with change -/+ at (k, k+1)
    esc: dict  # site -> tuple of heights k with change +/- at (k, k+1)
    profiled: frozenset

    def height(self, v):
        """Height of the unique sign change, LAYERED, or 0 outside the
        profiled region."""
        v = tuple(v)
        if v in self.layered:
            return LAYERED
        return self.heights.get(v, 0)


def profile(sigma, extra_sites=()):
    """Per-column sign-change analysis over the cylinder base, its outer
    boundary and any extra sites."""
    cols = set(sigma.sites)
    for v in sigma.sites:
        cols.update(neighbors(v))
    cols.update(map(tuple, extra_sites))
    m = sigma.m
    heights = {}
    layered = set()
    osc = {}
    esc = {}
    for v in sorted(cols):
        up = []
        down = []
        prev = sigma.value(v, -m - 1)
        for k in range(-m - 1, m + 2):
            cur = sigma.value(v, k + 1)
            if prev == -1 and cur == 1:
                up.append(k)
            elif prev == 1 and cur == -1:
                down.append(k)
            prev = cur
        osc[v] = tuple(up)
        esc[v] = tuple(down)
        if len(up) == 1 and not down:
            heights[v] = up[0]
        else:
            layered.add(v)
    return InterfaceProfile(heights, frozenset(layered), osc, esc, frozenset(cols))


def perp_disagreement_count(sigma, lam):
    """Perpendicular disagreement edges meeting the columns of lam."""
    lam = set(map(tuple, lam))
    m = sigma.m
    seen = set()
    count = 0
    for v in lam:
        for axis in range(1, sigma.d + 1):
            for step in (1, -1):
                w = add_unit(v, axis, step)
                pair = (v, w) if v < w else (w, v)
                if pair in seen:
                    continue
                seen.add(pair)
                for k in range(-m, m + 1):
                    if sigma.value(v, k) != sigma.value(w, k):
                        count += 1
    return count


def _esc_set(sigma):
    out = []
    m = sigma.m
    for i, v in enumerate(sigma.sites):
        col = sigma.signs[i]
        for k in range(-m, m):
            if col[k + m] == 1 and col[k + m + 1] == -1:
                out.append((v, k))
    return out


def _osc_set(sigma):
    out = set()
    m = sigma.m
    for v in sigma.sites:
        prev = sigma.value(v, -m - 1)
        for k in range(-m - 1, m + 1):
            cur = sigma.value(v, k + 1)
            if prev == -1 and cur == 1:
                out.add((v, k))
            prev = cur
    return out


def adjacent_esc_pairs(sigma):
    esc = set(_esc_set(sigma))
    count = 0
    for (v, k) in esc:
        for axis in range(1, sigma.d + 1):
            w = add_unit(v, axis)
            if (w, k) in esc:
                count += 1
    return count


def no_overhang_reduce(sigma, collect_trace=False):
    """Remove even sign changes by block flips until every column has a
    unique sign change.  The chosen move always targets the lexicographically
    smallest remaining (column, height) even change and flips downward when
    the surrounding sum allows it."""
    cur = SpinConfiguration(sigma.sites, sigma.m, sigma.signs.copy(), d=sigma.d)
    m = cur.m
    trace = []
    guard = max(1000, len(_osc_set(cur)) * len(cur.sites) * (2 * m + 2))
    steps = 0
    while True:
        esc = _esc_set(cur)
        if not esc:
            break
        if collect_trace:
            trace.append(
                (
                    len(_osc_set(cur)),
                    adjacent_esc_pairs(cur),
                    perp_disagreement_count(cur, cur.sites),
                )
            )
        steps += 1
        if steps > guard:
            raise InvariantViolation("overhang removal exceeded its step bound")
        v0, k0 = min(esc)
        delta = {v for (v, k) in esc if k == k0}
        # surrounding sum weighted by boundary edges: an outer vertex adjacent
        # to several flip columns counts once per edge, which is what controls
        # the perpendicular disagreement count
        mult = {}
        for v in delta:
            for w in neighbors(v):
                if w not in delta:
                    mult[w] = mult.get(w, 0) + 1
        outer = set(mult)
        s_lo = sum(c * cur.value(w, k0) for w, c in mult.items())
        s_hi = sum(c * cur.value(w, k0 + 1) for w, c in mult.items())
        if s_lo > s_hi:
            raise InvariantViolation("surrounding sums out of order")
        if s_lo <= 0:
            # flip the +1 block below the even change to -1
            k1 = k0
            while True:
                k = k1 - 1
                if k < -m:
                    break
                if not all(cur.value(v, k) == 1 for v in delta):
                    break
                if not all(cur.value(w, k) <= cur.value(w, k0) for w in outer):
                    break
                k1 = k
            for v in delta:
                i = cur._index[v]
                cur.signs[i, k1 + m : k0 + m + 1] = -1
        else:
            # flip the -1 block above the even change to +1
            k1 = k0 + 1
            while True:
                k = k1 + 1
                if k > m:
                    break
                if not all(cur.value(v, k) == -1 for v in delta):
                    break
                if not all(cur.value(w, k) >= cur.value(w, k0 + 1) for w in outer):
                    break
                k1 = k
            for v in delta:
                i = cur._index[v]
                cur.signs[i, k0 + 1 + m : k1 + m + 1] = 1
    if collect_trace:
        trace.append(
            (
                len(_osc_set(cur)),
                adjacent_esc_pairs(cur),
                perp_disagreement_count(cur, cur.sites),
            )
        )
        return cur, trace
    return cur


@dataclass(frozen=True)
class InterfaceDecomposition:
    v_sigma: frozenset
    components: tuple  # all components of the interface graph
    surrounding: tuple  # the ones whose hull meets E
    a_tilde: frozenset
    window: Box
    pockets: tuple  # (sites, wall_value) for components of the complement
    background: frozenset


def decompose(prof, e_sites, window):
    """Interface graph components, the ones surrounding E, and the value of
    the pre-shift on every pocket of the complement of their union."""
    e_sites = set(map(tuple, e_sites))
    cand = set(prof.profiled)

    def ival(v):
        return prof.height(v)

    v_sigma = set()
    for v in cand:
        iv = ival(v)
        for u in neighbors(v):
            iu = ival(u)
            if iu != iv or (iu == LAYERED and iv == LAYERED):
                v_sigma.add(v)
                break
    comps = components(v_sigma)
    surrounding = []
    for comp in comps:
        hull = set(comp) | interior(set(comp), window)
        if e_sites & hull:
            surrounding.append(comp)
    a_tilde = set().union(*surrounding) if surrounding else set()
    # pockets: bounded components of the complement of a_tilde, each with the
    # interface height visible on its enclosing wall
    pockets = []
    background = set()
    if a_tilde:
        inners = {comp: interior(set(comp), window) for comp in surrounding}
        pocket_sites = interior(a_tilde, window)
        for piece in components(pocket_sites):
            rep = min(piece)
            enclosing = [c for c in surrounding if rep in inners[c]]
            inner = min(enclosing, key=lambda c: len(inners[c]))
            for c in enclosing:
                if not inners[inner] <= inners[c]:
                    raise InvariantViolation("surrounding components not nested")
            vis = visible_boundary(set(inner), rep, window)
            vals = {ival(u) for u in vis}
            if len(vals) != 1 or LAYERED in vals:
                raise InvariantViolation(
                    f"visible wall of a pocket carries values {vals}"
                )
            pockets.append((piece, vals.pop()))
        background = {
            v
            for v in window.cells()
            if v not in a_tilde and v not in pocket_sites
        }
    else:
        background = set(window.cells())
    return InterfaceDecomposition(
        frozenset(v_sigma),
        tuple(comps),
        tuple(surrounding),
        frozenset(a_tilde),
        window,
        tuple(pockets),
        frozenset(background),
    )


@dataclass
class ConstructedShift:
    tau: Shift
    pre_shift: dict  # site -> int | LAYERED on the window
    decomposition: InterfaceDecomposition
    guarantee_lhs_scaled: int  # H(sigma) - GE(eta^tau), fixed point
    base_energy_scaled: int
    shifted_result: GroundResult
    layering_e: tuple  # (parallel, perpendicular) over E
    layering_surround: tuple  # over the union of surrounding components
    tv_tau: int

    @property
    def guarantee_lhs(self):
        return self.guarantee_lhs_scaled / CAP_SCALE


def default_window(sigma, e_sites):
    pts = set(sigma.sites) | set(map(tuple, e_sites)) | {(0,) * sigma.d}
    return Box.bounding(pts, margin=3)


def construct_shift(sigma, e_sites, field, lam, m, window=None):
    """Build the shift read off from sigma's interface around E and evaluate
    its guarantee: the energy drop H(sigma) - GE(eta^tau), with the shifted
    solve on a cylinder enlarged by the shift's sup norm so the comparison
    configuration fits the truncation."""
    e_sites = sorted(map(tuple, e_sites))
    if not e_sites:
        raise ValueError("E must be nonempty")
    if window is None:
        window = default_window(sigma, e_sites)
    prof = profile(sigma, extra_sites=e_sites)
    dec = decompose(prof, e_sites, window)

    pre = {}
    for v in window.cells():
        if v in dec.a_tilde:
            pre[v] = prof.height(v)
        else:
            pre[v] = 0
    for piece, val in dec.pockets:
        for v in piece:
            pre[v] = val

    # auxiliary configuration: unique change at the pre-shift height where it
    # is an integer, the original column where it is layered
    aux_sites = sorted(set(sigma.sites) | {v for v in pre if pre[v] != 0})
    heights = {}
    layered_cols = []
    for v in aux_sites:
        h = pre.get(v, 0)
        if h == LAYERED:
            heights[v] = 0  # placeholder, overwritten below
            layered_cols.append(v)
        else:
            heights[v] = h
    aux = SpinConfiguration.from_heights(heights, aux_sites, sigma.m, d=sigma.d)
    for v in layered_cols:
        i = aux._index[v]
        src = [sigma.value(v, k) for k in range(-sigma.m, sigma.m + 1)]
        aux.signs[i] = np.array(src, dtype=np.int8)
    reduced = no_overhang_reduce(aux)
    red_prof = profile(reduced)
    entries = {}
    for v in aux_sites:
        h = red_prof.height(v)
        if h == LAYERED:
            raise InvariantViolation("reduction left a layered column")
        if h != 0:
            entries[v] = h
    tau = Shift(sigma.d, entries)
    for v, h in pre.items():
        if h != LAYERED and tau(v) != h:
            raise InvariantViolation("shift disagrees with its pre-shift")

    base_scaled = hamiltonian_scaled(sigma, field)
    m_shift = m + tau.sup_norm()
    res_shift = ground_state(shift_field(field, tau), lam, m_shift)
    lhs_scaled = base_scaled - res_shift.energy_scaled
    lay_e = layering(sigma, e_sites)
    lay_s = (
        layering(sigma, dec.a_tilde) if dec.a_tilde else layering(sigma, [])
    )
    return ConstructedShift(
        tau,
        pre,
        dec,
        lhs_scaled,
        base_scaled,
        res_shift,
        (lay_e.parallel, lay_e.perpendicular),
        (lay_s.parallel, lay_s.perpendicular),
        tv(tau),
    )


@dataclass(frozen=True)
class GuaranteeCheck:
    name: str
    lhs: float
    rhs: float
    passed: bool


@dataclass(frozen=True)
class GuaranteeReport:
    checks: tuple
    ok: bool
    quantities: dict


def verify_guarantees(cs, sigma, e_sites, field):
    """Recompute the two lower bounds on the constructed shift's energy gap
    (layering/total-variation side and trip-entropy side), the surrounding
    layering bound, and the origin-flip bound, from scratch."""
    e_sites = sorted(map(tuple, e_sites))
    a_par, a_perp = alphas(field)
    lhs = cs.guarantee_lhs
    lay_e = layering(sigma, e_sites)
    t = tv(cs.tau)
    rhs_layer = 2 * a_par * (lay_e.parallel - len(e_sites)) + 2 * a_perp * max(
        lay_e.perpendicular, t
    )
    r_tau = trip_entropy_auto(cs.tau)
    r_e = set_trip_entropy(e_sites, d=sigma.d)
    rhs_trip = (
        (1.0 / 16.0)
        * min(a_par, a_perp)
        * sigma.d
        * (r_tau.value - r_e.value - 2 * (len(e_sites) - 1))
    )
    lay_s = layering(sigma, cs.decomposition.a_tilde)
    rhs_surround = 2 * a_par * (
        lay_s.parallel - len(cs.decomposition.a_tilde)
    ) + 2 * a_perp * lay_s.perpendicular
    checks = [
        GuaranteeCheck("gap_vs_layering_tv", lhs, rhs_layer, lhs >= rhs_layer - 1e-9),
        GuaranteeCheck("gap_vs_trip_entropy", lhs, rhs_trip, lhs >= rhs_trip - 1e-9),
        GuaranteeCheck(
            "gap_vs_surrounding_layering", lhs, rhs_surround, lhs >= rhs_surround - 1e-9
        ),
        # the shift's total variation is carried by the perpendicular
        # disagreements of the configuration above the surrounding components
        GuaranteeCheck(
            "tv_within_surrounding_perpendicular",
            t,
            lay_s.perpendicular,
            t <= lay_s.perpendicular,
        ),
    ]
    quantities = {
        "tv": t,
        "trip_entropy": r_tau.value,
        "trip_entropy_exact": r_tau.exact,
        "layering_parallel_e": lay_e.parallel,
        "layering_perpendicular_e": lay_e.perpendicular,
        "alpha_par": a_par,
        "alpha_perp": a_perp,
    }
    return GuaranteeReport(tuple(checks), all(c.passed for c in checks), quantities)


def interface_dump(sigma, constructed=None):
    """JSON-ready interface summary: per-column heights or layered flags,
    interface-graph components, and (optionally) a constructed shift."""
    prof = profile(sigma)
    heights = {}
    for v in sigma.sites:
        h = prof.height(v)
        heights[",".join(map(str, v))] = "layered" if h == LAYERED else h
    out = {"m": sigma.m, "d": sigma.d, "heights": heights}
    if constructed is not None:
        dec = constructed.decomposition
        out["components"] = [sorted(map(list, c)) for c in dec.components]
        out["surrounding"] = [sorted(map(list, c)) for c in dec.surrounding]
        out["shift"] = constructed.tau.to_json()
        out["gap"] = constructed.guarantee_lhs
    return out


def origin_flip_height(sigma):
    """Largest |k| with a sign disagreement with the flat rule at the origin
    column (0 if none)."""
    origin = (0,) * sigma.d
    best = 0
    for k in range(-sigma.m, sigma.m + 1):
        if sigma.value(origin, k) != _flat_sign(k):
            best = max(best, abs(k))
    return best


def _flat_sign(k):
    return 1 if k >= 1 else -1


def component_size_bound_ok(sigma, comp):
    """Every interface component satisfies
    |A| <= 2*(parallel layering - |A| + perpendicular layering)."""
    lay = layering(sigma, comp)
    return len(comp) <= 2 * (lay.parallel - len(comp) + lay.perpendicular)
