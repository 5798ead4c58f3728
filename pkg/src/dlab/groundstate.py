"""Exact ground configurations on truncated Dobrushin cylinders.

A configuration lives on the cylinder Lambda x {-M..M} and is extended
outside by the Dobrushin rule sign(k - 1/2).  Its energy is twice the sum of
capacities over disagreement edges meeting Lambda x Z; capacities are exact
fixed-point integers, so energies compare exactly.  The minimizer is found as
a minimum cut: merge the +1 boundary region into a source and the -1 region
into a sink; the canonical minimizer assigns +1 to the nodes reachable from
the source in the residual network, which is the pointwise-smallest minimizer
(with -1 < +1) and hence also the lexicographically smallest sign vector.

The truncation certificate uses two disjoint lower bounds on the energy of
any interfacial configuration with a sign flip at height M or beyond: every
column contributes a parallel crossing (>= alpha_par each), and the interface
must contain a perpendicular plaquette at each height 1..M (>= alpha_perp
each).  When the solved energy is below 2*(alpha_par*|Lambda| + alpha_perp*M)
the truncated minimizer therefore equals the semi-infinite one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .disorder import CAP_SCALE, alphas, shift_field
from .errors import InfeasibleBounds, ScaleExceeded
from .flows import FlowNetwork, FlowStats
from .lattice import add_unit

BRUTE_FORCE_MAX_NODES = 24
_CHUNK_BITS = 20


def _dob_sign(k):
    return 1 if k >= 1 else -1


class SpinConfiguration:
    """Signs on a truncated cylinder, Dobrushin rule outside."""

    __slots__ = ("d", "sites", "m", "signs", "_index")

    def __init__(self, sites, m, signs, d=None):
        self.sites = tuple(sorted(map(tuple, sites)))
        self.d = d if d is not None else len(self.sites[0])
        self.m = int(m)
        self.signs = np.asarray(signs, dtype=np.int8)
        if self.signs.shape != (len(self.sites), 2 * self.m + 1):
            raise ValueError("signs array shape mismatch")
        self._index = {v: i for i, v in enumerate(self.sites)}

    @classmethod
    def dobrushin(cls, sites, m, d=None):
        sites = tuple(sorted(map(tuple, sites)))
        ks = np.arange(-m, m + 1)
        row = np.where(ks >= 1, 1, -1).astype(np.int8)
        return cls(sites, m, np.tile(row, (len(sites), 1)), d=d)

    @classmethod
    def from_heights(cls, heights, sites, m, d=None):
        """Single sign change per column: -1 up to heights[v], +1 above."""
        sites = tuple(sorted(map(tuple, sites)))
        ks = np.arange(-m, m + 1)
        signs = np.empty((len(sites), 2 * m + 1), dtype=np.int8)
        for i, v in enumerate(sites):
            h = heights.get(v, 0)
            if not -m - 1 <= h <= m:
                raise ValueError(f"height {h} outside cylinder range")
            signs[i] = np.where(ks > h, 1, -1)
        return cls(sites, m, signs, d=d)

    def value(self, v, k):
        i = self._index.get(tuple(v))
        if i is None or abs(k) > self.m:
            return _dob_sign(k)
        return int(self.signs[i, k + self.m])

    def column(self, v, kmin, kmax):
        return [self.value(v, k) for k in range(kmin, kmax + 1)]

    def with_flip(self, v, k):
        i = self._index[tuple(v)]
        signs = self.signs.copy()
        signs[i, k + self.m] *= -1
        return SpinConfiguration(self.sites, self.m, signs, d=self.d)

    def equal_on(self, other, base_sites, kmax=None):
        if kmax is None:
            kmax = max(self.m, other.m) + 1
        for v in base_sites:
            for k in range(-kmax, kmax + 1):
                if self.value(v, k) != other.value(v, k):
                    return False
        return True

    def __eq__(self, other):
        return (
            isinstance(other, SpinConfiguration)
            and self.sites == other.sites
            and self.m == other.m
            and np.array_equal(self.signs, other.signs)
        )

    def __repr__(self):
        return f"SpinConfiguration({len(self.sites)} columns, m={self.m})"


@dataclass
class GroundResult:
    config: SpinConfiguration
    energy_scaled: int
    certificate_ok: bool
    m_used: int
    flow_stats: FlowStats | None = None

    @property
    def energy(self):
        return self.energy_scaled / CAP_SCALE


def _cylinder_tables(field, sites, m):
    """Node index plus interior and boundary edge tables for the cylinder.

    Interior entries are (i, j, cap, edge); boundary entries are
    (i, fixed_bit, cap, edge) with fixed_bit 1 for a +1 boundary endpoint.
    """
    d = field.d
    index = {}
    nodes = []
    for v in sites:
        for k in range(-m, m + 1):
            index[(v, k)] = len(nodes)
            nodes.append((v, k))
    site_set = set(sites)
    interior = []
    boundary = []
    for v in sites:
        for k in range(-m - 1, m + 1):
            edge = (v + (k,), d + 1)
            cap = field.sample_int(edge)
            a = index.get((v, k))
            b = index.get((v, k + 1))
            if a is not None and b is not None:
                interior.append((a, b, cap, edge))
            elif b is None:
                boundary.append((a, 1, cap, edge))  # top cap, +1 side
            else:
                boundary.append((b, 0, cap, edge))  # bottom cap, -1 side
    seen_base = set()
    for v in sites:
        for axis in range(1, d + 1):
            for step in (1, -1):
                w = add_unit(v, axis, step)
                base = (v, w) if step == 1 else (w, v)
                if base in seen_base:
                    continue
                seen_base.add(base)
                u_lo = base[0]
                inside_w = w in site_set
                for k in range(-m, m + 1):
                    edge = (u_lo + (k,), axis)
                    cap = field.sample_int(edge)
                    if inside_w:
                        interior.append((index[(v, k)], index[(w, k)], cap, edge))
                    else:
                        boundary.append(
                            (index[(v, k)], 1 if k >= 1 else 0, cap, edge)
                        )
    return nodes, index, interior, boundary


def hamiltonian_scaled(sigma, field):
    """Energy (in fixed point) of a configuration: 2 * sum of capacities over
    disagreement edges meeting the cylinder's base columns."""
    total = 0
    _, _, interior, boundary = _cylinder_tables(field, sigma.sites, sigma.m)
    nodes_flat = sigma.signs.reshape(-1)
    for i, j, cap, _ in interior:
        if nodes_flat[i] != nodes_flat[j]:
            total += cap
    for i, bit, cap, _ in boundary:
        s = 1 if bit else -1
        if nodes_flat[i] != s:
            total += cap
    return 2 * total


def hamiltonian(sigma, field):
    return hamiltonian_scaled(sigma, field) / CAP_SCALE


def _certificate_threshold_scaled(field, n_sites, m):
    a_par, a_perp = alphas(field)
    return 2 * (
        n_sites * math.floor(a_par * CAP_SCALE) + m * math.floor(a_perp * CAP_SCALE)
    )


def ground_state(field, lam, m):
    """Exact minimizer over the cylinder of half-height m via minimum cut."""
    sites = tuple(sorted(map(tuple, lam)))
    if not sites or m < 1:
        raise ValueError("need a nonempty base set and m >= 1")
    nodes, index, interior, boundary = _cylinder_tables(field, sites, m)
    n = len(nodes)
    net = FlowNetwork(n + 2)
    source, sink = n, n + 1
    term = {}
    for i, j, cap, _ in interior:
        net.add_undirected(i, j, cap)
    for i, bit, cap, _ in boundary:
        key = (i, bit)
        term[key] = term.get(key, 0) + cap
    for (i, bit), cap in term.items():
        if bit:
            net.add_arc(source, i, cap)
        else:
            net.add_arc(i, sink, cap)
    value, reachable, stats = net.solve(source, sink)
    nh = 2 * m + 1
    signs = np.where(reachable[:n], 1, -1).astype(np.int8).reshape(len(sites), nh)
    config = SpinConfiguration(sites, m, signs, d=field.d)
    energy_scaled = 2 * value
    cert = energy_scaled < _certificate_threshold_scaled(field, len(sites), m)
    return GroundResult(config, energy_scaled, cert, m, stats)


def ground_state_auto(field, lam, m_start=4, m_max=8):
    """Double m until the truncation certificate passes or m_max is reached."""
    m = min(m_start, m_max)
    while True:
        res = ground_state(field, lam, m)
        if res.certificate_ok or m >= m_max:
            return res
        m = min(2 * m, m_max)


def brute_force_ground(field, lam, m, rel_tol=1e-12, runner_up=False):
    """Exhaustive minimizer; ties within rel_tol resolved to the
    lexicographically smallest sign vector (-1 before +1, nodes ordered by
    (site, height)).  With runner_up, also returns twice the second-smallest
    distinct edge-sum (None if all configurations tie)."""
    sites = tuple(sorted(map(tuple, lam)))
    nodes, index, interior, boundary = _cylinder_tables(field, sites, m)
    n = len(nodes)
    if n > BRUTE_FORCE_MAX_NODES:
        raise ScaleExceeded(f"{n} nodes exceed brute-force scale {BRUTE_FORCE_MAX_NODES}")
    shift_of = [n - 1 - i for i in range(n)]  # node 0 is the most significant bit

    def chunk_energies(g0, g1):
        g = np.arange(g0, g1, dtype=np.int64)
        e = np.zeros(g1 - g0, dtype=np.int64)
        for i, j, cap, _ in interior:
            bits = ((g >> shift_of[i]) ^ (g >> shift_of[j])) & 1
            e += bits * cap
        for i, bit, cap, _ in boundary:
            bits = ((g >> shift_of[i]) & 1) ^ bit
            e += bits * cap
        return g, e

    best_e = None
    second_e = None
    total = 1 << n
    step = 1 << min(_CHUNK_BITS, n)
    for g0 in range(0, total, step):
        _, e = chunk_energies(g0, min(g0 + step, total))
        vals = np.unique(e)[:2]
        for v in map(int, vals):
            if best_e is None or v < best_e:
                best_e, second_e = v, best_e
            elif v != best_e and (second_e is None or v < second_e):
                second_e = v
    threshold = best_e + int(best_e * rel_tol)
    best_g = None
    for g0 in range(0, total, step):
        g, e = chunk_energies(g0, min(g0 + step, total))
        mask = e <= threshold
        if mask.any():
            gmin = int(g[mask].min())
            if best_g is None or gmin < best_g:
                best_g = gmin
    nh = 2 * m + 1
    signs = np.empty((len(sites), nh), dtype=np.int8)
    for idx in range(n):
        bit = (best_g >> shift_of[idx]) & 1
        signs[idx // nh, idx % nh] = 1 if bit else -1
    config = SpinConfiguration(sites, m, signs, d=field.d)
    energy_scaled = 2 * best_e
    cert = energy_scaled < _certificate_threshold_scaled(field, len(sites), m)
    result = GroundResult(config, energy_scaled, cert, m, None)
    if runner_up:
        return result, (2 * second_e if second_e is not None else None)
    return result


@dataclass
class GapResult:
    value_scaled: int
    trusted: bool
    result_from: GroundResult
    result_to: GroundResult

    @property
    def value(self):
        return self.value_scaled / CAP_SCALE


def energy_gap(field, lam, tau, tau_prime, m):
    """Ground-energy change from looking at the field shifted by tau versus by
    tau_prime: GE(eta^tau_prime) - GE(eta^tau).  Untrusted when a truncation
    certificate fails."""
    res_from = ground_state(shift_field(field, tau), lam, m)
    res_to = ground_state(shift_field(field, tau_prime), lam, m)
    return GapResult(
        res_to.energy_scaled - res_from.energy_scaled,
        res_from.certificate_ok and res_to.certificate_ok,
        res_from,
        res_to,
    )


@dataclass(frozen=True)
class LayeringCount:
    parallel: int
    perpendicular: int


def layering(sigma, a_sites):
    """Parallel sign changes above A, and perpendicular disagreements with
    both endpoints projecting into A."""
    a_sites = set(map(tuple, a_sites))
    m = sigma.m
    par = 0
    for v in a_sites:
        for k in range(-m - 1, m + 1):
            if sigma.value(v, k) != sigma.value(v, k + 1):
                par += 1
    perp = 0
    seen = set()
    for v in a_sites:
        for axis in range(1, sigma.d + 1):
            for step in (1, -1):
                w = add_unit(v, axis, step)
                if w not in a_sites:
                    continue
                pair = (v, w) if v < w else (w, v)
                if pair in seen:
                    continue
                seen.add(pair)
                for k in range(-m, m + 1):
                    if sigma.value(v, k) != sigma.value(w, k):
                        perp += 1
    return LayeringCount(par, perp)


def disagreements_meeting(sigma, field, a_sites):
    """(parallel, perpendicular) disagreement counts over edges whose base
    projection intersects A (the layering-type constraint counts)."""
    a_sites = set(map(tuple, a_sites))
    _, _, interior, boundary = _cylinder_tables(field, sigma.sites, sigma.m)
    nodes_flat = sigma.signs.reshape(-1)
    d = field.d
    par = perp = 0

    def meets(edge):
        base, axis = edge
        u = base[:d]
        if axis == d + 1:
            return u in a_sites
        return u in a_sites or add_unit(u, axis)[:d] in a_sites

    for i, j, cap, edge in interior:
        if nodes_flat[i] != nodes_flat[j] and meets(edge):
            if edge[1] == d + 1:
                par += 1
            else:
                perp += 1
    for i, bit, cap, edge in boundary:
        s = 1 if bit else -1
        if nodes_flat[i] != s and meets(edge):
            if edge[1] == d + 1:
                par += 1
            else:
                perp += 1
    return par, perp


def restricted_ground(field, lam, a_sites, b_par, b_perp, m, rel_tol=1e-12):
    """Minimal energy among configurations whose disagreement counts over
    edges meeting A stay within (b_par, b_perp).  Exhaustive scale only."""
    sites = tuple(sorted(map(tuple, lam)))
    a_sites = set(map(tuple, a_sites))
    if not a_sites <= set(sites):
        raise ValueError("A must be a subset of the base set")
    if b_par < len(a_sites) or b_perp < 0:
        raise InfeasibleBounds(
            f"flat configuration needs b_par >= {len(a_sites)} and b_perp >= 0"
        )
    nodes, index, interior, boundary = _cylinder_tables(field, sites, m)
    n = len(nodes)
    if n > BRUTE_FORCE_MAX_NODES:
        raise ScaleExceeded(f"{n} nodes exceed brute-force scale {BRUTE_FORCE_MAX_NODES}")
    d = field.d
    shift_of = [n - 1 - i for i in range(n)]

    def meets(edge):
        base, axis = edge
        u = base[:d]
        if axis == d + 1:
            return u in a_sites
        return u in a_sites or add_unit(u, axis)[:d] in a_sites

    best = None
    total = 1 << n
    step = 1 << min(_CHUNK_BITS, n)
    for g0 in range(0, total, step):
        g = np.arange(g0, min(g0 + step, total), dtype=np.int64)
        e = np.zeros(len(g), dtype=np.int64)
        cpar = np.zeros(len(g), dtype=np.int64)
        cperp = np.zeros(len(g), dtype=np.int64)
        for i, j, cap, edge in interior:
            bits = ((g >> shift_of[i]) ^ (g >> shift_of[j])) & 1
            e += bits * cap
            if meets(edge):
                if edge[1] == d + 1:
                    cpar += bits
                else:
                    cperp += bits
        for i, bit, cap, edge in boundary:
            bits = ((g >> shift_of[i]) & 1) ^ bit
            e += bits * cap
            if meets(edge):
                if edge[1] == d + 1:
                    cpar += bits
                else:
                    cperp += bits
        ok = (cpar <= b_par) & (cperp <= b_perp)
        if ok.any():
            emin = int(e[ok].min())
            if best is None or emin < best:
                best = emin
    return 2 * best / CAP_SCALE


def dump_instance(field, lam, m, include_capacities=False):
    """JSON-ready description of a solve instance."""
    sites = sorted(map(tuple, lam))
    out = {
        "d": field.d,
        "lambda": [list(v) for v in sites],
        "m": m,
        "nu_par": field.nu_par.spec(),
        "nu_perp": field.nu_perp.spec(),
        "seed": field.seed,
        "shift": field.shift.to_json(),
        "cap_scale": CAP_SCALE,
    }
    if include_capacities:
        _, _, interior, boundary = _cylinder_tables(field, tuple(sites), m)
        caps = {}
        for _, _, cap, edge in interior:
            caps[f"{list(edge[0])}|{edge[1]}"] = cap
        for _, _, cap, edge in boundary:
            caps[f"{list(edge[0])}|{edge[1]}"] = cap
        out["capacities"] = caps
    return out
