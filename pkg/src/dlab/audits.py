"""Deterministic audit sweeps: every check here is a proved statement, so any
violation indicates an implementation bug.  Suites return one row per check
with instance counts, violation counts and the extremal slack seen."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass

import numpy as np

from . import graining as gr
from . import shifts as sh
from .disorder import CouplingField, PointMass, Uniform
from .groundstate import (
    SpinConfiguration,
    brute_force_ground,
    ground_state,
    hamiltonian_scaled,
)
from .interface import (
    _esc_set,
    _osc_set,
    no_overhang_reduce,
    perp_disagreement_count,
)
from .lattice import Box, boundaries, box_radius
from .shifts import Shift


@dataclass
class AuditRow:
    suite: str
    check: str
    instances: int
    violations: int
    extreme: float  # minimal slack rhs - lhs (or rhs/lhs ratio) observed
    passed: bool


class _Tally:
    def __init__(self, suite, check):
        self.suite = suite
        self.check = check
        self.instances = 0
        self.violations = 0
        self.extreme = math.inf

    def see(self, lhs, rhs):
        """Record one instance of a check lhs <= rhs."""
        self.instances += 1
        slack = rhs - lhs
        if slack < self.extreme:
            self.extreme = slack
        if lhs > rhs:
            self.violations += 1

    def row(self):
        extreme = self.extreme if self.instances else 0.0
        return AuditRow(
            self.suite,
            self.check,
            self.instances,
            self.violations,
            float(extreme),
            self.violations == 0,
        )


def random_set(rng, d, max_cells=20, radius=4):
    """A random nonempty site set inside a box, biased toward blobby shapes."""
    n = rng.randint(1, max_cells)
    start = tuple(rng.randint(-radius, radius) for _ in range(d))
    out = {start}
    frontier = [start]
    while len(out) < n and frontier:
        base = frontier[rng.randrange(len(frontier))]
        axis = rng.randrange(d)
        step = rng.choice((1, -1))
        w = list(base)
        w[axis] += step
        w = tuple(w)
        if all(abs(x) <= radius + 2 for x in w):
            if w not in out:
                out.add(w)
                frontier.append(w)
        if rng.random() < 0.1:
            extra = tuple(rng.randint(-radius, radius) for _ in range(d))
            out.add(extra)
            frontier.append(extra)
    return out


def random_shift(rng, d, tv_max=60, level_max=3, radius=4, tries=200):
    """A random nonzero shift with total variation at most tv_max."""
    for _ in range(tries):
        entries = {}
        for _ in range(rng.randint(1, 3)):
            blob = random_set(rng, d, max_cells=rng.randint(1, 10), radius=radius)
            lev = rng.choice([x for x in range(-level_max, level_max + 1) if x])
            for v in blob:
                entries[v] = lev
        tau = Shift(d, entries)
        if not tau.is_zero() and sh.tv(tau) <= tv_max:
            return tau
    raise RuntimeError("could not draw a shift under the tv budget")


def random_interfacial(rng, sites, m, d=None, flip_prob=0.25):
    """A random configuration of the cylinder: the flat one with a band of
    random flips (always interfacial thanks to the boundary rule)."""
    cfg = SpinConfiguration.dobrushin(sites, m, d=d)
    signs = cfg.signs.copy()
    n, nh = signs.shape
    for i in range(n):
        for j in range(nh):
            if rng.random() < flip_prob:
                signs[i, j] *= -1
    return SpinConfiguration(cfg.sites, m, signs, d=cfg.d)


# ---------------------------------------------------------------------- sets


def isoperimetry_suite(rng=None, n_instances=1000, dims=(2, 3)):
    rng = rng or random.Random(1)
    t_iso = _Tally("isoperimetry", "boundary_vs_volume")
    t_cube = _Tally("isoperimetry", "boundary_within_cube")
    for i in range(n_instances):
        d = dims[i % len(dims)]
        a = random_set(rng, d)
        bd, _, _ = boundaries(a)
        t_iso.see(2 * d * len(a) ** (1 - 1 / d), len(bd))
        n = rng.choice((2, 3, 4))
        anchor = tuple(rng.randint(-5, 3) for _ in range(d))
        cube = set(
            itertools.product(*(range(x, x + n) for x in anchor))
        )
        inside = sum(1 for (u, v) in bd if u in cube and v in cube)
        lhs = (2.0 / (3 * n)) * min(len(a & cube), len(cube - a))
        t_cube.see(lhs, inside)
    return [t_iso.row(), t_cube.row()]


# -------------------------------------------------------------------- shifts


def shift_lemma_suite(rng=None, n_shifts=1000, dims=(2, 3), tv_max=60):
    """Deterministic shift/graining facts on random shifts."""
    rng = rng or random.Random(2)
    t_func_iso = _Tally("shifts", "tv_vs_l1_mass")
    t_lc = _Tally("shifts", "level_components_vs_tv")
    t_subadd = _Tally("shifts", "tv_subadditive")
    t_coarse_tv = _Tally("graining", "coarse_tv_bound")
    t_l1_first = _Tally("graining", "coarse_l1_first_step")
    t_l1_step = _Tally("graining", "coarse_l1_doubling")
    t_compat = _Tally("graining", "compatible_axes_exist")
    t_chain = _Tally("graining", "chain_ends_at_zero")
    t_upper = _Tally("shifts", "trip_entropy_upper_dominates_exact")
    t_cert = _Tally("shifts", "trip_certificate_matches_value")
    for i in range(n_shifts):
        d = dims[i % len(dims)]
        tau = random_shift(rng, d, tv_max=tv_max)
        t = sh.tv(tau)
        t_func_iso.see(2 * d * tau.l1_norm() ** (1 - 1 / d), t)
        lc = sh.level_components(tau)
        t_lc.see(len(lc), t / d)
        other = random_shift(rng, d, tv_max=tv_max)
        t_subadd.see(sh.tv(tau + other), t + sh.tv(other))
        for n in (2, 4, 8):
            t_coarse_tv.see(sh.tv(gr.grain(tau, gr.Coarse(n))), 10 * d * t)
        t_l1_first.see((tau - gr.grain(tau, gr.Coarse(2))).l1_norm(), 2 * t)
        for n in (2, 4):
            lhs = (
                gr.grain(tau, gr.Coarse(n)) - gr.grain(tau, gr.Coarse(2 * n))
            ).l1_norm()
            t_l1_step.see(lhs, (4 * d + 9) * n * t)
        for r in range(1, d + 1):
            try:
                gr.find_compatible(tau, r)
                t_compat.see(0, 0)
            except Exception:
                t_compat.see(1, 0)
        chain = gr.graining_chain(tau, 1)
        t_chain.see(0 if chain[-1].is_zero() else 1, 0)
        upper = sh.trip_entropy(tau, "upper")
        t_cert.see(_cert_length(upper.certificate), upper.value)
        t_cert.see(upper.value, _cert_length(upper.certificate))
        try:
            exact = sh.trip_entropy(tau, "exact")
        except Exception:
            exact = None
        if exact is not None:
            t_upper.see(exact.value, upper.value)
            t_cert.see(_cert_length(exact.certificate), exact.value)
            t_cert.see(exact.value, _cert_length(exact.certificate))
    return [
        t_func_iso.row(),
        t_lc.row(),
        t_subadd.row(),
        t_coarse_tv.row(),
        t_l1_first.row(),
        t_l1_step.row(),
        t_compat.row(),
        t_chain.row(),
        t_upper.row(),
        t_cert.row(),
    ]


def _cert_length(cert):
    from .lattice import l1

    return sum(l1(cert[i - 1], cert[i]) for i in range(1, len(cert)))


def trip_entropy_sum_suite(rng=None, n_pairs=150, d=2):
    """R(tau+tau') <= 2R(tau)+R(tau')+(98/d)(TV(tau)+TV(tau')) with exact R."""
    rng = rng or random.Random(3)
    t = _Tally("shifts", "trip_entropy_sum_bound")
    done = 0
    while done < n_pairs:
        tau = random_shift(rng, d, tv_max=24, radius=3)
        oth = random_shift(rng, d, tv_max=24, radius=3)
        try:
            r1 = sh.trip_entropy(tau, "exact").value
            r2 = sh.trip_entropy(oth, "exact").value
            r12 = sh.trip_entropy(tau + oth, "exact").value
        except Exception:
            continue
        t.see(r12, 2 * r1 + r2 + (98.0 / d) * (sh.tv(tau) + sh.tv(oth)))
        done += 1
    return [t.row()]


def fine_expectation_suite(rng=None, n_shifts=50, samples=2000, dims=(2, 3)):
    """Sampled means of fine-graining total variation and l1 displacement stay
    within their stated bounds plus three standard errors."""
    rng = rng or random.Random(4)
    t_tv = _Tally("graining", "fine_tv_mean")
    t_l1 = _Tally("graining", "fine_l1_mean")
    for i in range(n_shifts):
        d = dims[i % len(dims)]
        tau = random_shift(rng, d, tv_max=40)
        t = sh.tv(tau)
        for r in range(1, d + 1):
            subsets = list(itertools.combinations(range(1, d + 1), r))
            cache = {}
            tv_vals = np.empty(samples)
            l1_vals = np.empty(samples)
            for j in range(samples):
                axes = subsets[rng.randrange(len(subsets))]
                if axes not in cache:
                    g = gr.grain(tau, gr.Fine(axes))
                    cache[axes] = (sh.tv(g), (tau - g).l1_norm())
                tv_vals[j], l1_vals[j] = cache[axes]
            se_tv = tv_vals.std(ddof=1) / math.sqrt(samples)
            se_l1 = l1_vals.std(ddof=1) / math.sqrt(samples)
            t_tv.see(tv_vals.mean(), 10 * (2 * r + 1) * t + 3 * se_tv)
            t_l1.see(l1_vals.mean(), (2 * r / d) * t + 3 * se_l1)
    return [t_tv.row(), t_l1.row()]


# ----------------------------------------------------------------- reduction


def reduction_suite(rng=None, n_configs=500, n_pointmass=50):
    rng = rng or random.Random(5)
    t_esc = _Tally("reduction", "no_even_changes_left")
    t_osc = _Tally("reduction", "odd_changes_contained")
    t_perp = _Tally("reduction", "perpendicular_count_monotone")
    t_order = _Tally("reduction", "partial_order_decreases")
    for i in range(n_configs):
        d = 2
        sites = list(box_radius(rng.choice((1, 2)), d).cells())
        m = rng.choice((2, 3))
        sigma = random_interfacial(rng, sites, m)
        reduced, trace = no_overhang_reduce(sigma, collect_trace=True)
        t_esc.see(len(_esc_set(reduced)), 0)
        t_osc.see(0 if _osc_set(reduced) <= _osc_set(sigma) else 1, 0)
        t_perp.see(
            perp_disagreement_count(reduced, reduced.sites),
            perp_disagreement_count(sigma, sigma.sites),
        )
        ok = all(
            (b[0] < a[0]) or (b[0] == a[0] and b[1] > a[1])
            for a, b in zip(trace, trace[1:])
        ) and all(b[2] <= a[2] for a, b in zip(trace, trace[1:]))
        t_order.see(0 if ok else 1, 0)

    t_energy = _Tally("reduction", "flat_perpendicular_energy_monotone")
    t_bf = _Tally("reduction", "height_function_attains_ground_energy")
    for i in range(n_pointmass):
        d = 1
        sites = [(-1,), (0,), (1,)]
        m = 2
        f = CouplingField(
            9000 + i, Uniform(1.0, 2.0), PointMass(rng.uniform(0.5, 2.0)), d
        )
        sigma = random_interfacial(rng, sites, m, flip_prob=0.35)
        reduced = no_overhang_reduce(sigma)
        t_energy.see(hamiltonian_scaled(reduced, f), hamiltonian_scaled(sigma, f))
        bf = brute_force_ground(f, sites, m)
        best_h = None
        for hs in itertools.product(range(-m - 1, m + 1), repeat=len(sites)):
            cfg = SpinConfiguration.from_heights(
                dict(zip(sites, hs)), sites, m, d=d
            )
            e = hamiltonian_scaled(cfg, f)
            if best_h is None or e < best_h:
                best_h = e
        t_bf.see(best_h, bf.energy_scaled)
        t_bf.see(bf.energy_scaled, best_h)
    return [
        t_esc.row(),
        t_osc.row(),
        t_perp.row(),
        t_order.row(),
        t_energy.row(),
        t_bf.row(),
    ]


# --------------------------------------------------------------- enumeration


def enumeration_suite(lambda_values=range(0, 9)):
    window = Box((0, 0), (2, 2))
    rows = []
    counts = {}
    t_mono = _Tally("enumeration", "count_monotone_in_tv_budget")
    t_lc = _Tally("enumeration", "level_components_vs_tv")
    for lam in lambda_values:
        shifts = sh.enumerate_shifts(lam, window)
        counts[lam] = len(shifts)
        for tau in shifts:
            if not tau.is_zero():
                t_lc.see(len(sh.level_components(tau)), sh.tv(tau) / tau.d)
    for a, b in zip(sorted(counts), sorted(counts)[1:]):
        t_mono.see(counts[a], counts[b])
    t_19 = _Tally("enumeration", "budget4_count_is_19")
    t_19.see(counts.get(4, -1), 19)
    t_19.see(19, counts.get(4, -1))
    rows.extend([t_mono.row(), t_lc.row(), t_19.row()])
    return rows, counts


# -------------------------------------------------------------------- oracle


def oracle_suite(rng=None, n_instances=100, rel_gap=1e-9):
    """Min-cut solver versus exhaustive enumeration on tiny instances."""
    rng = rng or random.Random(6)
    t_energy = _Tally("oracle", "energies_equal_in_fixed_point")
    t_config = _Tally("oracle", "configs_equal_when_gap_clear")
    sites = [(-1,), (0,), (1,)]
    m = 2
    for i in range(n_instances):
        f = CouplingField(10_000 + i, Uniform(1.0, 2.0), Uniform(1.0, 2.0), 1)
        fast = ground_state(f, sites, m)
        slow, second = brute_force_ground(f, sites, m, runner_up=True)
        t_energy.see(abs(fast.energy_scaled - slow.energy_scaled), 0)
        if second is not None and second - slow.energy_scaled > rel_gap * slow.energy_scaled:
            same = fast.config == slow.config
            t_config.see(0 if same else 1, 0)
    return [t_energy.row(), t_config.row()]


def all_suites(sizes=None, rng_seed=0):
    """Run every deterministic suite at (small) default sizes."""
    sizes = sizes or {}
    rows = []
    rows += isoperimetry_suite(
        random.Random(rng_seed + 1), sizes.get("isoperimetry", 200)
    )
    rows += shift_lemma_suite(random.Random(rng_seed + 2), sizes.get("shifts", 120))
    rows += trip_entropy_sum_suite(random.Random(rng_seed + 3), sizes.get("trip_sum", 40))
    rows += fine_expectation_suite(
        random.Random(rng_seed + 4), sizes.get("fine_shifts", 10), sizes.get("fine_samples", 400)
    )
    rows += reduction_suite(
        random.Random(rng_seed + 5),
        sizes.get("reduction", 60),
        sizes.get("pointmass", 10),
    )
    enum_rows, _ = enumeration_suite()
    rows += enum_rows
    rows += oracle_suite(random.Random(rng_seed + 6), sizes.get("oracle", 25))
    return rows
