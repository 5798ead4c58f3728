"""Monte Carlo experiment harness: localization, convergence and gap-scan
runs, audit orchestration, flat-file configuration and versioned CSV output.

Reproducibility contract: trial i uses seed_base + i, results are merged by
trial index, and a rerun with the same configuration yields byte-identical
CSV except for timing columns.  Trials whose truncation certificate fails are
excluded from aggregates but counted in a comment line.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import audits
from .disorder import CouplingField, parse_distribution
from .errors import InvalidConfig
from .groundstate import ground_state_auto
from .interface import construct_shift, origin_flip_height, verify_guarantees
from .lattice import box_radius
from .shifts import is_admissible

SCHEMA_LINE = "# dlab-schema v1"
VOLATILE_COLUMNS = ("time_ms",)


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 3
    lambda_radius: int = 2
    m_start: int = 4
    m_max: int = 8
    nu_par: str = "uniform:8,9"
    nu_perp: str = "uniform:8,9"
    trials: int = 200
    seed: int = 0
    heights_k: int = 6
    radii: tuple = (1, 2, 3)
    out: str = "."
    workers: int = 1
    suite_size: int = 60
    c0: float = 0.0  # concentration-condition constant; 0 disables the report

    def validate(self):
        if self.trials < 1:
            raise InvalidConfig("trials must be >= 1")
        if self.d < 1 or self.lambda_radius < 0 or self.m_max < 1:
            raise InvalidConfig("bad geometry parameters")
        if list(self.radii) != sorted(set(self.radii)):
            raise InvalidConfig("radii must be strictly increasing")
        parse_distribution(self.nu_par)
        parse_distribution(self.nu_perp)
        return self


_INT_KEYS = {"d", "lambda_radius", "m_start", "m_max", "trials", "seed", "heights_k", "workers", "suite_size"}


def parse_config_file(path):
    """Flat key = value text; `#` starts a comment; radii is a comma list."""
    values = {}
    known = {f.name for f in fields(ExperimentConfig)}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidConfig(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in known:
                raise InvalidConfig(f"{path}:{lineno}: unknown key {key!r}")
            if key == "radii":
                values[key] = tuple(int(x) for x in val.split(","))
            elif key in _INT_KEYS:
                values[key] = int(val)
            elif key == "c0":
                values[key] = float(val)
            else:
                values[key] = val
    return ExperimentConfig(**values).validate()


def config_comment(cfg, extra=()):
    parts = [
        f"d={cfg.d}",
        f"lambda_radius={cfg.lambda_radius}",
        f"m_start={cfg.m_start}",
        f"m_max={cfg.m_max}",
        f"nu_par={cfg.nu_par}",
        f"nu_perp={cfg.nu_perp}",
        f"trials={cfg.trials}",
        f"seed={cfg.seed}",
    ]
    parts.extend(extra)
    return "# config " + " ".join(parts)


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def render_csv(subcommand, cfg, header, rows, comments=(), cfg_extra=()):
    lines = [SCHEMA_LINE, f"# subcommand {subcommand}", config_comment(cfg, cfg_extra)]
    lines.extend(comments)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def strip_volatile(csv_text):
    """Drop timing columns so reruns compare byte-identically."""
    out = []
    drop = None
    for line in csv_text.splitlines():
        if line.startswith("#"):
            out.append(line)
            continue
        cells = line.split(",")
        if drop is None:
            drop = [i for i, name in enumerate(cells) if name in VOLATILE_COLUMNS]
        out.append(",".join(c for i, c in enumerate(cells) if i not in drop))
    return "\n".join(out) + "\n"


def wilson_interval(successes, n, z=1.96):
    if n == 0:
        return 0.0, 0.0, 1.0
    p = successes / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return p, max(0.0, center - half), min(1.0, center + half)


def _field_for(cfg, trial):
    return CouplingField(
        cfg.seed + trial,
        parse_distribution(cfg.nu_par),
        parse_distribution(cfg.nu_perp),
        cfg.d,
    )


def _run_pool(worker, args_list, workers):
    if workers <= 1:
        return [worker(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, args_list))


# ------------------------------------------------------------------ localize


@dataclass
class LocalizeTrial:
    trial: int
    seed: int
    energy_scaled: int
    certificate_ok: bool
    m_used: int
    flips: dict  # k -> bool
    time_ms: float


def _localize_trial(packed):
    cfg_tuple, trial = packed
    cfg = ExperimentConfig(**cfg_tuple)
    t0 = time.perf_counter()
    f = _field_for(cfg, trial)
    lam = list(box_radius(cfg.lambda_radius, cfg.d).cells())
    res = ground_state_auto(f, lam, cfg.m_start, cfg.m_max)
    origin = (0,) * cfg.d
    flips = {}
    for k in range(-cfg.heights_k, cfg.heights_k + 1):
        flat = 1 if k >= 1 else -1
        flips[k] = res.config.value(origin, k) != flat
    return LocalizeTrial(
        trial,
        cfg.seed + trial,
        res.energy_scaled,
        res.certificate_ok,
        res.m_used,
        flips,
        (time.perf_counter() - t0) * 1000,
    )


def _cfg_tuple(cfg):
    return {f.name: getattr(cfg, f.name) for f in fields(ExperimentConfig)}


@dataclass
class LocalizeResult:
    records: list
    included: list
    excluded: int
    rows: list
    csv_text: str

    def pooled_flip_fraction(self, k_min):
        if not self.included:
            return 0.0
        hits = sum(
            1
            for r in self.included
            if any(v and abs(k) >= k_min for k, v in r.flips.items())
        )
        return hits / len(self.included)

    def pooled_by_abs_k(self):
        """|k| -> (flips, observations) pooling +k and -k over included trials."""
        out = {}
        n = len(self.included)
        ks = sorted({abs(k) for r in self.included for k in r.flips})
        for a in ks:
            signed = {a, -a}
            flips = sum(
                1 for r in self.included for k in signed if r.flips.get(k, False)
            )
            out[a] = (flips, n * len(signed))
        return out


def run_localize(cfg):
    cfg.validate()
    packed = _cfg_tuple(cfg)
    records = _run_pool(
        _localize_trial, [(packed, i) for i in range(cfg.trials)], cfg.workers
    )
    records.sort(key=lambda r: r.trial)
    included = [r for r in records if r.certificate_ok]
    excluded = len(records) - len(included)
    rows = []
    n = len(included)
    for k in range(-cfg.heights_k, cfg.heights_k + 1):
        flips = sum(1 for r in included if r.flips[k])
        p, lo, hi = wilson_interval(flips, n)
        rows.append((k, flips, n, p, lo, hi))
    csv_text = render_csv(
        "localize",
        cfg,
        ("k", "flips", "trials", "p_hat", "ci_lo", "ci_hi"),
        rows,
        comments=(f"# excluded {excluded} of {cfg.trials}",),
    )
    return LocalizeResult(records, included, excluded, rows, csv_text)


def fit_stretched_exponent(rows, d):
    """Least squares of log p against |k|^((d-2)/(d-1)) on the positive rows;
    returns (amplitude, rate) or None when underdetermined."""
    pts = [(abs(k), p) for (k, flips, n, p, lo, hi) in rows if k != 0 and p > 0]
    if len(pts) < 2:
        return None
    expo = (d - 2) / (d - 1)
    x = np.array([kk**expo for kk, _ in pts])
    y = np.log(np.array([p for _, p in pts]))
    a = np.vstack([np.ones_like(x), -x]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return math.exp(coef[0]), coef[1]


# ------------------------------------------------------------------ converge


@dataclass
class ConvergeTrial:
    trial: int
    seed: int
    certificate_ok: bool
    stab_index: int  # index into radii; len(radii)-1 means "not stabilized"
    stabilized: bool
    time_ms: float


def _converge_trial(packed):
    cfg_tuple, trial = packed
    cfg = ExperimentConfig(**cfg_tuple)
    t0 = time.perf_counter()
    f = _field_for(cfg, trial)
    base_sites = list(box_radius(cfg.radii[0], cfg.d).cells())
    results = []
    for radius in cfg.radii:
        lam = list(box_radius(radius, cfg.d).cells())
        results.append(ground_state_auto(f, lam, cfg.m_start, cfg.m_max))
    cert_ok = all(r.certificate_ok for r in results)
    kmax = max(r.m_used for r in results) + 1
    restrictions = []
    for r in results:
        restrictions.append(
            tuple(
                tuple(r.config.value(v, k) for k in range(-kmax, kmax + 1))
                for v in base_sites
            )
        )
    last_change = -1
    for i in range(len(restrictions) - 1):
        if restrictions[i] != restrictions[i + 1]:
            last_change = i
    stab_index = last_change + 1
    stabilized = stab_index < len(cfg.radii) - 1 or len(cfg.radii) == 1
    return ConvergeTrial(
        trial,
        cfg.seed + trial,
        cert_ok,
        stab_index,
        stabilized,
        (time.perf_counter() - t0) * 1000,
    )


@dataclass
class ConvergeResult:
    records: list
    included: list
    excluded: int
    rows: list
    csv_text: str

    def stabilized_fraction(self):
        if not self.included:
            return 0.0
        return sum(1 for r in self.included if r.stabilized) / len(self.included)


def run_converge(cfg):
    cfg.validate()
    if not cfg.radii:
        raise InvalidConfig("radii must be nonempty")
    packed = _cfg_tuple(cfg)
    records = _run_pool(
        _converge_trial, [(packed, i) for i in range(cfg.trials)], cfg.workers
    )
    records.sort(key=lambda r: r.trial)
    included = [r for r in records if r.certificate_ok]
    excluded = len(records) - len(included)
    rows = []
    for idx, radius in enumerate(cfg.radii):
        count = sum(
            1 for r in included if r.stabilized and r.stab_index == idx
        )
        rows.append((radius, count))
    rows.append(("none", sum(1 for r in included if not r.stabilized)))
    csv_text = render_csv(
        "converge",
        cfg,
        ("stab_radius", "count"),
        rows,
        comments=(f"# excluded {excluded} of {cfg.trials}",),
        cfg_extra=(f"radii={','.join(map(str, cfg.radii))}",),
    )
    return ConvergeResult(records, included, excluded, rows, csv_text)


# ------------------------------------------------------------------ gap scan


@dataclass
class GapScanTrial:
    trial: int
    seed: int
    energy_scaled: int
    certificate_ok: bool
    gap: float
    tv: int
    trip_entropy: float
    trip_exact: bool
    admissible: bool
    guarantees_ok: bool
    flip_height: int
    time_ms: float


def _gap_scan_trial(packed):
    cfg_tuple, trial = packed
    cfg = ExperimentConfig(**cfg_tuple)
    t0 = time.perf_counter()
    f = _field_for(cfg, trial)
    lam = list(box_radius(cfg.lambda_radius, cfg.d).cells())
    res = ground_state_auto(f, lam, cfg.m_start, cfg.m_max)
    origin = (0,) * cfg.d
    cs = construct_shift(res.config, [origin], f, lam, res.m_used)
    rep = verify_guarantees(cs, res.config, [origin], f)
    adm = (
        is_admissible(
            cs.tau,
            cs.guarantee_lhs,
            rep.quantities["alpha_par"],
            rep.quantities["alpha_perp"],
        )
        if not cs.tau.is_zero()
        else True
    )
    return GapScanTrial(
        trial,
        cfg.seed + trial,
        res.energy_scaled,
        res.certificate_ok,
        cs.guarantee_lhs,
        cs.tv_tau,
        rep.quantities["trip_entropy"],
        rep.quantities["trip_entropy_exact"],
        adm,
        rep.ok,
        origin_flip_height(res.config),
        (time.perf_counter() - t0) * 1000,
    )


@dataclass
class GapScanResult:
    records: list
    included: list
    excluded: int
    rows: list
    csv_text: str

    def gap_tail(self, thresholds):
        n = len(self.included)
        if n == 0:
            return [(t, 0.0) for t in thresholds]
        return [
            (t, sum(1 for r in self.included if r.gap >= t) / n) for t in thresholds
        ]


def run_gap_scan(cfg):
    cfg.validate()
    packed = _cfg_tuple(cfg)
    records = _run_pool(
        _gap_scan_trial, [(packed, i) for i in range(cfg.trials)], cfg.workers
    )
    records.sort(key=lambda r: r.trial)
    included = [r for r in records if r.certificate_ok]
    excluded = len(records) - len(included)
    rows = [
        (
            r.trial,
            r.seed,
            r.energy_scaled,
            r.gap,
            r.tv,
            r.trip_entropy,
            int(r.trip_exact),
            int(r.admissible),
            int(r.guarantees_ok),
            r.flip_height,
            r.time_ms,
        )
        for r in records
    ]
    csv_text = render_csv(
        "gap-scan",
        cfg,
        (
            "trial",
            "seed",
            "energy_scaled",
            "gap",
            "tv",
            "trip_entropy",
            "trip_exact",
            "admissible",
            "guarantees_ok",
            "flip_height",
            "time_ms",
        ),
        rows,
        comments=(f"# excluded {excluded} of {cfg.trials}",),
    )
    return GapScanResult(records, included, excluded, rows, csv_text)


# -------------------------------------------------------------------- audits


@dataclass
class AuditsResult:
    rows: list
    csv_text: str
    ok: bool


def run_audits(cfg, suites=None):
    cfg.validate()
    size = cfg.suite_size
    sizes = {
        "isoperimetry": size,
        "shifts": size,
        "trip_sum": max(10, size // 4),
        "fine_shifts": max(4, size // 10),
        "fine_samples": 400,
        "reduction": size,
        "pointmass": max(5, size // 10),
        "oracle": max(10, size // 4),
    }
    if suites is None:
        rows = audits.all_suites(sizes, rng_seed=cfg.seed)
    else:
        rows = []
        mapping = {
            "isoperimetry": lambda: audits.isoperimetry_suite(n_instances=sizes["isoperimetry"]),
            "shifts": lambda: audits.shift_lemma_suite(n_shifts=sizes["shifts"]),
            "graining": lambda: audits.fine_expectation_suite(
                n_shifts=sizes["fine_shifts"], samples=sizes["fine_samples"]
            ),
            "reduction": lambda: audits.reduction_suite(
                n_configs=sizes["reduction"], n_pointmass=sizes["pointmass"]
            ),
            "enumeration": lambda: audits.enumeration_suite()[0],
            "oracle": lambda: audits.oracle_suite(n_instances=sizes["oracle"]),
        }
        for name in suites:
            if name not in mapping:
                raise InvalidConfig(f"unknown suite {name!r}")
            rows.extend(mapping[name]())
    table = [
        (r.suite, r.check, r.instances, r.violations, r.extreme, int(r.passed))
        for r in rows
    ]
    csv_text = render_csv(
        "audits",
        cfg,
        ("suite", "check", "instances", "violations", "extreme", "passed"),
        table,
    )
    return AuditsResult(rows, csv_text, all(r.passed for r in rows))


def run_graining_audit(cfg):
    """Per-shift graining audit: one row per (shift, check)."""
    import random as _random

    from .graining import audit_grainings

    cfg.validate()
    rng = _random.Random(cfg.seed)
    rows = []
    ok = True
    for i in range(cfg.trials):
        d = 2 if i % 2 == 0 else 3
        tau = audits.random_shift(rng, d, tv_max=40)
        for chk in audit_grainings(tau, rng=_random.Random(cfg.seed + i)):
            rows.append((i, chk.name, chk.lhs, chk.rhs, int(chk.passed)))
            ok = ok and chk.passed
    csv_text = render_csv(
        "graining-audit",
        cfg,
        ("shift_id", "check_name", "lhs", "rhs", "pass"),
        rows,
    )
    return AuditsResult(rows, csv_text, ok)
