"""Figure rendering from experiment CSVs.

Plots are deterministic: fixed figure geometry, Agg backend, inputs sorted
before drawing, no timestamps.  The localization plot shows the empirical
flip probability against height with its confidence band and a fitted
stretched-exponential reference; the convergence plot shows the histogram of
stabilization radii with the empirical survival curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import SchemaMismatch, read_table

FIGSIZE = (6.4, 4.2)
DPI = 110

LOCALIZE_COLUMNS = ("k", "flips", "trials", "p_hat", "ci_lo", "ci_hi")
CONVERGE_COLUMNS = ("stab_radius", "count")


@dataclass
class PlotJob:
    input_path: str
    output_path: str
    logy: bool = True
    ref_exponent: str = "auto"  # "auto", "none", or a number as text


def _wilson(successes, n, z=1.96):
    if n == 0:
        return 0.0, 0.0, 1.0
    p = successes / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return p, max(0.0, center - half), min(1.0, center + half)


def _pool_by_abs_k(rows):
    agg = {}
    for r in rows:
        k = abs(int(r["k"]))
        flips, trials = agg.get(k, (0, 0))
        agg[k] = (flips + int(r["flips"]), trials + int(r["trials"]))
    out = []
    for k in sorted(agg):
        flips, n = agg[k]
        p, lo, hi = _wilson(flips, n)
        out.append((k, p, lo, hi))
    return out


def fit_stretched(points, exponent=None):
    """Least-squares fit of p = a*exp(-b*k^q) on log scale over points with
    p > 0 and k > 0.  With `exponent` fixed only (a, b) are fitted; otherwise
    q is found by scanning a fine grid with the linear fit nested inside.
    Returns (a, b, q, residual) or None when underdetermined."""
    pts = [(k, p) for (k, p, *_rest) in points if k > 0 and p > 0]
    need = 2 if exponent is not None else 3
    if len(pts) < need:
        return None
    ks = np.array([k for k, _ in pts], dtype=float)
    ys = np.log(np.array([p for _, p in pts], dtype=float))

    def linear_fit(q):
        x = ks**q
        a_mat = np.vstack([np.ones_like(x), -x]).T
        coef, res, *_ = np.linalg.lstsq(a_mat, ys, rcond=None)
        resid = float(np.sum((a_mat @ coef - ys) ** 2))
        return coef, resid

    if exponent is not None:
        coef, resid = linear_fit(exponent)
        return math.exp(coef[0]), coef[1], exponent, resid
    best = None
    for q in np.arange(0.05, 3.0001, 0.0025):
        coef, resid = linear_fit(q)
        if best is None or resid < best[3] - 1e-15:
            best = (math.exp(coef[0]), coef[1], float(q), resid)
    return best


def plot_localization(job):
    """Render the localization decay figure; returns fit info (or None) and
    a list of warnings."""
    table = read_table(
        job.input_path, expect_subcommand="localize", expect_columns=LOCALIZE_COLUMNS
    )
    pooled = _pool_by_abs_k(table.rows)
    warnings = []
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    ks = [k for k, *_ in pooled]
    ps = [p for _, p, *_ in pooled]
    los = [lo for *_, lo, _hi in pooled]
    his = [hi for *_, hi in pooled]
    ax.fill_between(ks, los, his, alpha=0.25, color="tab:blue", label="95% band")
    ax.plot(ks, ps, "o-", color="tab:blue", label="empirical flip probability")
    fit = None
    if job.ref_exponent != "none":
        exponent = None
        if job.ref_exponent != "auto":
            exponent = float(job.ref_exponent)
        else:
            d = table.config_value("d")
            if d is not None and int(d) > 2:
                exponent = (int(d) - 2) / (int(d) - 1)
        fit = fit_stretched(pooled, exponent=exponent)
        if fit is None:
            warnings.append("not enough positive rows for a reference fit")
        else:
            a, b, q, _ = fit
            grid = np.linspace(max(min(ks), 1e-9), max(ks) if max(ks) > 0 else 1, 200)
            ax.plot(
                grid,
                a * np.exp(-b * grid**q),
                "--",
                color="tab:red",
                label=f"fit a*exp(-b*k^{q:.3g})",
            )
    if job.logy:
        ax.set_yscale("log")
        floor = min((p for p in ps if p > 0), default=1e-3)
        ax.set_ylim(bottom=max(floor * 0.1, 1e-6))
    ax.set_xlabel("|k|")
    ax.set_ylabel("flip probability")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(job.output_path, metadata={"Software": "dlab-plot"})
    plt.close(fig)
    return fit, warnings


def plot_convergence(job):
    """Render the stabilization-radius histogram and survival curve."""
    table = read_table(
        job.input_path, expect_subcommand="converge", expect_columns=CONVERGE_COLUMNS
    )
    finite = []
    unstable = 0
    for r in sorted(table.rows, key=lambda r: r["stab_radius"]):
        if r["stab_radius"] == "none":
            unstable += int(r["count"])
        else:
            finite.append((int(r["stab_radius"]), int(r["count"])))
    finite.sort()
    total = sum(c for _, c in finite) + unstable
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=FIGSIZE, dpi=DPI)
    labels = [str(r) for r, _ in finite] + (["none"] if unstable else [])
    counts = [c for _, c in finite] + ([unstable] if unstable else [])
    ax1.bar(range(len(counts)), counts, color="tab:green")
    ax1.set_xticks(range(len(counts)))
    ax1.set_xticklabels(labels)
    ax1.set_xlabel("stabilization radius")
    ax1.set_ylabel("trials")
    if total:
        radii = [r for r, _ in finite]
        surv = []
        remaining = total
        for _, c in finite:
            remaining -= c
            surv.append(remaining / total)
        ax2.step(radii, surv, where="post", color="tab:green")
        ax2.set_ylim(-0.02, 1.02)
    ax2.set_xlabel("radius")
    ax2.set_ylabel("fraction not yet stabilized")
    fig.tight_layout()
    fig.savefig(job.output_path, metadata={"Software": "dlab-plot"})
    plt.close(fig)
    return total, unstable
