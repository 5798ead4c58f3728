"""Command line entry point.

Subcommands: localize, converge, gap-scan, graining-audit, audits, solve.
Each takes a flat key=value config file; --seed and --out override the file.
Exit codes: 0 all checks pass, 1 a deterministic check failed, 2 bad config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .disorder import parse_distribution, CouplingField
from .errors import DlabError, InvalidConfig
from .experiments import (
    ExperimentConfig,
    fit_stretched_exponent,
    parse_config_file,
    run_audits,
    run_converge,
    run_gap_scan,
    run_graining_audit,
    run_localize,
)
from .groundstate import dump_instance, ground_state_auto
from .lattice import box_radius


def _load_config(args):
    cfg = parse_config_file(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    return cfg.validate()


def _write(cfg, name, text):
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def main(argv=None):
    parser = argparse.ArgumentParser(prog="dlab")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("localize", "converge", "gap-scan", "graining-audit", "audits", "solve"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        if name == "solve":
            p.add_argument("--dump-capacities", action="store_true")
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        return _dispatch(args, cfg)
    except InvalidConfig as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DlabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def _dispatch(args, cfg):
    cmd = args.command
    if cmd == "localize":
        res = run_localize(cfg)
        path = _write(cfg, "localize.csv", res.csv_text)
        fit = fit_stretched_exponent(res.rows, cfg.d)
        print(f"wrote {path} ({res.excluded} of {cfg.trials} trials excluded)")
        if fit:
            expo = (cfg.d - 2) / (cfg.d - 1)
            print(
                f"fitted decay p ~ {fit[0]:.4g} * exp(-{fit[1]:.4g} * |k|^{expo:.3g})"
                " (reported, not asserted)"
            )
        return 0
    if cmd == "converge":
        res = run_converge(cfg)
        path = _write(cfg, "converge.csv", res.csv_text)
        print(
            f"wrote {path} (stabilized fraction {res.stabilized_fraction():.3f}, "
            f"{res.excluded} excluded)"
        )
        return 0
    if cmd == "gap-scan":
        res = run_gap_scan(cfg)
        path = _write(cfg, "gap_scan.csv", res.csv_text)
        print(f"wrote {path} ({res.excluded} of {cfg.trials} trials excluded)")
        return 0
    if cmd == "graining-audit":
        res = run_graining_audit(cfg)
        path = _write(cfg, "graining_audit.csv", res.csv_text)
        print(f"wrote {path} ({'ok' if res.ok else 'VIOLATIONS'})")
        return 0 if res.ok else 1
    if cmd == "audits":
        res = run_audits(cfg)
        path = _write(cfg, "audits.csv", res.csv_text)
        for row in res.rows:
            status = "pass" if row.passed else "FAIL"
            print(f"[{status}] {row.suite}/{row.check} ({row.instances} instances)")
        print(f"wrote {path}")
        return 0 if res.ok else 1
    if cmd == "solve":
        f = CouplingField(
            cfg.seed,
            parse_distribution(cfg.nu_par),
            parse_distribution(cfg.nu_perp),
            cfg.d,
        )
        lam = list(box_radius(cfg.lambda_radius, cfg.d).cells())
        res = ground_state_auto(f, lam, cfg.m_start, cfg.m_max)
        from .interface import construct_shift, interface_dump

        payload = dump_instance(f, lam, res.m_used, include_capacities=args.dump_capacities)
        payload["energy_scaled"] = res.energy_scaled
        payload["energy"] = res.energy
        payload["certificate_ok"] = res.certificate_ok
        origin = (0,) * cfg.d
        cs = construct_shift(res.config, [origin], f, lam, res.m_used)
        payload["interface"] = interface_dump(res.config, cs)
        if cfg.c0 > 0:
            from .disorder import check_condition

            rep = check_condition(f.nu_par, f.nu_perp, cfg.d, cfg.c0)
            payload["concentration"] = {
                "kappa": rep.kappa,
                "lhs": rep.lhs,
                "rhs": rep.rhs,
                "satisfied": rep.satisfied,
                "c0": rep.c0,
            }
            print(
                f"concentration condition at c0={cfg.c0:g}: "
                f"kappa={rep.kappa:.6g}, lhs={rep.lhs:.6g} "
                f"{'<=' if rep.satisfied else '>'} rhs={rep.rhs:.6g}"
            )
        path = _write(cfg, "solve.json", json.dumps(payload, indent=2, sort_keys=True))
        print(
            f"energy {res.energy:.6f} (scaled {res.energy_scaled}), "
            f"certificate_ok={res.certificate_ok}, m={res.m_used}; wrote {path}"
        )
        return 0
    raise InvalidConfig(f"unknown command {cmd!r}")


if __name__ == "__main__":
    sys.exit(main())
