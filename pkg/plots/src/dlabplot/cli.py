"""dlab-plot <kind> --in file.csv --out fig.png [--logy/--no-logy]
[--ref-exponent auto|none|VALUE]"""

from __future__ import annotations

import argparse
import sys

from .io import SchemaMismatch
from .render import PlotJob, plot_convergence, plot_localization


def main(argv=None):
    parser = argparse.ArgumentParser(prog="dlab-plot")
    parser.add_argument("kind", choices=["localization", "convergence"])
    parser.add_argument("--in", dest="input_path", required=True)
    parser.add_argument("--out", dest="output_path", required=True)
    parser.add_argument("--logy", dest="logy", action="store_true", default=True)
    parser.add_argument("--no-logy", dest="logy", action="store_false")
    parser.add_argument("--ref-exponent", default="auto")
    args = parser.parse_args(argv)
    job = PlotJob(args.input_path, args.output_path, args.logy, args.ref_exponent)
    try:
        if args.kind == "localization":
            fit, warnings = plot_localization(job)
            for w in warnings:
                print(f"warning: {w}", file=sys.stderr)
            if fit:
                a, b, q, _ = fit
                print(f"reference fit: {a:.4g} * exp(-{b:.4g} * k^{q:.4g})")
        else:
            total, unstable = plot_convergence(job)
            print(f"plotted {total} trials ({unstable} not stabilized)")
    except SchemaMismatch as e:
        print(f"schema mismatch: {e}", file=sys.stderr)
        return 2
    print(f"wrote {args.output_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
