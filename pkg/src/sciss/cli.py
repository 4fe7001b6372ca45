"""Command-line interface: fit, simulate, contrast."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .exceptions import ScissError
from .io import (
    parse_dataset,
    read_report,
    report_text,
    write_report,
    write_summary,
)
from .pipeline import fit_methods
from .semisupervised import two_sample_contrast
from .simulate import PRESETS, default_threads, preset_config, run

_METHOD_SLUGS = {
    "sl": "SL",
    "dr": "DR",
    "sciss-aug": "SCISS-Aug",
    "sciss-pos": "SCISS-PoS",
    "intr": "INTR",
    "ensemble": "ES",
    "es": "ES",
}


def _parse_methods(values):
    tags = []
    for value in values:
        for part in value.split(","):
            slug = part.strip().lower()
            if slug not in _METHOD_SLUGS:
                raise ValueError(f"unknown method {part!r}; choose from {sorted(_METHOD_SLUGS)}")
            tag = _METHOD_SLUGS[slug]
            if tag not in tags:
                tags.append(tag)
    return tags


def build_parser():
    parser = argparse.ArgumentParser(prog="sciss",
                                     description="Semi-supervised Ising model estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="estimate an Ising model from a dataset file")
    fit.add_argument("--data", required=True, help="CSV dataset (header y1..yq, x1..xp, w1..wd)")
    fit.add_argument("--method", action="append", required=True,
                     help="method tag (repeatable or comma separated): "
                          "sl, dr, sciss-aug, sciss-pos, intr, ensemble")
    fit.add_argument("--family", default="gaussian",
                     help="surrogate family per node, comma separated "
                          "(gaussian, logistic, poisson)")
    fit.add_argument("--lambda", dest="lam", type=float, default=None,
                     help="ridge level for the augmented model (default n^-3/4)")
    fit.add_argument("--out", default=None,
                     help="directory for report JSON files (default: print only)")

    sim = sub.add_parser("simulate", help="run a replicated synthetic study")
    sim.add_argument("--preset", required=True, choices=sorted(PRESETS),
                     help="study configuration")
    sim.add_argument("--reps", type=int, default=500)
    sim.add_argument("--seed", type=int, default=20240)
    sim.add_argument("--method", action="append", default=None,
                     help="override the preset's methods")
    sim.add_argument("--threads", type=int, default=None,
                     help="worker count (default: SCISS_THREADS or all cores)")
    sim.add_argument("--out", default=None, help="path for the structured summary JSON")

    con = sub.add_parser("contrast", help="two-sample test of one edge across two reports")
    con.add_argument("report_a")
    con.add_argument("report_b")
    con.add_argument("--edge", required=True,
                     help="1-based node pair, e.g. --edge 1,2")
    return parser


def cmd_fit(args) -> int:
    methods = _parse_methods(args.method)
    dataset = parse_dataset(args.data)
    reports = fit_methods(dataset.YL, dataset.XL, dataset.WL, dataset.XU, dataset.WU,
                          methods=methods, families=args.family, lam=args.lam)
    out_dir = None
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
    for tag in methods:
        report = reports[tag]
        print(report_text(report))
        print()
        if out_dir is not None:
            write_report(out_dir / f"report_{tag.lower()}.json", report)
    return 0


def cmd_simulate(args) -> int:
    methods = _parse_methods(args.method) if args.method else None
    if args.reps == 1:
        print("warning: a single replication leaves SE/RE undefined", file=sys.stderr)
    cfg = preset_config(args.preset, replications=args.reps, seed=args.seed, methods=methods)
    summary = run(cfg, threads=args.threads if args.threads else default_threads())
    print(summary.to_text())
    if args.out is not None:
        write_summary(args.out, summary)
    return 0


def cmd_contrast(args) -> int:
    report_a = read_report(args.report_a)
    report_b = read_report(args.report_b)
    j, k = (int(part) for part in args.edge.split(","))
    if j == k:
        raise ValueError("--edge needs two distinct node indices")
    j, k = j - 1, k - 1
    est_a = report_a.theta.pair_coefs[j, k]
    est_b = report_b.theta.pair_coefs[j, k]
    se_a = report_a.se_pairs[j, k]
    se_b = report_b.se_pairs[j, k]
    p = two_sample_contrast(est_a, se_a, est_b, se_b)
    print(f"edge theta_{j + 1}{k + 1}: {report_a.method} {est_a:.4f} (se {se_a:.4f})"
          f" vs {report_b.method} {est_b:.4f} (se {se_b:.4f})")
    print(f"p-value: {p:.6g}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fit":
            return cmd_fit(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        return cmd_contrast(args)
    except ScissError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
