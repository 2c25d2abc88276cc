"""Command line entry points.

Subcommands: run <config>, verify, capacity <domain> <p>,
fatness <domain> <p>, hardy <domain> <p>, content <domain> <t> <R>.
Config files are JSON; the output directory can be overridden with
--out or the HARDYLAB_OUT environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .capacity import CondenserProblem, solve_capacity
from .content import estimate_content
from .fatness import fatness_profile, measure_density_check
from .geometry import Ball, build_domain
from .harness import ExperimentConfig, density_sweep, run, verify
from .hardy import (
    family_integral_sup,
    family_pointwise_sup,
    fractional_pointwise_check,
    test_family,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MODULE = 3


def _domain_from_args(args):
    spec = {"family": args.domain, "resolution": args.resolution}
    for item in args.param or []:
        key, _, value = item.partition("=")
        spec[key] = json.loads(value)
    return build_domain(spec)


def _out_dir(args):
    return args.out or os.environ.get("HARDYLAB_OUT", "hardylab_out")


def cmd_run(args):
    try:
        with open(args.config) as fh:
            config = ExperimentConfig.from_json(fh.read())
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        config.output_dir = args.out
    elif "HARDYLAB_OUT" in os.environ:
        config.output_dir = os.environ["HARDYLAB_OUT"]
    if args.seed is not None:
        config.seed = args.seed
    try:
        report, files = run(config)
    except Exception as exc:
        print(f"module error: {exc}", file=sys.stderr)
        return EXIT_MODULE
    print(f"wrote {len(files)} files to {config.output_dir}")
    for key, verdict in sorted(report.verdicts.items()):
        print(f"  {key}: capacity_density={verdict['capacity_density']} "
              f"pointwise={verdict['pointwise_hardy']}")
    if report.anomalies:
        for item in report.anomalies:
            print(f"anomaly: {item}", file=sys.stderr)
        return EXIT_MODULE
    return EXIT_OK


def cmd_verify(args):
    failures = verify(stream=sys.stdout)
    if failures:
        for name, message in failures:
            print(f"FAILED {name}: {message}", file=sys.stderr)
        return 1
    return EXIT_OK


def cmd_capacity(args):
    domain = _domain_from_args(args)
    comp = domain.complement
    fields = domain.distances()
    dmax = float(fields.d.max())
    center_idx = np.unravel_index(int(np.argmax(fields.d)), domain.counts)
    center = domain.cell_center(center_idx)
    r = min(dmax / 2.0, 0.25)
    plate = Ball(center, r, closed=True).cells(domain) & ~comp
    window = Ball(center, 2.0 * r).cells(domain)
    result = solve_capacity(CondenserProblem(domain, plate, window, args.p))
    payload = result.to_json_dict()
    payload.update({"domain": domain.name, "plate_radius": r, "center": list(center)})
    print(json.dumps(payload, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_fatness(args):
    domain = _domain_from_args(args)
    profile = fatness_profile(domain, args.p, max_centers=args.centers)
    payload = profile.to_json_dict()
    payload["measure_density"] = measure_density_check(
        domain, max_centers=args.centers)
    out_dir = _out_dir(args)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"fatness_{args.domain}_p{args.p:g}.csv")
    with open(path, "w", newline="") as fh:
        fh.write(profile.to_csv())
    payload["csv"] = path
    print(json.dumps(payload, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_hardy(args):
    domain = _domain_from_args(args)
    family = test_family(domain, args.p, count=args.count, seed=args.seed or 0)
    pw, flagged = family_pointwise_sup(domain, family, args.p, L=args.L,
                                       use_boundary_distance=args.boundary_distance)
    payload = {
        "domain": domain.name,
        "exponent": args.p,
        "dilatation": args.L,
        "seed": args.seed or 0,
        "pointwise_constant": pw,
        "zero_denominator_cells": flagged,
        "integral_quotient_sup": family_integral_sup(domain, family, args.p),
    }
    if args.alpha is not None:
        payload["fractional_constant"] = max(
            fractional_pointwise_check(domain, u, args.p, args.alpha).sup
            for u in family)
        payload["alpha"] = args.alpha
    print(json.dumps(payload, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_content(args):
    domain = _domain_from_args(args)
    boundary = domain.boundary_mask()
    est = estimate_content(domain, boundary, args.t, args.R,
                           label=f"boundary of {domain.name}")
    payload = est.to_json_dict()
    out_dir = _out_dir(args)
    os.makedirs(out_dir, exist_ok=True)
    rows = density_sweep({"family": args.domain}, args.resolution,
                         [0.5, 1.0, 1.5], max_samples=12)
    path = os.path.join(out_dir, f"density_{args.domain}.csv")
    import csv as _csv

    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["domain", "resolution", "q", "floor"])
        writer.writerows(rows)
    payload["density_csv"] = path
    print(json.dumps(payload, sort_keys=True, indent=2))
    return EXIT_OK


def make_parser():
    parser = argparse.ArgumentParser(prog="hardylab")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="full pipeline from a JSON config")
    p_run.add_argument("config")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="invariant suite on tiny instances")
    p_verify.set_defaults(func=cmd_verify)

    def common(p):
        p.add_argument("--resolution", type=int, default=64)
        p.add_argument("--param", action="append",
                       help="extra domain parameter key=json, repeatable")

    p_cap = sub.add_parser("capacity", help="solve an interior condenser")
    p_cap.add_argument("domain")
    p_cap.add_argument("p", type=float)
    common(p_cap)
    p_cap.set_defaults(func=cmd_capacity)

    p_fat = sub.add_parser("fatness", help="capacity density profile")
    p_fat.add_argument("domain")
    p_fat.add_argument("p", type=float)
    p_fat.add_argument("--centers", type=int, default=24)
    common(p_fat)
    p_fat.set_defaults(func=cmd_fatness)

    p_hardy = sub.add_parser("hardy", help="pointwise and integral constants")
    p_hardy.add_argument("domain")
    p_hardy.add_argument("p", type=float)
    p_hardy.add_argument("--L", type=float, default=2.0)
    p_hardy.add_argument("--alpha", type=float, default=None)
    p_hardy.add_argument("--boundary-distance", action="store_true")
    p_hardy.add_argument("--count", type=int, default=12)
    common(p_hardy)
    p_hardy.set_defaults(func=cmd_hardy)

    p_content = sub.add_parser("content", help="boundary content estimate")
    p_content.add_argument("domain")
    p_content.add_argument("t", type=float)
    p_content.add_argument("R", type=float)
    common(p_content)
    p_content.set_defaults(func=cmd_content)
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
