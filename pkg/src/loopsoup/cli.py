"""Command line entry point.

Exit codes: 0 when every graded verdict passes, 1 on a statistical
failure, 2 on a usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .experiments import (EXPERIMENTS, ConfigError, ExperimentConfig, config_from_mapping,
                          parse_config_text, run_experiment)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="loopsoup", description="Random-walk loop soup experiments.")
    p.add_argument("experiment", nargs="?", choices=EXPERIMENTS)
    p.add_argument("--config", help="key = value file; command-line flags override it")
    p.add_argument("--graph", help="square, perturbed, g_ab, g_abc, grid2x2 or a graph file")
    p.add_argument("--domain", help="disk, disk:R, square, rectangle:x0,y0,x1,y1, polygon:...")
    p.add_argument("--delta", action="append",
                   help="mesh size such as 1/64; repeat or comma-separate for a grid")
    p.add_argument("--eps", type=float)
    p.add_argument("--radius", type=float, help="greedy radius r (default from eps and j0)")
    p.add_argument("--j0", type=float)
    p.add_argument("--branches", type=int)
    p.add_argument("--K", help="comma-separated iteration thresholds")
    p.add_argument("--replicas", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--check", help="greedy: coupling or error")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="experiment parameter, e.g. --set eta=1e-3")
    p.add_argument("--out", help="output stem; writes .jsonl, .csv and .timing.json")
    p.add_argument("--quiet", action="store_true")
    return p


def _mapping(args) -> dict:
    m = {}
    if args.config:
        try:
            with open(args.config) as fh:
                m.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    if args.experiment:
        m["experiment"] = args.experiment
    for key in ("graph", "domain", "eps", "radius", "j0", "branches", "K", "replicas", "seed",
                "workers", "out", "check"):
        v = getattr(args, key)
        if v is not None:
            m[key] = v
    if args.delta:
        m["delta"] = ",".join(args.delta)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        m[k.strip()] = v.strip()
    return m


def _print(rec) -> None:
    cfg = rec.config
    print(f"experiment {cfg['experiment']}  seed {cfg['seed']}  replicas {cfg['replicas']}")
    if cfg["experiment"] == "oracle":
        agg = rec.aggregate
        print(f"total mass {agg['total_mass']:.6f}")
        w = max([len("loop")] + [len(r["loop"]) for r in rec.replicas]) + 2
        print(f"{'loop':<{w}}{'len':>5}{'mult':>6}{'mass':>16}")
        for r in rec.replicas:
            print(f"{r['loop']:<{w}}{r['length']:>5}{r['multiplicity']:>6}{r['mass']:>16.10g}")
        print(f"enumerated {agg['enumerated_mass']:.10f}  deficit {agg['deficit']:.3g}  "
              f"tail bound {agg['tail_bound']:.3g}")
    else:
        for row in rec.rows:
            print("  " + "  ".join(f"{k}={_fmt(v)}" for k, v in row.items()
                                   if not isinstance(v, (list, dict))))
    for note in rec.notes:
        print(f"note: {note}")
    for name, v in rec.verdicts.items():
        print(f"{'PASS' if v else 'UNGRADED' if v is None else 'FAIL'}  {name}")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        m = _mapping(args)
        if "experiment" not in m:
            parser.print_usage(sys.stderr)
            print("loopsoup: error: an experiment name is required", file=sys.stderr)
            return EXIT_USAGE
        cfg = config_from_mapping(m)
        rec = run_experiment(cfg)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"loopsoup: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not args.quiet:
        _print(rec)
    if cfg.out:
        paths = rec.write(cfg.out)
        if not args.quiet:
            print("wrote " + json.dumps(paths))
    return EXIT_PASS if rec.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
