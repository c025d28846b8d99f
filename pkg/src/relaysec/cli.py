"""Command line: `relaysec sweep|fig3|fig4|fig5|fig6|validate`."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .sweep import (ConfigError, load_config, merge_baseline, preset_specs, report, run_sweep,
                    write_table)
from .validate import run_validate


def _suffixed(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix + out.suffix) if suffix else out


def cmd_sweep(args) -> int:
    try:
        spec = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.mc_blocks is not None:
        spec = spec.replace(mc_blocks=args.mc_blocks)
    if args.seed is not None:
        spec = spec.replace(seed=args.seed)
    out = args.out or spec.output or Path(args.config).with_suffix(".csv")
    rows = run_sweep(spec, out)
    print(f"wrote {out}")
    print(report(rows, spec))
    if args.baseline:
        merged = Path(out).with_name(Path(out).stem + "_merged.csv")
        write_table(merge_baseline(rows, args.baseline), merged)
        print(f"wrote {merged}")
    return 0


def cmd_figure(args) -> int:
    specs = preset_specs(args.command, mc_blocks=args.mc_blocks, seed=args.seed)
    out = Path(args.out or f"{args.command}.csv")
    for suffix, spec in specs.items():
        path = _suffixed(out, suffix)
        rows = run_sweep(spec, path)
        print(f"wrote {path}")
        print(report(rows, spec))
    return 0


def cmd_validate(args) -> int:
    checks, paths = run_validate(args.out or "validate_out", n_blocks=args.mc_blocks,
                                 n_expect=args.n_expect, seed=args.seed)
    bad = 0
    for c, p in zip(checks, paths):
        status = "ok" if not c.violations else "VIOLATED"
        print(f"{c.name:<9} {status:<8} {p}")
        for v in c.violations:
            print(f"    violation: {v}")
        for n in c.notes:
            print(f"    recorded: {n}")
        bad += len(c.violations)
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relaysec", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("sweep", help="run a sweep described by a TOML config")
    sp.add_argument("config")
    sp.add_argument("--out")
    sp.add_argument("--mc-blocks", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--baseline", help="CSV with a 'value' column plus external curves")
    sp.set_defaults(func=cmd_sweep)
    for name in ("fig3", "fig4", "fig5", "fig6"):
        fp = sub.add_parser(name, help=f"preset sweep {name}")
        fp.add_argument("--mc-blocks", type=int, default=1_000_000)
        fp.add_argument("--seed", type=int, default=None)
        fp.add_argument("--out")
        fp.set_defaults(func=cmd_figure)
    vp = sub.add_parser("validate", help="closed forms vs Monte Carlo invariant suite")
    vp.add_argument("--out", help="artifact directory (default validate_out)")
    vp.add_argument("--mc-blocks", type=int, default=200_000)
    vp.add_argument("--n-expect", type=int, default=1_000_000)
    vp.add_argument("--seed", type=int, default=7)
    vp.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
