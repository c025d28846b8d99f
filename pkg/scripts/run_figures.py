"""Regenerate all four preset sweeps into out/ and print their reports.

Usage: python scripts/run_figures.py [--mc-blocks N] [--only fig3 fig5]
"""
import argparse

from relaysec.cli import main

ap = argparse.ArgumentParser()
ap.add_argument("--mc-blocks", type=int, default=1_000_000)
ap.add_argument("--only", nargs="*", default=["fig3", "fig4", "fig5", "fig6"])
ap.add_argument("--out-dir", default="out")
args = ap.parse_args()

for name in args.only:
    print(f"== {name}")
    rc = main([name, "--mc-blocks", str(args.mc_blocks), "--out", f"{args.out_dir}/{name}.csv"])
    if rc:
        raise SystemExit(rc)
