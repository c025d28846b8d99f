"""Locate the energy-harvesting time fraction that maximizes ESSR per scenario.

Compares the Monte Carlo argmax with the closed-form lower-bound argmax and
with the reference optima 0.63 / 0.36 / 0.14.
"""
import argparse

import numpy as np

from relaysec.analysis import essr_with_outage
from relaysec.montecarlo import mc_essr_many
from relaysec.system import Scenario, SystemParams, derive_link_stats

REFERENCE = {Scenario.WOJ: 0.63, Scenario.FJ: 0.36, Scenario.GNJ: 0.14}

ap = argparse.ArgumentParser()
ap.add_argument("--mc-blocks", type=int, default=1_000_000)
ap.add_argument("--step", type=float, default=0.02)
ap.add_argument("--seed", type=int, default=50)
args = ap.parse_args()

grid = np.round(np.arange(args.step, 1.0 - 1e-9, args.step), 6)
mc = {sc: [] for sc in Scenario}
lb = {sc: [] for sc in Scenario}
for a in grid:
    p = SystemParams(alpha=float(a))
    est = mc_essr_many(list(Scenario), p, args.mc_blocks, seed=args.seed)
    ls = derive_link_stats(p)
    for sc in Scenario:
        mc[sc].append(est[sc].mean)
        lb[sc].append(essr_with_outage(sc, ls).value)

print(f"{'scenario':8s} {'MC argmax':>10s} {'MC peak':>9s} {'LB argmax':>10s} {'reference':>10s}")
for sc in Scenario:
    i, j = int(np.argmax(mc[sc])), int(np.argmax(lb[sc]))
    print(f"{sc.value:8s} {grid[i]:10.2f} {mc[sc][i]:9.4f} {grid[j]:10.2f} {REFERENCE[sc]:10.2f}")
