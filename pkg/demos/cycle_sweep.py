"""Reference-temperature x EGR sweep over the four shipped demo cycles.

Prints the trend table and the cross-cycle spread at 293.15 K / 20% EGR.
Takes about half a minute on one core; pass a job count to use more.

    python demos/cycle_sweep.py [jobs]
"""

import sys

from mvexergy import STUDY_GRID, EngineModel, run_sweep, trend_report
from mvexergy.sweep import cycle_stats, demo_cycles

jobs = int(sys.argv[1]) if len(sys.argv) > 1 else 1
cycles = demo_cycles()
for c in cycles:
    on = (c.torque > 0).mean()
    print(f"{c.name:<11} {c.duration:.0f} s, engine on {100 * on:.0f}% of the time")

result = run_sweep(cycles, STUDY_GRID, EngineModel.default(), jobs=jobs)
rep = trend_report(result)
print()
print(rep.to_text())

s = cycle_stats(result, 293.15, 0.2)
print("\nacross cycles at 293.15 K, x_EGR 0.2")
for t in s.mean:
    print(f"  {t:<11} {s.mean[t]:6.2f} % +- {s.sd[t]:.2f}")
