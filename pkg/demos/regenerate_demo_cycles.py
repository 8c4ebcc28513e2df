"""Rewrite the shipped demo traces from their generator seeds.

The traces in src/mvexergy/data/cycles are piecewise-constant set-point
sequences; this script is how they were produced.

    python demos/regenerate_demo_cycles.py
"""

from mvexergy.sweep import demo_cycle_dir, save_trace, synthetic_cycle

SEEDS = {"high_speed": 56, "low_speed": 46, "mixed": 45, "urban": 7}

for name, seed in SEEDS.items():
    trace = synthetic_cycle(name, seed=seed)
    path = demo_cycle_dir() / f"{name}.csv"
    save_trace(trace, path)
    print(f"{path}: {len(trace)} samples, engine on {100 * (trace.torque > 0).mean():.0f}%")
