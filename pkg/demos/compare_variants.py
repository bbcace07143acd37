"""
Running a full comparison experiment
====================================

The bench module turns a declarative spec -- instances, variants, run
counts -- into CSV tables and a readable report, with every seed derived
from the spec so reruns are byte-identical.  Variants share training
seeds, so "GPHH vs GPHH-C" is a paired comparison: same starting
populations, different simulators.

This demo uses a deliberately tiny GP budget to finish in a couple of
minutes; the resulting numbers are noisy and only the mechanics matter.
The same spec with the default budget reproduces the headline tables.
"""

import os
import tempfile

from ucarp.bench import ExperimentSpec, run_experiment

spec = ExperimentSpec(
    instances=["gdb1", "gdb2"],
    variants=["PS1", "PS1-C", "GPHH", "GPHH-C"],
    runs=3,
    test_samples=100,
    output_dir=os.path.join(tempfile.mkdtemp(), "demo_results"),
    gp={"population_size": 32, "generations": 6},
)

report = run_experiment(spec, progress=lambda text: print(" ", text))

print("\nper-cell aggregates:")
for row in report.summary:
    std = f" +- {float(row['std']):.2f}" if row["std"] else ""
    print(f"  {row['instance']:6s} {row['variant']:7s} "
          f"{float(row['mean']):8.2f}{std}  ({row['runs']} run(s))")

print("\npairwise win/draw/lose over instances (rank-sum at 5%):")
for row in report.win_draw_lose:
    print(f"  {row['variant_a']:7s} vs {row['variant_b']:7s}: "
          f"{row['wins']}-{row['draws']}-{row['losses']}")

print("\nfiles written:")
for key, path in report.paths.items():
    print(f"  {key}: {path}")
