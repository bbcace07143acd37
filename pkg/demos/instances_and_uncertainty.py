"""
Benchmark instances and what "uncertain" means here
===================================================

Loads a few bundled instances, shows their shape, then draws random
realizations of the demands and traversal costs to show the two ways a
day in the field can deviate from the plan.
"""

import numpy as np

from ucarp.instance import list_benchmarks, load_benchmark, min_vehicles
from ucarp.stochastic import sample_instance

names = list_benchmarks()
print(f"{len(names)} bundled instances, e.g. {names[:4]} ... {names[-2:]}")

# a small one: 12 vertices, every edge is a task
inst = load_benchmark("gdb1")
print(f"\n{inst.name}: {inst.vertices} vertices, {len(inst.edges)} edges, "
      f"{len(inst.tasks)} tasks, capacity {inst.capacity}, "
      f"depot {inst.depot}, fleet {inst.num_vehicles}")

# the fleet size is the smallest that could ever work: total demand over
# capacity, rounded up
total = sum(t.demand for t in inst.tasks)
print(f"total planned demand {total}, so at least "
      f"{min_vehicles(inst)} vehicles are needed")

# Each task's realized demand is normal around its plan with a 20% sigma,
# clamped at zero.  Costs vary the same way; a cost that drops to zero or
# below means the road is impassable that day (astronomically rare with
# sigma = mean/5, but the simulator handles it).
sample = sample_instance(inst, seed=42)
planned = np.array([t.demand for t in inst.tasks])
print("\nplanned demands:  ", planned[:8], "...")
print("realized demands: ", np.round(sample.demands[:8], 2), "...")
print(f"realized/planned spread: {np.std(sample.demands / planned):.3f} "
      f"(sigma/mean is 0.2 by construction)")

# same seed, same day -- reproducibility is what makes paired
# comparisons between policies meaningful
again = sample_instance(inst, seed=42)
assert np.array_equal(again.demands, sample.demands)
assert np.array_equal(again.costs, sample.costs)
print("\nsampling with the same seed reproduces the same day, bit for bit")

# a capacity family: same streets, same demands, tighter and tighter trucks
for letter in "ABCD":
    fam = load_benchmark(f"val4{letter}")
    print(f"val4{letter}: capacity {fam.capacity:3.0f} -> fleet {fam.num_vehicles}")
