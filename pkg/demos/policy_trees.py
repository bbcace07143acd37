"""
Routing policies are arithmetic over thirteen decision features
===============================================================

A policy is an expression tree; at every decision point it is evaluated
once per candidate task and the smallest value wins.  The five manual
baselines (PS1..PS5) are tiny trees over the same features the evolved
policies use.
"""

import numpy as np

from ucarp.instance import load_benchmark
from ucarp.policy import (FEATURE_NAMES, MANUAL_POLICIES, named_policy,
                          parse_policy, serialize_policy, tree_depth, tree_size)
from ucarp.simulator import SimConfig, construct_solution, total_cost
from ucarp.stochastic import sample_instance

print("features a policy can see at a decision point:")
for name in FEATURE_NAMES:
    print("  ", name)

print("\nthe manual baselines:")
for name, tree in MANUAL_POLICIES.items():
    print(f"  {name}: {serialize_policy(tree)}   "
          f"(size {tree_size(tree)}, depth {tree_depth(tree)})")

# round-trip: the printable form parses back to the identical tree
ps5 = MANUAL_POLICIES["PS5"]
assert parse_policy(serialize_policy(ps5)) == ps5
print("\nserialize -> parse round-trips exactly")

# you can write your own policy as a string; this one chases the largest
# remaining demand, with a mild preference for nearby tasks
mine = named_policy("(- (* 0.001 CFH) DEM)")
print("custom policy:", serialize_policy(mine))

# score everything on a handful of common random days
inst = load_benchmark("gdb2")
config = SimConfig(collab_route_failure=True, collab_refill=True)
samples = [sample_instance(inst, seed) for seed in range(300, 330)]
print(f"\nmean cost over {len(samples)} sampled days of {inst.name}:")
for name in ["PS1", "PS2", "PS3", "PS4", "PS5", "custom"]:
    tree = mine if name == "custom" else MANUAL_POLICIES[name]
    costs = [total_cost(construct_solution(inst, s, tree, config), s)
             for s in samples]
    print(f"  {name:6s} {np.mean(costs):8.2f}  (std {np.std(costs):6.2f})")
