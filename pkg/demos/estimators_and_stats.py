"""
Remaining-demand estimates and the statistics behind the tables
===============================================================

Two smaller pieces that the headline experiments lean on.

First: when a vehicle partially serves a task, how much demand is left?
The realized total is unknown until the task is finished, so the
simulator works with an estimate.  The "truncate" estimator is the
conditional mean of the normal demand model given what the partial
service revealed; "actual" is the clairvoyant value, useful as an upper
bound on what better information could buy.

Second: the exact-when-small Wilcoxon rank-sum test used for the
win/draw/lose tables.
"""

import numpy as np

from ucarp.bench import compare_runs, wilcoxon_rank_sum
from ucarp.stochastic import truncated_normal_excess

# a task planned at 10 units; a vehicle poured in 11 and still was short.
# the demand model says N(10, 2) -- conditional on exceeding 11, how much
# more should the next vehicle expect to carry?
mean, sigma, poured = 10.0, 2.0, 11.0
excess = truncated_normal_excess(mean, sigma, poured)
print(f"planned {mean}, already served {poured}: "
      f"expect {excess:.3f} more units (not {mean - poured})")

# the estimate reacts to how surprising the shortfall is
for poured in (10.0, 12.0, 14.0, 16.0):
    print(f"  served {poured:4.1f} -> expected remainder "
          f"{truncated_normal_excess(mean, sigma, poured):.3f}")

# deep in the tail the closed form stays finite and positive, where a
# naive pdf/cdf ratio would have returned 0/0
print(f"  served 60.0 -> {truncated_normal_excess(mean, sigma, 60.0):.6f}")

# ---- rank-sum -------------------------------------------------------------

rng = np.random.default_rng(5)
a = rng.normal(100, 5, size=5)
b = rng.normal(108, 5, size=5)
p = wilcoxon_rank_sum(a, b)
print(f"\ntwo batches of 5 runs, true gap 8: p = {p:.4f}")
print("verdict at 5%:", compare_runs(a, b)[0])

# with samples this small the p-value is computed by exact enumeration of
# rank assignments, not a normal approximation, so ties are handled right
same = np.array([3.0, 3.0, 3.0])
print(f"identical all-tied batches: p = {wilcoxon_rank_sum(same, same):.4f}")
