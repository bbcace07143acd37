"""
Simulating one day of routing, with and without collaboration
=============================================================

A routing policy only picks the next task; everything else -- driving,
serving, running out of capacity mid-arc, replanning -- happens inside
the event-driven constructor.  This script runs the same realized day
twice, with the collaborative recourses off and on, and prints what each
vehicle actually did.
"""

from ucarp.instance import load_benchmark
from ucarp.policy import MANUAL_POLICIES
from ucarp.simulator import SimConfig, construct_solution, total_cost, validate_solution
from ucarp.stochastic import sample_instance

inst = load_benchmark("gdb1")
sample = sample_instance(inst, seed=38)
policy = MANUAL_POLICIES["PS1"]  # nearest task first, prefer far-from-depot ties


def describe(solution):
    for k, route in enumerate(solution.routes):
        served = [s for s in route if s.task is not None]
        print(f"  vehicle {k}: {len(route):3d} steps, "
              f"{len(served):2d} serving, finish {solution.finish_times[k]:7.2f}")


# ---- plain: a vehicle that comes up short finishes the job itself ----
plain = construct_solution(inst, sample, policy, SimConfig())
validate_solution(plain, sample)  # raises if anything is inconsistent
print(f"no collaboration:   total cost {total_cost(plain, sample):8.2f}")
describe(plain)

# ---- collaborative: leftovers go back to the shared pool, and a vehicle
# ---- heading home with spare capacity serves tasks it happens to pass ----
collab = construct_solution(
    inst, sample, policy,
    SimConfig(collab_route_failure=True, collab_refill=True, record_events=True),
)
validate_solution(collab, sample)
print(f"\nwith collaboration: total cost {total_cost(collab, sample):8.2f}")
describe(collab)

# the event log is the audit trail of the day; show the recourse in action
print("\nthe route failure and what happened next:")
start = next(i for i, e in enumerate(collab.events) if "failure" in e[2])
for time, vid, note in collab.events[start:start + 5]:
    print(f"  t={time:7.2f}  vehicle {vid}: {note}")

# collaboration is not free on every single day -- returning the leftover
# to the pool occasionally places it worse than just finishing the job --
# but across many sampled days it wins clearly (that is the whole point,
# and the acceptance tests measure it over 500 days per instance)
