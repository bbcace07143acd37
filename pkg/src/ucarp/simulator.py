"""Event-driven construction of routing solutions on one realization.

Vehicles start at the depot and repeatedly pick the unassigned task arc whose
feature vector scores lowest under the routing policy.  Movement is simulated
one edge at a time on a shared clock (ties broken by vehicle id), so demands
are revealed only while serving and impassable edges only when a vehicle
tries to drive onto one.  Passing the depot always empties the hopper.

Two collaboration switches change what happens around capacity shortfalls:

- route failure: with collaboration on, a task that could not be finished is
  thrown back to the unassigned pool for anyone to take; off, the failing
  vehicle keeps it, refills, and drives back to finish it in the same
  direction without consulting the policy.
- refill trips: with collaboration on, a vehicle heading to the depot serves
  any unserved task edge it happens to drive over, with whatever capacity is
  left; a vehicle that loses its task this way is turned around immediately.

The resulting plain step lists can be costed and validated independently of
the construction machinery.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .instance import Instance, UnreachableVerticesError, build_distance_oracle
from .policy import DecisionContext, evaluate, extract_features, task_proximity
from .stochastic import InstanceSample, remaining_demand


class UnreachableTaskError(RuntimeError):
    """The realization makes finishing every task impossible."""


class SolutionError(ValueError):
    """A solution violates the arc-routing feasibility rules."""


@dataclass(frozen=True)
class Step:
    """One edge traversal; ``amount > 0`` or a non-None task marks serving."""

    u: int
    v: int
    edge: int
    task: int | None = None
    amount: float = 0.0


@dataclass
class Solution:
    """Per-vehicle step sequences plus an optional decision/event log."""

    routes: list
    finish_times: list
    events: list | None = None


@dataclass
class SimConfig:
    collab_route_failure: bool = False
    collab_refill: bool = False
    estimator: str = "truncate"
    record_events: bool = False


@dataclass
class _Vehicle:
    node: int
    remaining: float
    time: float = 0.0
    epoch: int = 0
    target: int | None = None
    serve_task: int | None = None  # task to serve when the serve arc's tail is reached
    serve_arc: tuple | None = None
    refilling: bool = False
    resume: tuple | None = None  # (task, arc) to continue after a refill
    done: bool = False
    route: list = field(default_factory=list)


class _Sim:
    def __init__(self, instance, sample, policy, config, oracle):
        self.instance = instance
        self.sample = sample
        self.policy = policy
        self.config = config
        self.tasks = instance.tasks
        n_tasks = len(self.tasks)
        self.task_edge = np.array(
            [instance.edge_position(t.u, t.v) for t in self.tasks]
        )
        self.endpoints = np.array([[t.u, t.v] for t in self.tasks])
        self.serving_costs = np.array([t.serving_cost for t in self.tasks])
        self.oracle = oracle if oracle is not None else build_distance_oracle(instance)
        self.prox = task_proximity(self.oracle.dist, self.endpoints)
        self.failed_edges = set(self.oracle.excluded)

        self.unserved = np.ones(n_tasks, dtype=bool)
        self.unassigned = np.ones(n_tasks, dtype=bool)
        self.served_amount = np.zeros(n_tasks)
        self.touched = np.zeros(n_tasks, dtype=bool)
        self.owner = [None] * n_tasks

        self.vehicles = [
            _Vehicle(instance.depot, instance.capacity)
            for _ in range(instance.num_vehicles)
        ]
        self.heap = [(0.0, vid, 0) for vid in range(len(self.vehicles))]
        heapq.heapify(self.heap)
        self.now = 0.0
        self.events = [] if config.record_events else None

    # -- plumbing ----------------------------------------------------------

    def log(self, vid, text):
        # stamped with the pop clock, so the trace is ordered even when an
        # entry concerns a vehicle whose own clock is mid-edge in the future
        if self.events is not None:
            self.events.append((round(self.now, 6), vid, text))

    def estimates(self):
        # estimates are only ever read for unserved tasks, so don't pay
        # for tail corrections on tasks that are already finished
        return remaining_demand(
            self.sample, self.served_amount, self.touched & self.unserved,
            self.config.estimator,
        )

    def schedule(self, vid, delay):
        v = self.vehicles[vid]
        v.time += delay
        heapq.heappush(self.heap, (v.time, vid, v.epoch))

    def discover_failure(self, vid, u, v):
        """A vehicle tried to drive onto an impassable edge: replan globally."""
        self.failed_edges.add((min(u, v), max(u, v)))
        self.log(vid, f"edge ({u},{v}) impassable")
        bad_tasks = [
            i for i in np.flatnonzero(self.unserved)
            if tuple(sorted(self.endpoints[i])) in self.failed_edges
        ]
        if bad_tasks:
            t = self.tasks[bad_tasks[0]]
            raise UnreachableTaskError(
                f"task ({t.u},{t.v}) lies on an impassable edge"
            )
        try:
            self.oracle = build_distance_oracle(self.instance, self.failed_edges)
        except UnreachableVerticesError as exc:
            raise UnreachableTaskError(
                f"impassable edges cut off vertices {exc.stranded}"
            ) from exc
        self.prox = task_proximity(self.oracle.dist, self.endpoints)

    # -- decision making ----------------------------------------------------

    def decide(self, vid):
        """Pick the next intention for an idle vehicle standing at a node."""
        v = self.vehicles[vid]
        pool = np.flatnonzero(self.unassigned & self.unserved)
        if len(pool) == 0:
            if v.node == self.instance.depot:
                v.done = True
                self.log(vid, "route closed")
            else:
                v.target = self.instance.depot
                v.refilling = True
                self.log(vid, "returning to depot")
            return

        est = self.estimates()
        fits = pool[est[pool] <= v.remaining]
        if len(fits) == 0:
            if v.node != self.instance.depot:
                v.target = self.instance.depot
                v.refilling = True
                self.log(vid, "refill trip (no task fits)")
                return
            # at the depot with a full hopper nothing ever fits better:
            # consider everything rather than stall forever
            fits = pool

        arcs = np.empty((2 * len(fits), 2), dtype=int)
        arcs[0::2] = self.endpoints[fits]
        arcs[1::2] = self.endpoints[fits][:, ::-1]
        arc_tasks = np.repeat(fits, 2)
        others = [w for w in self.vehicles if w is not v and not w.done]
        ctx = DecisionContext(
            dist=self.oracle.dist,
            task_prox=self.prox,
            arcs=arcs,
            arc_tasks=arc_tasks,
            estimates=est,
            serving_costs=self.serving_costs,
            unserved=self.unserved,
            unassigned_count=len(pool),
            vehicle_node=v.node,
            vehicle_remaining=v.remaining,
            other_nodes=np.array([w.node for w in others], dtype=int),
            other_remaining=np.array([w.remaining for w in others]),
            depot=self.instance.depot,
            capacity=self.instance.capacity,
        )
        scores = evaluate(self.policy, extract_features(ctx))
        pick = int(np.argmin(scores))
        task = int(arc_tasks[pick])
        tail, head = int(arcs[pick, 0]), int(arcs[pick, 1])
        self.unassigned[task] = False
        self.owner[task] = vid
        v.serve_task = task
        v.serve_arc = (tail, head)
        v.target = tail
        self.log(vid, f"assigned task ({tail},{head})")

    # -- serving ------------------------------------------------------------

    def serve(self, vid, task, tail, head, opportunistic=False):
        """Drive tail->head while serving; returns True if the task finished."""
        v = self.vehicles[vid]
        edge = int(self.task_edge[task])
        if not np.isfinite(self.sample.costs[edge]):
            self.discover_failure(vid, tail, head)  # always raises: task edge
        realized = max(self.sample.demands[task] - self.served_amount[task], 0.0)
        amount = min(v.remaining, realized)
        self.served_amount[task] += amount
        v.remaining -= amount
        self.touched[task] = True
        v.route.append(Step(tail, head, edge, task, amount))
        finished = realized <= amount
        if finished:
            self.unserved[task] = False
            self.finish_task(vid, task, opportunistic)
            self.log(vid, f"served task ({tail},{head}), got {amount:g}")
        else:
            what = "partial serve" if opportunistic else "route failure"
            self.log(
                vid,
                f"{what} on ({tail},{head}): needed {realized:g}, had {amount:g}",
            )
            if not opportunistic:
                if self.config.collab_route_failure:
                    self.unassigned[task] = True
                    self.owner[task] = None
                    v.serve_task = None
                    v.serve_arc = None
                else:
                    v.resume = (task, (tail, head))
                    v.serve_task = None
                    v.serve_arc = None
                v.target = self.instance.depot
                v.refilling = True
        v.node = head
        self.schedule(vid, self.tasks[task].serving_cost)

    def finish_task(self, vid, task, opportunistic):
        """Book-keeping when a task's demand reaches zero."""
        holder = self.owner[task]
        self.owner[task] = None
        self.unassigned[task] = False
        if not opportunistic:
            v = self.vehicles[vid]
            v.serve_task = None
            v.serve_arc = None
            v.target = None
            return
        if holder is None or holder == vid:
            # nobody to turn around; a passing vehicle's own pending intention
            # (if any) is simply dropped
            w = self.vehicles[vid]
            if w.serve_task == task:
                w.serve_task = None
                w.serve_arc = None
            if w.resume is not None and w.resume[0] == task:
                w.resume = None
            return
        w = self.vehicles[holder]
        if w.resume is not None and w.resume[0] == task:
            # it planned to come back after refilling; now it need not
            w.resume = None
            self.log(holder, "resume cancelled: task served by a helper")
        elif w.serve_task == task:
            w.serve_task = None
            w.serve_arc = None
            w.target = None
            w.epoch += 1  # cancel its in-flight arrival
            self.log(holder, "reassigned: task served by a helper")
            self.decide(holder)
            if not w.done:
                self.advance(holder)

    # -- movement -----------------------------------------------------------

    def advance(self, vid):
        """Execute the vehicle's next step, scheduling its next wake-up."""
        v = self.vehicles[vid]
        while True:
            if v.serve_task is not None and v.node == v.serve_arc[0]:
                tail, head = v.serve_arc
                v.target = None
                self.serve(vid, v.serve_task, tail, head)
                return
            if v.target is None:
                self.decide(vid)
                if v.done:
                    return
                continue
            if v.node == v.target:
                v.target = None
                if v.refilling:
                    v.refilling = False
                    if v.resume is not None:
                        task, (tail, head) = v.resume
                        v.resume = None
                        v.serve_task = task
                        v.serve_arc = (tail, head)
                        v.target = tail
                        self.log(vid, f"resuming task ({tail},{head})")
                continue
            # one deadhead step toward the target
            nxt = self.oracle.successor(v.node, v.target)
            edge = self.instance.edge_position(v.node, nxt)
            if not np.isfinite(self.sample.costs[edge]):
                self.discover_failure(vid, v.node, nxt)
                continue
            if (
                self.config.collab_refill
                and v.refilling
                and v.remaining > 0
                and self.instance.edges[edge].demand > 0
            ):
                task = self.instance.task_position(v.node, nxt)
                if self.unserved[task]:
                    self.serve(vid, task, v.node, nxt, opportunistic=True)
                    return
            v.route.append(Step(v.node, nxt, edge))
            v.node = nxt
            self.schedule(vid, float(self.sample.costs[edge]))
            return

    def run(self):
        depot = self.instance.depot
        while self.heap:
            time, vid, epoch = heapq.heappop(self.heap)
            self.now = time
            v = self.vehicles[vid]
            if epoch != v.epoch or v.done:
                continue
            if v.node == depot:
                v.remaining = self.instance.capacity
            self.advance(vid)
        if self.unserved.any():
            left = [tuple(self.endpoints[i]) for i in np.flatnonzero(self.unserved)]
            raise UnreachableTaskError(f"construction stalled with tasks {left}")
        return Solution(
            routes=[v.route for v in self.vehicles],
            finish_times=[v.time for v in self.vehicles],
            events=self.events,
        )


def construct_solution(
    instance: Instance,
    sample: InstanceSample,
    policy,
    config: SimConfig | None = None,
    oracle=None,
) -> Solution:
    """Build one solution for ``sample`` by simulating the fleet under ``policy``.

    ``oracle`` may carry a prebuilt distance oracle to share across samples;
    it is never mutated.  Raises UnreachableTaskError when the realization
    cannot be completed (impassable task edge, or a failure that cuts the
    graph apart).
    """
    return _Sim(instance, sample, policy, config or SimConfig(), oracle).run()


# ---------------------------------------------------------------------------
# costing and feasibility
# ---------------------------------------------------------------------------


def total_cost(solution: Solution, sample: InstanceSample) -> float:
    """Realized cost: every traversal at its realized cost, then each task
    swaps one traversal for its serving cost."""
    c = 0.0
    for route in solution.routes:
        for s in route:
            c += sample.costs[s.edge]
    inst = sample.instance
    for t in inst.tasks:
        c += t.serving_cost - sample.costs[inst.edge_position(t.u, t.v)]
    return float(c)


def validate_solution(solution: Solution, sample: InstanceSample) -> None:
    """Check the feasibility rules; raises SolutionError on the first breach.

    Rules: routes are closed walks on the depot over existing, passable
    edges; serving amounts are non-negative and sit on the served task's own
    edge; the amounts collected between depot visits never exceed capacity;
    and every task's collected total equals its realized demand.
    """
    inst = sample.instance
    depot = inst.depot
    served = np.zeros(len(inst.tasks))
    for vid, route in enumerate(solution.routes):
        here = depot
        load = 0.0
        for s in route:
            if s.u != here:
                raise SolutionError(f"vehicle {vid}: step starts at {s.u}, not {here}")
            edge = inst.edges[s.edge]
            if {s.u, s.v} != {edge.u, edge.v}:
                raise SolutionError(f"vehicle {vid}: step does not match edge {s.edge}")
            if not np.isfinite(sample.costs[s.edge]):
                raise SolutionError(f"vehicle {vid}: drove impassable edge ({s.u},{s.v})")
            if s.amount < 0:
                raise SolutionError(f"vehicle {vid}: negative serving amount")
            if s.task is not None:
                t = inst.tasks[s.task]
                if {t.u, t.v} != {s.u, s.v}:
                    raise SolutionError(
                        f"vehicle {vid}: serving step off the task's edge"
                    )
                served[s.task] += s.amount
                load += s.amount
                if load > inst.capacity + 1e-9:
                    raise SolutionError(f"vehicle {vid}: capacity exceeded")
            elif s.amount != 0:
                raise SolutionError(f"vehicle {vid}: amount on a deadhead step")
            here = s.v
            if here == depot:
                load = 0.0
        if here != depot:
            raise SolutionError(f"vehicle {vid}: route ends at {here}, not the depot")
    if not np.allclose(served, sample.demands, rtol=0, atol=1e-9):
        bad = int(np.argmax(np.abs(served - sample.demands)))
        t = inst.tasks[bad]
        raise SolutionError(
            f"task ({t.u},{t.v}) served {served[bad]:g} of {sample.demands[bad]:g}"
        )
