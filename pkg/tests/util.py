"""Shared helpers for the test suite: tiny random instances, hand-traceable
fixtures, and brute-force reference implementations used as oracles."""

from __future__ import annotations

import itertools

import numpy as np
from scipy.stats import rankdata

from ucarp.instance import Edge, Instance
from ucarp.stochastic import InstanceSample

# scores arcs by -CFH, so remote arc tails win ties against near ones
FARTHEST_FIRST = ("-", 0.0, "CFH")


def line_a():
    """Four-vertex line, tasks (2,3) demand 3 and (3,4) demand 2, Q=4."""
    edges = (
        Edge(1, 2, 2.0, 2.0, 0.0),
        Edge(2, 3, 3.0, 3.0, 3.0),
        Edge(3, 4, 4.0, 4.0, 2.0),
    )
    return Instance("line-a", 4, edges, 1, 4.0)


def line_b():
    """Same line with both tasks at mean demand 3; Q=4, fleet of 2."""
    edges = (
        Edge(1, 2, 2.0, 2.0, 0.0),
        Edge(2, 3, 3.0, 3.0, 3.0),
        Edge(3, 4, 4.0, 4.0, 3.0),
    )
    return Instance("line-b", 4, edges, 1, 4.0)


def sample_of(inst, demands, costs=None):
    """Fixed realization: demands as given, costs at their means by default."""
    if costs is None:
        costs = [e.traversal_cost for e in inst.edges]
    return InstanceSample(inst, np.array(demands, float), np.array(costs, float))


def rank_sum_by_enumeration(a, b):
    """Brute-force two-sided permutation p-value over all rank splits."""
    pooled = np.concatenate([np.asarray(a, float), np.asarray(b, float)])
    ranks = rankdata(pooled)
    n1 = len(a)
    observed = ranks[:n1].sum()
    sums = np.array([
        ranks[list(subset)].sum()
        for subset in itertools.combinations(range(len(pooled)), n1)
    ])
    eps = 1e-9
    p_le = np.mean(sums <= observed + eps)
    p_ge = np.mean(sums >= observed - eps)
    return min(1.0, 2.0 * min(p_le, p_ge))


def random_connected_instance(rng, n_lo=4, n_hi=8, extra_hi=6, capacity=None,
                              task_fraction=0.7, cost_hi=20, demand_hi=4,
                              name="rand"):
    """Small random connected instance for property tests.

    A random spanning tree keeps it connected; a few extra edges add cycles.
    Roughly ``task_fraction`` of edges carry demand.
    """
    n = int(rng.integers(n_lo, n_hi + 1))
    pairs = []
    order = rng.permutation(np.arange(1, n + 1))
    for i in range(1, n):
        a, b = int(order[i]), int(order[int(rng.integers(0, i))])
        pairs.append((min(a, b), max(a, b)))
    all_pairs = [p for p in itertools.combinations(range(1, n + 1), 2)
                 if p not in set(pairs)]
    rng.shuffle(all_pairs)
    pairs += all_pairs[: int(rng.integers(0, min(extra_hi, len(all_pairs)) + 1))]

    edges = []
    for (u, v) in pairs:
        cost = float(rng.integers(1, cost_hi + 1))
        if rng.random() < task_fraction:
            demand = float(rng.integers(1, demand_hi + 1))
        else:
            demand = 0.0
        edges.append(Edge(u, v, cost, cost if demand > 0 else 0.0, demand))
    if not any(e.demand > 0 for e in edges):
        e = edges[0]
        edges[0] = Edge(e.u, e.v, e.traversal_cost, e.traversal_cost, 1.0)
    if capacity is None:
        capacity = float(max(e.demand for e in edges) + rng.integers(1, 6))
    return Instance(name, n, tuple(edges), 1, capacity)


def brute_shortest(instance, a, b, excluded=()):
    """Cheapest simple a-to-b path by exhaustive DFS (exponential; tiny graphs
    only).  Returns inf when no path survives the exclusions."""
    excl = {(min(u, v), max(u, v)) for (u, v) in excluded}
    adj = {}
    for e in instance.edges:
        if (e.u, e.v) in excl:
            continue
        adj.setdefault(e.u, []).append((e.v, e.traversal_cost))
        adj.setdefault(e.v, []).append((e.u, e.traversal_cost))
    best = [np.inf]

    def dfs(v, seen, acc):
        if acc >= best[0]:
            return
        if v == b:
            best[0] = acc
            return
        for (w, c) in adj.get(v, ()):
            if w not in seen:
                dfs(w, seen | {w}, acc + c)

    dfs(a, {a}, 0.0)
    return best[0]
