"""Genetic programming over routing policies.

Policies are the expression trees from :mod:`ucarp.policy`, grown from the
thirteen decision features, uniform random constants, and the binary
operators + - * / min max.  Each generation draws a fresh batch of demand
and cost samples, scores every tree by its mean constructed-solution cost
on that batch, and breeds the next population with tournament-selected
crossover, subtree mutation, and straight copying.
"""

import csv
import os
import time
from dataclasses import dataclass, field

import numpy as np

from ucarp.instance import build_distance_oracle
from ucarp.policy import FEATURE_NAMES, serialize_policy, tree_depth
from ucarp.simulator import SimConfig, construct_solution, total_cost
from ucarp.stochastic import sample_instance

GP_OPERATORS = ("+", "-", "*", "/", "min", "max")

_INIT_DEPTHS = (2, 3, 4, 5, 6)
_MUTATION_GROW_DEPTH = 4
_OPERATOR_RETRIES = 10


@dataclass
class GpConfig:
    """Knobs for one evolutionary run."""

    population_size: int = 1024
    generations: int = 51
    tournament_size: int = 7
    crossover_rate: float = 0.8
    mutation_rate: float = 0.15
    reproduction_rate: float = 0.05
    max_depth: int = 8
    samples_per_generation: int = 5
    sim: SimConfig = field(default_factory=SimConfig)
    seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        rates = self.crossover_rate + self.mutation_rate + self.reproduction_rate
        if abs(rates - 1.0) > 1e-9:
            raise ValueError(f"operator rates sum to {rates}, expected 1")
        for name in ("population_size", "generations", "tournament_size",
                     "max_depth", "samples_per_generation"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    def resolved_workers(self):
        if self.workers is not None:
            return max(1, self.workers)
        return max(1, int(os.environ.get("UCARP_WORKERS", "1")))


@dataclass(frozen=True)
class EvaluatedPolicy:
    policy: object
    fitness: float


# ---------------------------------------------------------------------------
# tree generation
# ---------------------------------------------------------------------------


def random_terminal(rng):
    """Feature name, or a fresh constant with probability 1/14."""
    i = int(rng.integers(len(FEATURE_NAMES) + 1))
    if i < len(FEATURE_NAMES):
        return FEATURE_NAMES[i]
    return float(rng.random())


def grow_tree(rng, depth):
    """Grow scheme: any node may close early with a terminal."""
    if depth <= 1:
        return random_terminal(rng)
    # uniform over the combined primitive set, as in classic tree GP
    n_terms = len(FEATURE_NAMES) + 1
    if int(rng.integers(len(GP_OPERATORS) + n_terms)) < len(GP_OPERATORS):
        op = GP_OPERATORS[int(rng.integers(len(GP_OPERATORS)))]
        return (op, grow_tree(rng, depth - 1), grow_tree(rng, depth - 1))
    return random_terminal(rng)


def full_tree(rng, depth):
    """Full scheme: operators all the way down to the target depth."""
    if depth <= 1:
        return random_terminal(rng)
    op = GP_OPERATORS[int(rng.integers(len(GP_OPERATORS)))]
    return (op, full_tree(rng, depth - 1), full_tree(rng, depth - 1))


def ramped_population(rng, size, depths=_INIT_DEPTHS):
    """Ramped half-and-half: cycle target depths, alternate full/grow."""
    out = []
    for i in range(size):
        depth = depths[(i // 2) % len(depths)]
        out.append(full_tree(rng, depth) if i % 2 == 0 else grow_tree(rng, depth))
    return out


# ---------------------------------------------------------------------------
# variation operators
# ---------------------------------------------------------------------------


def _subtree_at(tree, index):
    """Preorder node lookup; index 0 is the root."""
    stack = [tree]
    for _ in range(index):
        node = stack.pop()
        if isinstance(node, tuple):
            stack.extend(reversed(node[1:]))
    return stack.pop()


def _graft(tree, index, replacement, _counter=None):
    """Copy of ``tree`` with the preorder node at ``index`` replaced."""
    counter = _counter if _counter is not None else [index]
    if counter[0] == 0:
        counter[0] -= 1
        return replacement
    counter[0] -= 1
    if not isinstance(tree, tuple):
        return tree
    rebuilt = [tree[0]]
    for child in tree[1:]:
        rebuilt.append(_graft(child, index, replacement, counter))
    return tuple(rebuilt)


def _node_count(tree):
    if not isinstance(tree, tuple):
        return 1
    return 1 + sum(_node_count(c) for c in tree[1:])


def crossover(parent_a, parent_b, rng, max_depth=8):
    """Swap uniformly chosen subtrees; retry while a child is too deep."""
    for _ in range(_OPERATOR_RETRIES):
        i = int(rng.integers(_node_count(parent_a)))
        j = int(rng.integers(_node_count(parent_b)))
        sub_a = _subtree_at(parent_a, i)
        sub_b = _subtree_at(parent_b, j)
        child_a = _graft(parent_a, i, sub_b)
        child_b = _graft(parent_b, j, sub_a)
        if tree_depth(child_a) <= max_depth and tree_depth(child_b) <= max_depth:
            return child_a, child_b
    return parent_a, parent_b


def mutate(parent, rng, max_depth=8):
    """Replace a uniformly chosen subtree with a freshly grown one."""
    for _ in range(_OPERATOR_RETRIES):
        i = int(rng.integers(_node_count(parent)))
        child = _graft(parent, i, grow_tree(rng, _MUTATION_GROW_DEPTH))
        if tree_depth(child) <= max_depth:
            return child
    return parent


def reproduce(parent):
    return parent  # trees are immutable tuples, so a reference is a copy


def tournament(fitnesses, rng, size=7):
    """Index of the fittest (lowest cost) among ``size`` uniform draws."""
    drawn = rng.integers(len(fitnesses), size=size)
    return int(drawn[np.argmin(np.asarray(fitnesses)[drawn])])


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def fitness(policy, instance, seeds, config=None, oracle=None):
    """Mean constructed-solution cost of ``policy`` over sample ``seeds``.

    An unreachable sample raises rather than being skipped: a silently
    shrunken mean would not be comparable across policies.
    """
    if len(seeds) == 0:
        raise ValueError("at least one training seed is required")
    config = config or SimConfig()
    if oracle is None:
        oracle = build_distance_oracle(instance)
    costs = []
    for s in seeds:
        sample = sample_instance(instance, int(s))
        sol = construct_solution(instance, sample, policy, config, oracle=oracle)
        costs.append(total_cost(sol, sample))
    return float(np.mean(costs))


def _eval_batch(args):
    policies, instance, samples, config, oracle = args
    out = []
    for policy in policies:
        total = 0.0
        for sample in samples:
            sol = construct_solution(instance, sample, policy, config, oracle=oracle)
            total += total_cost(sol, sample)
        out.append(total / len(samples))
    return out


def _evaluate_population(population, instance, samples, config, oracle, pool):
    """Fitness per individual, caching duplicates within the generation."""
    cache = {}
    unique = []
    for tree in population:
        if tree not in cache:
            cache[tree] = None
            unique.append(tree)
    if pool is None:
        values = _eval_batch((unique, instance, samples, config.sim, oracle))
    else:
        shards = np.array_split(np.arange(len(unique)), pool._processes)
        jobs = [([unique[i] for i in shard], instance, samples, config.sim, oracle)
                for shard in shards if len(shard)]
        values = [v for part in pool.map(_eval_batch, jobs) for v in part]
    for tree, value in zip(unique, values):
        cache[tree] = value
    return [cache[tree] for tree in population]


# ---------------------------------------------------------------------------
# the generational loop
# ---------------------------------------------------------------------------


def evolve(instance, config=None, progress=None):
    """Run one GP search; returns (best of final generation, log rows).

    The log holds one dict per generation: index, best/mean/worst fitness,
    the best tree in printable form, and wall-clock seconds.  The same
    master seed always reproduces the same run.
    """
    config = config or GpConfig()
    rng = np.random.Generator(np.random.PCG64(config.seed))
    seed_matrix = rng.integers(
        2**31, size=(config.generations, config.samples_per_generation)
    )
    oracle = build_distance_oracle(instance)

    pool = None
    workers = config.resolved_workers()
    if workers > 1:
        import multiprocessing

        pool = multiprocessing.Pool(workers)

    try:
        population = ramped_population(rng, config.population_size)
        log = []
        best = None
        for gen in range(config.generations):
            started = time.perf_counter()
            samples = [
                sample_instance(instance, int(s)) for s in seed_matrix[gen]
            ]
            scores = _evaluate_population(
                population, instance, samples, config, oracle, pool
            )
            order = int(np.argmin(scores))
            best = EvaluatedPolicy(population[order], float(scores[order]))
            log.append({
                "generation": gen,
                "best_fitness": best.fitness,
                "mean_fitness": float(np.mean(scores)),
                "worst_fitness": float(np.max(scores)),
                "best_policy": serialize_policy(best.policy),
                "seconds": time.perf_counter() - started,
            })
            if progress is not None:
                progress(log[-1])
            if gen == config.generations - 1:
                break
            population = _breed(population, scores, rng, config)
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return best, log


def _breed(population, scores, rng, config):
    """Next generation under per-slot operator selection."""
    out = []
    while len(out) < config.population_size:
        op = rng.random()
        if op < config.crossover_rate:
            a = population[tournament(scores, rng, config.tournament_size)]
            b = population[tournament(scores, rng, config.tournament_size)]
            child_a, child_b = crossover(a, b, rng, config.max_depth)
            out.append(child_a)
            if len(out) < config.population_size:
                out.append(child_b)
        elif op < config.crossover_rate + config.mutation_rate:
            a = population[tournament(scores, rng, config.tournament_size)]
            out.append(mutate(a, rng, config.max_depth))
        else:
            out.append(reproduce(
                population[tournament(scores, rng, config.tournament_size)]
            ))
    return out


def write_generation_log(log, path):
    """Dump evolve()'s log rows as CSV."""
    fields = ["generation", "best_fitness", "mean_fitness", "worst_fitness",
              "best_policy", "seconds"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in log:
            writer.writerow(row)
