"""Uncertain capacitated arc routing toolkit.

Submodules
----------
instance    benchmark parsing, fleet sizing, shortest-path oracles
stochastic  demand/cost sampling and remaining-demand estimation
policy      routing-policy expression trees and decision features
simulator   event-driven collaborative solution construction
evolve      genetic programming over routing policies
bench       experiment harness, statistics, result tables
"""

from ucarp.bench import (
    VARIANTS,
    ExperimentSpec,
    compare_runs,
    load_spec,
    run_experiment,
    test_performance,
    test_seeds,
    train_seed,
    wilcoxon_rank_sum,
)
from ucarp.evolve import GpConfig, evolve
from ucarp.instance import (
    DistanceOracle,
    Edge,
    Instance,
    build_distance_oracle,
    list_benchmarks,
    load_benchmark,
    min_vehicles,
    parse_instance,
    serialize_instance,
)
from ucarp.policy import (
    FEATURE_NAMES,
    MANUAL_POLICIES,
    named_policy,
    parse_policy,
    serialize_policy,
)
from ucarp.simulator import (
    SimConfig,
    Solution,
    Step,
    UnreachableTaskError,
    construct_solution,
    total_cost,
    validate_solution,
)
from ucarp.stochastic import (
    InstanceSample,
    remaining_demand,
    sample_instance,
    truncated_normal_excess,
)

__all__ = [
    "DistanceOracle",
    "Edge",
    "ExperimentSpec",
    "FEATURE_NAMES",
    "GpConfig",
    "Instance",
    "InstanceSample",
    "MANUAL_POLICIES",
    "SimConfig",
    "Solution",
    "Step",
    "UnreachableTaskError",
    "VARIANTS",
    "build_distance_oracle",
    "compare_runs",
    "construct_solution",
    "evolve",
    "list_benchmarks",
    "load_benchmark",
    "load_spec",
    "min_vehicles",
    "named_policy",
    "parse_instance",
    "parse_policy",
    "remaining_demand",
    "run_experiment",
    "sample_instance",
    "serialize_instance",
    "serialize_policy",
    "test_performance",
    "test_seeds",
    "total_cost",
    "train_seed",
    "validate_solution",
    "wilcoxon_rank_sum",
]

__version__ = "0.1.0"
