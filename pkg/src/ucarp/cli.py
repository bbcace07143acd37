"""Command line front end.

Four subcommands: ``train`` evolves a policy on one instance, ``test``
scores a policy file (or a built-in PS name) over the fixed test samples,
``compare`` runs a full experiment spec, and ``trace`` dumps one simulated
solution with its event log as JSON.
"""

import argparse
import json
import sys

from ucarp.bench import (
    DEFAULT_TEST_SEED_BASE,
    VARIANTS,
    load_spec,
    run_experiment,
    test_performance,
    test_seeds,
)
from ucarp.evolve import GpConfig, evolve, write_generation_log
from ucarp.instance import load_benchmark, parse_instance
from ucarp.policy import named_policy, serialize_policy
from ucarp.simulator import SimConfig, construct_solution, total_cost
from ucarp.stochastic import sample_instance

COLLAB_CHOICES = {
    "off": (False, False),
    "failure": (True, False),
    "refill": (False, True),
    "both": (True, True),
}


def _load_instance(ref):
    """A benchmark name like gdb1, or a path to a .dat file."""
    try:
        return load_benchmark(ref)
    except KeyError:
        with open(ref) as fh:
            return parse_instance(fh.read())


def _load_policy(ref):
    """PS name, inline expression, or a file holding one expression."""
    try:
        with open(ref) as fh:
            return named_policy(fh.read().strip())
    except OSError:
        return named_policy(ref)


def _sim_config(args):
    failure, refill = COLLAB_CHOICES[args.collab]
    return SimConfig(
        collab_route_failure=failure,
        collab_refill=refill,
        estimator=args.estimator,
        record_events=getattr(args, "events", False),
    )


def cmd_train(args):
    instance = _load_instance(args.instance)
    variant = VARIANTS[args.variant]
    config = GpConfig(
        population_size=args.population,
        generations=args.generations,
        samples_per_generation=args.samples_per_generation,
        sim=variant.sim_config(args.estimator),
        seed=args.seed,
        workers=args.workers,
    )
    verbose = (lambda row: print(
        f"gen {row['generation']:3d}  best {row['best_fitness']:10.2f}  "
        f"mean {row['mean_fitness']:10.2f}", file=sys.stderr,
    )) if args.verbose else None
    best, log = evolve(instance, config, progress=verbose)
    text = serialize_policy(best.policy)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.log:
        write_generation_log(log, args.log)
    print(f"final training fitness: {best.fitness:.2f}", file=sys.stderr)
    return 0


def cmd_test(args):
    instance = _load_instance(args.instance)
    policy = _load_policy(args.policy)
    seeds = test_seeds(args.seed_base, args.samples)
    mean = test_performance(policy, instance, _sim_config(args), seeds)
    print(f"{mean:.4f}")
    return 0


def cmd_compare(args):
    spec = load_spec(args.spec)
    if args.output_dir:
        spec.output_dir = args.output_dir
    report = run_experiment(
        spec, progress=(lambda text: print(text, file=sys.stderr)),
    )
    failures = [r for r in report.rows if r["error"]]
    print(report.paths["report"])
    if failures:
        print(f"{len(failures)} cell(s) failed; see runs.csv", file=sys.stderr)
        return 1
    return 0


def cmd_trace(args):
    instance = _load_instance(args.instance)
    policy = _load_policy(args.policy)
    args.events = True
    sample = sample_instance(instance, args.seed)
    solution = construct_solution(instance, sample, policy, _sim_config(args))
    dump = {
        "instance": instance.name,
        "seed": args.seed,
        "policy": serialize_policy(policy),
        "total_cost": total_cost(solution, sample),
        "finish_times": solution.finish_times,
        "routes": [
            [
                {"from": s.u, "to": s.v, "edge": s.edge, "task": s.task,
                 "amount": s.amount}
                for s in route
            ]
            for route in solution.routes
        ],
        "events": [
            {"time": t, "vehicle": vid, "note": text}
            for (t, vid, text) in solution.events
        ],
    }
    text = json.dumps(dump, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _add_sim_flags(parser):
    parser.add_argument("--collab", choices=sorted(COLLAB_CHOICES), default="both",
                        help="which collaboration recourse to enable")
    parser.add_argument("--estimator", choices=("truncate", "actual"),
                        default="truncate")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ucarp",
        description="uncertain arc routing: policy training and benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="evolve a routing policy")
    p.add_argument("instance", help="benchmark name or .dat path")
    p.add_argument("--variant", choices=[v for v in VARIANTS if VARIANTS[v].trains],
                   default="GPHH-C")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--population", type=int, default=1024)
    p.add_argument("--generations", type=int, default=51)
    p.add_argument("--samples-per-generation", type=int, default=5)
    p.add_argument("--estimator", choices=("truncate", "actual"),
                   default="truncate")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel fitness workers (or set UCARP_WORKERS)")
    p.add_argument("--out", help="write the evolved expression here")
    p.add_argument("--log", help="write the per-generation CSV here")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("test", help="score a policy on fixed test samples")
    p.add_argument("policy", help="PS name, expression, or file")
    p.add_argument("instance")
    p.add_argument("--seed-base", type=int, default=DEFAULT_TEST_SEED_BASE)
    p.add_argument("--samples", type=int, default=500)
    _add_sim_flags(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("compare", help="run an experiment spec file")
    p.add_argument("spec", help="JSON (or TOML on 3.11+) ExperimentSpec")
    p.add_argument("--output-dir", help="override the spec's output directory")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("trace", help="dump one simulation as JSON")
    p.add_argument("instance")
    p.add_argument("--policy", default="PS1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
