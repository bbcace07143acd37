"""Benchmark harness: variant table, paired testing, and experiment runs.

A *variant* couples a policy source with a collaboration setting: the four
GP-trained configurations (no collaboration, each collaboration alone, and
both together) plus the five fixed path-scanning policies, each with
collaboration fully off or fully on.  Experiments evaluate every variant on
the same fixed batch of test samples per instance, so differences between
columns are never sampling artifacts.
"""

import csv
import json
import os
import warnings
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from ucarp.evolve import GpConfig, evolve, write_generation_log
from ucarp.instance import build_distance_oracle, load_benchmark
from ucarp.policy import MANUAL_POLICIES, serialize_policy
from ucarp.simulator import (
    SimConfig,
    UnreachableTaskError,
    construct_solution,
    total_cost,
)
from ucarp.stochastic import sample_instance


@dataclass(frozen=True)
class Variant:
    """One column of the comparison tables."""

    name: str
    collab_route_failure: bool
    collab_refill: bool
    policy: str | None = None  # manual policy name; None means GP-trained

    @property
    def trains(self):
        return self.policy is None

    def sim_config(self, estimator="truncate"):
        return SimConfig(
            collab_route_failure=self.collab_route_failure,
            collab_refill=self.collab_refill,
            estimator=estimator,
        )


def _variant_table():
    table = {
        "GPHH": Variant("GPHH", False, False),
        "GPHH-C_RouteFailure": Variant("GPHH-C_RouteFailure", True, False),
        "GPHH-C_Refill": Variant("GPHH-C_Refill", False, True),
        "GPHH-C": Variant("GPHH-C", True, True),
    }
    for k in range(1, 6):
        table[f"PS{k}"] = Variant(f"PS{k}", False, False, policy=f"PS{k}")
        table[f"PS{k}-C"] = Variant(f"PS{k}-C", True, True, policy=f"PS{k}")
    return table


VARIANTS = _variant_table()


# ---------------------------------------------------------------------------
# paired evaluation
# ---------------------------------------------------------------------------


def test_seeds(seed_base, count=500):
    """The fixed per-instance test seeds: seed_base, seed_base+1, ..."""
    return [int(seed_base) + i for i in range(count)]


def evaluate_on_samples(policy, instance, config, samples, oracle=None):
    """Mean solution cost over prebuilt samples, plus the exclusion count.

    Samples whose impassable edges make a task unreachable cannot be scored
    at all; they are skipped and counted rather than poisoning the mean.
    """
    if oracle is None:
        oracle = build_distance_oracle(instance)
    costs = []
    excluded = 0
    for sample in samples:
        try:
            sol = construct_solution(instance, sample, policy, config, oracle=oracle)
        except UnreachableTaskError:
            excluded += 1
            continue
        costs.append(total_cost(sol, sample))
    if not costs:
        return float("nan"), excluded
    return float(np.mean(costs)), excluded


def test_performance(policy, instance, config=None, seeds=None, oracle=None):
    """Mean total cost of ``policy`` over the fixed test samples."""
    config = config or SimConfig()
    if seeds is None:
        seeds = test_seeds(DEFAULT_TEST_SEED_BASE)
    samples = [sample_instance(instance, s) for s in seeds]
    mean, excluded = evaluate_on_samples(policy, instance, config, samples, oracle)
    if excluded:
        warnings.warn(
            f"{excluded} of {len(samples)} samples were unreachable and excluded"
        )
    return mean


DEFAULT_TEST_SEED_BASE = 100_000


# ---------------------------------------------------------------------------
# rank-sum test
# ---------------------------------------------------------------------------


def _midranks(values):
    """Ranks 1..n with tied values sharing their average rank."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _exact_rank_sum_tail(doubled_ranks, n1, w2):
    """P(rank sum ≤ w2/2) and P(≥) by counting subsets of size n1.

    Midranks are halves of integers, so doubling makes subset sums integral
    and a plain count-by-sum table enumerates the whole permutation null.
    """
    total = int(sum(doubled_ranks))
    table = np.zeros((n1 + 1, total + 1), dtype=float)
    table[0, 0] = 1.0
    for r in doubled_ranks:
        r = int(r)
        table[1:, r:] += table[:-1, :total + 1 - r].copy()
    counts = table[n1]
    n_subsets = counts.sum()
    w2 = int(round(w2))
    return counts[:w2 + 1].sum() / n_subsets, counts[w2:].sum() / n_subsets


def wilcoxon_rank_sum(a, b):
    """Two-sided rank-sum p-value: exact up to 10 per side, normal beyond.

    The exact branch counts every assignment of the pooled midranks to the
    first group; the large-sample branch uses the tie-corrected normal
    approximation.  Identical pooled values give p = 1 outright.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n1, n2 = len(a), len(b)
    if n1 < 2 or n2 < 2:
        raise ValueError("need at least two observations per side")
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return 1.0
    ranks = _midranks(pooled)
    w = ranks[:n1].sum()

    if n1 <= 10 and n2 <= 10:
        doubled = np.rint(2 * ranks).astype(int)
        p_le, p_ge = _exact_rank_sum_tail(doubled, n1, 2 * w)
        return min(1.0, 2.0 * min(p_le, p_ge))

    n = n1 + n2
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = ((tie_counts**3 - tie_counts).sum()) / (n * (n - 1))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    z = (w - n1 * (n + 1) / 2.0) / np.sqrt(var)
    return float(erfc(abs(z) / np.sqrt(2.0)))


def compare_runs(a, b, alpha=0.05):
    """Verdict for run-mean batch ``a`` against ``b``: win, draw, or lose.

    Lower cost is better, so ``a`` wins when it is significantly smaller.
    """
    p = wilcoxon_rank_sum(a, b)
    if p >= alpha:
        return "draw", p
    return ("win", p) if np.mean(a) < np.mean(b) else ("lose", p)


# ---------------------------------------------------------------------------
# experiment specs
# ---------------------------------------------------------------------------


@dataclass
class ExperimentSpec:
    """A declarative description of one comparison run."""

    instances: list
    variants: list
    runs: int = 1
    estimator: str = "truncate"
    seed_base: int = DEFAULT_TEST_SEED_BASE
    test_samples: int = 500
    output_dir: str = "results"
    gp: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        unknown = [v for v in self.variants if v not in VARIANTS]
        if unknown:
            raise ValueError(f"unknown variants: {unknown}")
        if not self.instances:
            raise ValueError("at least one instance is required")


def load_spec(path):
    """Read an ExperimentSpec from a JSON (or, where supported, TOML) file."""
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError as exc:
            raise RuntimeError(
                "TOML specs need Python 3.11+; use the JSON form instead"
            ) from exc
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    else:
        with open(path) as fh:
            raw = json.load(fh)
    return ExperimentSpec(**raw)


def train_seed(instance_name, run):
    """Deterministic GP master seed, shared by all variants of a run."""
    return zlib.crc32(f"{instance_name}|run{run}".encode()) & 0x7FFFFFFF


def _gp_config(spec, variant, seed):
    return GpConfig(
        sim=variant.sim_config(spec.estimator),
        seed=seed,
        **spec.gp,
    )


# ---------------------------------------------------------------------------
# the harness
# ---------------------------------------------------------------------------


@dataclass
class TestReport:
    rows: list
    summary: list
    win_draw_lose: list
    paths: dict


def run_experiment(spec, progress=None):
    """Execute a spec end to end and write its report files.

    Produces, under ``spec.output_dir``:

    - ``runs.csv``: one row per (instance, variant, run) with the test mean;
    - ``summary.csv``: per (instance, variant) aggregates;
    - ``win_draw_lose.csv``: pairwise verdict counts over instances;
    - ``report.txt``: the aligned human-readable summary;
    - ``<instance>/<variant>_run<k>.gplog``: per-generation training logs.

    Everything except the training logs (which carry wall-clock timings) is
    byte-identical across reruns of the same spec.
    """
    os.makedirs(spec.output_dir, exist_ok=True)
    note = progress or (lambda text: None)
    rows = []
    by_cell = {}

    for name in spec.instances:
        instance = load_benchmark(name)
        oracle = build_distance_oracle(instance)
        seeds = test_seeds(spec.seed_base, spec.test_samples)
        samples = [sample_instance(instance, s) for s in seeds]

        for vname in spec.variants:
            variant = VARIANTS[vname]
            config = variant.sim_config(spec.estimator)
            n_runs = spec.runs if variant.trains else 1
            means = []
            for run in range(n_runs):
                row = {
                    "instance": name, "variant": vname, "run": run,
                    "train_seed": "", "policy": "", "mean_test_cost": "",
                    "excluded_samples": 0, "error": "",
                }
                try:
                    if variant.trains:
                        seed = train_seed(name, run)
                        row["train_seed"] = seed
                        best, log = evolve(instance, _gp_config(spec, variant, seed))
                        policy = best.policy
                        logdir = os.path.join(spec.output_dir, name)
                        os.makedirs(logdir, exist_ok=True)
                        write_generation_log(
                            log, os.path.join(logdir, f"{vname}_run{run}.gplog")
                        )
                    else:
                        policy = MANUAL_POLICIES[variant.policy]
                    mean, excluded = evaluate_on_samples(
                        policy, instance, config, samples, oracle
                    )
                    row["policy"] = serialize_policy(policy)
                    row["mean_test_cost"] = repr(mean)
                    row["excluded_samples"] = excluded
                    means.append(mean)
                    note(f"{name} {vname} run {run}: {mean:.2f}")
                except Exception as exc:  # record the failure, keep going
                    row["error"] = f"{type(exc).__name__}: {exc}"
                    note(f"{name} {vname} run {run}: FAILED {row['error']}")
                rows.append(row)
            by_cell[(name, vname)] = means

    summary = []
    for (name, vname), means in by_cell.items():
        summary.append({
            "instance": name, "variant": vname, "runs": len(means),
            "mean": repr(float(np.mean(means))) if means else "",
            "std": repr(float(np.std(means, ddof=1))) if len(means) > 1 else "",
        })

    wdl = []
    for i, va in enumerate(spec.variants):
        for vb in spec.variants[i + 1:]:
            tally = {"win": 0, "draw": 0, "lose": 0}
            compared = 0
            for name in spec.instances:
                a = by_cell.get((name, va), [])
                b = by_cell.get((name, vb), [])
                if len(a) < 2 or len(b) < 2:
                    continue
                verdict, _ = compare_runs(a, b)
                tally[verdict] += 1
                compared += 1
            if compared:
                wdl.append({
                    "variant_a": va, "variant_b": vb, "instances": compared,
                    "wins": tally["win"], "draws": tally["draw"],
                    "losses": tally["lose"],
                })

    paths = _write_report_files(spec, rows, summary, wdl)
    return TestReport(rows, summary, wdl, paths)


def _write_csv(path, rows, fields):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def _write_report_files(spec, rows, summary, wdl):
    out = spec.output_dir
    paths = {
        "runs": os.path.join(out, "runs.csv"),
        "summary": os.path.join(out, "summary.csv"),
        "win_draw_lose": os.path.join(out, "win_draw_lose.csv"),
        "report": os.path.join(out, "report.txt"),
    }
    _write_csv(paths["runs"], rows,
               ["instance", "variant", "run", "train_seed", "policy",
                "mean_test_cost", "excluded_samples", "error"])
    _write_csv(paths["summary"], summary,
               ["instance", "variant", "runs", "mean", "std"])
    _write_csv(paths["win_draw_lose"], wdl,
               ["variant_a", "variant_b", "instances", "wins", "draws",
                "losses"])

    lines = [
        "test configuration",
        f"  test seeds: {spec.seed_base} + i, i < {spec.test_samples}",
        f"  estimator: {spec.estimator}   runs per trained variant: {spec.runs}",
        "",
        f"{'instance':<12}{'variant':<22}{'runs':>5}{'mean':>12}{'std':>10}",
    ]
    for row in summary:
        mean = f"{float(row['mean']):.2f}" if row["mean"] else "-"
        std = f"{float(row['std']):.2f}" if row["std"] else "-"
        lines.append(f"{row['instance']:<12}{row['variant']:<22}"
                     f"{row['runs']:>5}{mean:>12}{std:>10}")
    if wdl:
        lines += ["", f"{'pair':<44}{'win':>5}{'draw':>6}{'lose':>6}"]
        for row in wdl:
            pair = f"{row['variant_a']} vs {row['variant_b']}"
            lines.append(f"{pair:<44}{row['wins']:>5}{row['draws']:>6}"
                         f"{row['losses']:>6}")
    with open(paths["report"], "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return paths
