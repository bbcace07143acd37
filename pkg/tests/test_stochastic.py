"""Sampling and demand-estimation tests.

The truncated-normal conditional excess is checked against a quadrature
oracle: the two integrals are evaluated numerically and their ratio is the
reference value, so the closed form under test never appears on both sides.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from ucarp.instance import Edge, Instance, load_benchmark
from ucarp.stochastic import (
    RELATIVE_STDEV,
    InstanceSample,
    remaining_demand,
    sample_instance,
    truncated_normal_excess,
)


def excess_by_quadrature(mean, sigma, cutoff):
    """Reference E[X - cutoff | X > cutoff] from numerical integration.

    Integrates the standardized variable with a pure relative-error target;
    with the default absolute tolerance the far-tail masses (~1e-24 at 10
    sigma) would drown in quadrature error.
    """
    a = (cutoff - mean) / sigma
    num = quad(lambda z: (z - a) * norm.pdf(z), a, a + 45,
               limit=400, epsabs=0, epsrel=1e-10)[0]
    den = quad(lambda z: norm.pdf(z), a, a + 45,
               limit=400, epsabs=0, epsrel=1e-10)[0]
    return sigma * num / den


def two_vertex_instance():
    return Instance("tiny", 2, (Edge(1, 2, 1.0, 1.0, 1.0),), 1, 1.0)


def star_instance():
    # 200 spokes; only the first is a task
    edges = tuple(
        Edge(1, k, 1.0, 1.0, 1.0 if k == 2 else 0.0) for k in range(2, 202)
    )
    return Instance("star", 201, edges, 1, 1.0)


# ---------------------------------------------------------------------------
# truncated-normal excess
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "mean,sigma,cutoff",
    [
        (10.0, 2.0, 11.0),
        (10.0, 2.0, 6.0),
        (10.0, 2.0, 10.0),
        (1.0, 0.2, 0.5),
        (1.0, 0.2, 1.8),
        (7.3, 1.46, 14.0),
        (40.0, 8.0, 40.0),
        (40.0, 8.0, 120.0),
        (5.0, 1.0, 25.0),  # 20 sigma out, still within quadrature's reach
    ],
)
def test_excess_matches_quadrature(mean, sigma, cutoff):
    want = excess_by_quadrature(mean, sigma, cutoff)
    got = truncated_normal_excess(mean, sigma, cutoff)
    assert got == pytest.approx(want, rel=1e-6)


def test_excess_frozen_anchors():
    # values pinned from the quadrature oracle
    assert truncated_normal_excess(10, 2, 11) == pytest.approx(
        1.282155540736, rel=1e-9
    )
    assert truncated_normal_excess(1, 0.2, 0.5) == pytest.approx(
        0.503527565097, rel=1e-9
    )
    assert truncated_normal_excess(7.3, 1.46, 14.0) == pytest.approx(
        0.293339815145, rel=1e-9
    )


def test_excess_far_tail_is_finite_and_small():
    # 50 sigma out the pdf/sf ratio underflows; the asymptote takes over
    v = truncated_normal_excess(1.0, 0.2, 1.0 + 50 * 0.2)
    assert np.isfinite(v) and 0 < v < 0.2 / 40
    # and it keeps shrinking as the cutoff recedes
    further = truncated_normal_excess(1.0, 0.2, 1.0 + 80 * 0.2)
    assert 0 < further < v


def test_excess_continuous_at_tail_handover():
    # the switch to the asymptote happens where sf underflows (~alpha 38);
    # values on both sides must agree to first order
    lo = truncated_normal_excess(0.0, 1.0, 37.0)
    hi = truncated_normal_excess(0.0, 1.0, 39.0)
    assert lo > hi > 0
    assert hi == pytest.approx(1 / 39.0, rel=1e-2)


def test_excess_vectorized_matches_scalar():
    means = np.array([10.0, 1.0, 7.3])
    sigmas = means * RELATIVE_STDEV
    cutoffs = np.array([11.0, 0.5, 9.0])
    batch = truncated_normal_excess(means, sigmas, cutoffs)
    singles = [
        truncated_normal_excess(m, s, c)
        for m, s, c in zip(means, sigmas, cutoffs)
    ]
    assert np.allclose(batch, singles, rtol=1e-12)


def test_excess_rejects_bad_sigma():
    with pytest.raises(ValueError):
        truncated_normal_excess(1.0, 0.0, 0.5)


@settings(max_examples=200, deadline=None)
@given(
    mean=st.floats(0.5, 50),
    frac1=st.floats(0.0, 3.0),
    frac2=st.floats(0.05, 1.0),
)
def test_excess_decreasing_in_cutoff_and_bounded(mean, frac1, frac2):
    sigma = RELATIVE_STDEV * mean
    c1 = frac1 * mean
    c2 = c1 + frac2 * mean
    e1 = truncated_normal_excess(mean, sigma, c1)
    e2 = truncated_normal_excess(mean, sigma, c2)
    # conditioning on exceeding a higher bar leaves less expected overshoot
    assert e1 > e2 > 0
    # and conditioning only ever raises the mean above the unconditional one
    assert e1 > mean - c1 - 1e-9 * mean


def test_excess_approaches_plain_mean_far_below():
    # cutoff 8 sigma below the mean: conditioning is vacuous
    v = truncated_normal_excess(10.0, 2.0, 10.0 - 16.0)
    assert v == pytest.approx(16.0, rel=1e-12)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def test_sample_deterministic_and_seed_forms_agree():
    inst = load_benchmark("gdb1")
    a = sample_instance(inst, 42)
    b = sample_instance(inst, 42)
    c = sample_instance(inst, np.random.Generator(np.random.PCG64(42)))
    assert np.array_equal(a.demands, b.demands)
    assert np.array_equal(a.costs, b.costs)
    assert np.array_equal(a.demands, c.demands)
    assert np.array_equal(a.costs, c.costs)
    assert a.seed == 42 and c.seed is None
    d = sample_instance(inst, 43)
    assert not np.array_equal(a.demands, d.demands)


def test_sample_draw_order_is_demands_then_costs():
    # instance with a non-required edge: the demand block must skip it
    inst = Instance(
        "toy",
        3,
        (Edge(1, 2, 4.0, 6.0, 2.0), Edge(2, 3, 3.0, 3.0, 5.0), Edge(1, 3, 7.0, 0.0, 0.0)),
        1,
        8.0,
    )
    got = sample_instance(inst, 7)
    rng = np.random.Generator(np.random.PCG64(7))
    dmeans = np.array([2.0, 5.0])
    cmeans = np.array([4.0, 3.0, 7.0])
    want_d = np.maximum(rng.normal(dmeans, 0.2 * dmeans), 0.0)
    want_c = rng.normal(cmeans, 0.2 * cmeans)
    assert np.array_equal(got.demands, want_d)
    assert np.array_equal(got.costs, want_c)


def test_sample_clamps_negative_demand_to_zero():
    # seed chosen so the single demand draw lands below zero
    s = sample_instance(two_vertex_instance(), 986200)
    assert s.demands[0] == 0.0
    assert np.isfinite(s.costs[0]) and s.costs[0] > 0


def test_sample_marks_nonpositive_cost_impassable():
    # seed chosen so one spoke's cost draw lands below zero
    s = sample_instance(star_instance(), 16032)
    assert np.isinf(s.costs[182])
    assert not s.accessible[182]
    assert s.accessible.sum() == 199
    assert np.isinf(s.cost_of(184, 1))  # edges[182] is (1, 184)


def test_sample_accessors_and_alignment():
    inst = load_benchmark("gdb1")
    s = sample_instance(inst, 5)
    t = inst.tasks[3]
    assert s.demand_of(t.v, t.u) == s.demands[3]
    e = inst.edges[10]
    assert s.cost_of(e.u, e.v) == s.costs[10]
    assert s.demands.shape == (22,) and s.costs.shape == (22,)


def test_sample_rejects_misaligned_arrays():
    inst = two_vertex_instance()
    with pytest.raises(ValueError):
        InstanceSample(inst, [1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        InstanceSample(inst, [1.0], [1.0, 1.0])


def test_sample_means_converge_to_instance_means():
    inst = load_benchmark("gdb1")
    rng = np.random.Generator(np.random.PCG64(0))
    demand_sum = 0.0
    cost_sum = 0.0
    n = 4000
    for _ in range(n):
        s = sample_instance(inst, rng)
        demand_sum += s.demands.mean()
        cost_sum += s.costs[s.accessible].mean()
    assert demand_sum / n == pytest.approx(1.0, abs=0.01)
    mean_cost = np.mean([e.traversal_cost for e in inst.edges])
    assert cost_sum / n == pytest.approx(mean_cost, rel=0.02)


# ---------------------------------------------------------------------------
# remaining-demand estimation
# ---------------------------------------------------------------------------


def toy_sample():
    inst = Instance(
        "toy",
        3,
        (Edge(1, 2, 4.0, 4.0, 2.0), Edge(2, 3, 3.0, 3.0, 5.0)),
        1,
        8.0,
    )
    return InstanceSample(inst, [2.6, 4.1], [4.0, 3.0])


def test_untouched_tasks_estimate_at_the_mean_in_both_modes():
    s = toy_sample()
    for mode in ("actual", "truncate"):
        est = remaining_demand(s, [0.0, 0.0], [False, False], mode)
        assert np.array_equal(est, [2.0, 5.0])


def test_actual_mode_reads_the_realization():
    s = toy_sample()
    est = remaining_demand(s, [1.1, 0.0], [True, False], "actual")
    assert est[0] == pytest.approx(2.6 - 1.1)
    assert est[1] == 5.0
    # collecting more than the realization leaves nothing, not a negative
    est = remaining_demand(s, [3.0, 0.0], [True, False], "actual")
    assert est[0] == 0.0


def test_truncate_mode_matches_the_scalar_formula():
    s = toy_sample()
    est = remaining_demand(s, [1.1, 2.0], [True, True], "truncate")
    assert est[0] == pytest.approx(truncated_normal_excess(2.0, 0.4, 1.1))
    assert est[1] == pytest.approx(truncated_normal_excess(5.0, 1.0, 2.0))
    # a partially-served task is never estimated from its realized value
    assert est[0] != pytest.approx(2.6 - 1.1)


def test_unknown_estimator_mode_rejected():
    with pytest.raises(ValueError):
        remaining_demand(toy_sample(), [0.0, 0.0], [False, False], "guess")
