"""Random realizations of an instance, and remaining-demand estimation.

Task demands and edge traversal costs are normally distributed around the
instance's mean values with a standard deviation of one fifth of the mean.
A realization clamps negative demand draws to zero; a non-positive cost draw
marks the edge impassable for the whole realization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

_SQRT_2PI = float(np.sqrt(2.0 * np.pi))

from .instance import Instance

#: standard deviation of every random quantity, as a fraction of its mean
RELATIVE_STDEV = 0.2

ESTIMATOR_MODES = ("actual", "truncate")


@dataclass
class InstanceSample:
    """One realization of an instance's demands and traversal costs.

    ``demands`` aligns with ``instance.tasks`` and ``costs`` with
    ``instance.edges`` (both file order).  Impassable edges carry an infinite
    cost.  Samples may be built directly with hand-picked arrays, which is how
    the scripted simulator traces set up their scenarios.
    """

    instance: Instance
    demands: np.ndarray
    costs: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        self.demands = np.asarray(self.demands, dtype=float)
        self.costs = np.asarray(self.costs, dtype=float)
        if self.demands.shape != (len(self.instance.tasks),):
            raise ValueError("demand array does not align with the task list")
        if self.costs.shape != (len(self.instance.edges),):
            raise ValueError("cost array does not align with the edge list")

    @property
    def accessible(self) -> np.ndarray:
        """Boolean mask over edges; False where the realization is impassable."""
        return np.isfinite(self.costs)

    def demand_of(self, u: int, v: int) -> float:
        return float(self.demands[self.instance.task_position(u, v)])

    def cost_of(self, u: int, v: int) -> float:
        return float(self.costs[self.instance.edge_position(u, v)])


def _mean_arrays(instance):
    """Mean task demands and mean edge costs as arrays, cached per instance."""
    cached = getattr(instance, "_mean_arrays", None)
    if cached is None:
        cached = (
            np.array([e.demand for e in instance.tasks], dtype=float),
            np.array([e.traversal_cost for e in instance.edges], dtype=float),
        )
        instance._mean_arrays = cached
    return cached


def sample_instance(instance: Instance, seed) -> InstanceSample:
    """Draw one realization of ``instance``.

    ``seed`` is an int or a numpy Generator.  The draw order is fixed: one
    block of task demands in file order, then one block of traversal costs for
    every edge in file order, each via ``Generator.normal``.  Keeping this
    order stable makes every experiment reproducible from its seed list.
    """
    if isinstance(seed, np.random.Generator):
        rng, seed_val = seed, None
    else:
        rng, seed_val = np.random.Generator(np.random.PCG64(seed)), int(seed)
    task_means, cost_means = _mean_arrays(instance)
    demands = rng.normal(task_means, RELATIVE_STDEV * task_means)
    demands = np.maximum(demands, 0.0)
    costs = rng.normal(cost_means, RELATIVE_STDEV * cost_means)
    costs = np.where(costs > 0.0, costs, np.inf)
    return InstanceSample(instance, demands, costs, seed_val)


def truncated_normal_excess(mean, sigma, cutoff):
    """Expected overshoot of N(mean, sigma) above ``cutoff``, given overshoot.

    This is ``E[X - cutoff | X > cutoff]``, the conditional mean of the
    truncated upper tail shifted to start at zero.  Far into the tail the
    normal pdf/sf ratio underflows, so the hazard-rate asymptote
    ``alpha + 1/alpha`` takes over there.  Accepts scalars or arrays.
    """
    mean = np.asarray(mean, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    cutoff = np.asarray(cutoff, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    alpha = (cutoff - mean) / sigma
    sf = ndtr(-alpha)
    pdf = np.exp(-0.5 * alpha * alpha) / _SQRT_2PI
    with np.errstate(divide="ignore", invalid="ignore"):
        primary = mean + sigma * pdf / sf - cutoff
        fallback = sigma * (alpha + 1.0 / alpha) - (cutoff - mean)
    out = np.where(sf > np.finfo(float).tiny, primary, fallback)
    return float(out) if out.ndim == 0 else out


def remaining_demand(sample: InstanceSample, served, touched, mode="truncate"):
    """Estimated demand still to be served, for every task of the sample.

    ``served`` is the amount already collected per task and ``touched`` marks
    tasks whose service has started.  Untouched tasks always estimate at
    their mean demand — nothing has been observed about them yet.  For
    touched tasks the two modes differ:

    - ``"actual"`` reads the realized demand directly (an oracle bound,
      impossible on a real street network);
    - ``"truncate"`` takes the conditional mean of the demand distribution
      given that the demand exceeds what was already collected.
    """
    if mode not in ESTIMATOR_MODES:
        raise ValueError(f"unknown estimator mode {mode!r}")
    means, _ = _mean_arrays(sample.instance)
    served = np.asarray(served, dtype=float)
    touched = np.asarray(touched, dtype=bool)
    out = means.copy()
    if not touched.any():
        return out
    if mode == "actual":
        out[touched] = np.maximum(sample.demands[touched] - served[touched], 0.0)
    else:
        m = means[touched]
        out[touched] = truncated_normal_excess(
            m, RELATIVE_STDEV * m, served[touched]
        )
    return out
