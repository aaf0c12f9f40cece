"""Training-performance estimator, its variance, and plug-in moments."""
from __future__ import annotations

import numpy as np

from acperf import kernels
from acperf.allocation import Allocation
from acperf.errors import AcperfError, ReplicateCapError
from acperf.scenario import DiscreteScenario, MomentSummary, PerformanceMatrix

__all__ = [
    "MomentSummary", "estimate", "estimator_variance", "tau_squared",
    "plug_in_moments", "variance_components", "train_means",
]


def train_means(matrix: PerformanceMatrix, alloc: Allocation, instance_idx, rng,
                replicates: str = "without", configs=None) -> np.ndarray:
    """Training performance of every configuration (or the ``configs`` rows).

    All configurations share the allocation and the training instances;
    replicate columns are drawn independently per configuration.
    ``replicates="without"`` takes distinct replicates per cell and
    requires n_i <= R; ``"with"`` draws each run's replicate independently.
    """
    values = matrix.values if configs is None else matrix.values[configs]
    counts = alloc.as_array()
    instance_idx = np.asarray(instance_idx, dtype=np.int64)
    if instance_idx.shape != counts.shape:
        raise AcperfError(f"{instance_idx.size} instances bound to {counts.size} positions")
    if alloc.total < 1:
        raise AcperfError("allocation has no runs (N = 0)")
    M, _, R = values.shape
    if replicates == "without":
        if alloc.n_max > R:
            raise ReplicateCapError(
                f"allocation puts {alloc.n_max} runs on one instance but the matrix stores R={R}")
        keys = rng.random((M, counts.size, R))
        return kernels.train_means_without(values, instance_idx, counts, keys)
    if replicates == "with":
        picks = rng.integers(0, R, size=(M, alloc.total))
        return kernels.train_means_with(values, instance_idx, counts, picks)
    raise AcperfError(f"replicates must be 'without' or 'with', got {replicates!r}")


def estimate(source, config, alloc: Allocation, instance_binding=None, seed=None,
             replicates: str = "without") -> float:
    """Mean utility over the N runs prescribed by ``alloc``.

    For a :class:`PerformanceMatrix`, ``instance_binding`` names the
    training instance at each allocation position and runs read replicate
    columns.  For a :class:`DiscreteScenario`, runs are fresh outcome draws;
    with no binding the K training instances are themselves drawn from the
    instance distribution.
    """
    if alloc.total < 1:
        raise AcperfError("allocation has no runs (N = 0)")
    rng = np.random.default_rng(seed)
    if isinstance(source, PerformanceMatrix):
        if instance_binding is None:
            raise AcperfError("a matrix source needs an instance binding")
        idx = source.instance_indices(instance_binding)
        c = source.config_index(config)
        return float(train_means(source, alloc, idx, rng, replicates, configs=[c])[0])
    if isinstance(source, DiscreteScenario):
        c = source.config_index(config)
        if instance_binding is None:
            idx = source.draw_instances(alloc.K, rng)
        else:
            lookup = {z: i for i, z in enumerate(source.instances)}
            try:
                idx = np.array([lookup[z] for z in instance_binding], dtype=np.int64)
            except KeyError as exc:
                raise AcperfError(f"unknown instance {exc.args[0]!r}") from None
            if idx.size != alloc.K:
                raise AcperfError(f"{idx.size} instances bound to {alloc.K} positions")
        runs = np.repeat(idx, alloc.counts)
        return float(source.draw_outcomes(c, runs, rng).sum()) / alloc.total
    raise AcperfError(f"unsupported evaluation source {type(source).__name__}")


def estimator_variance(m: MomentSummary, alloc: Allocation) -> float:
    """Variance of the estimator: WI/N + (sum n_i^2 / N^2) AI."""
    N = alloc.total
    if N < 1:
        raise AcperfError("estimator variance needs N >= 1")
    return m.within_var / N + alloc.sum_sq / N**2 * m.across_var


def tau_squared(m: MomentSummary, alloc: Allocation) -> float:
    """Variance proxy WI + (sum n_i^2 / N) AI used by the tail bounds."""
    N = alloc.total
    if N < 1:
        raise AcperfError("tau^2 needs N >= 1")
    return m.within_var + alloc.sum_sq / N * m.across_var


def variance_components(cells) -> tuple[float, float, float]:
    """Balanced one-way random-effects moment estimates for a (P, R) block.

    Returns ``(grand mean, within variance, unclamped across variance)``.
    """
    cells = np.asarray(cells, dtype=np.float64)
    P, R = cells.shape
    if R < 2:
        raise AcperfError("within-instance variance needs R >= 2 replicates")
    if P < 2:
        raise AcperfError("across-instance variance needs P >= 2 instances")
    inst_means = cells.mean(axis=1)
    within = float(cells.var(axis=1, ddof=1).mean())
    across = float(inst_means.var(ddof=1)) - within / R
    return float(cells.mean()), within, across


def plug_in_moments(matrix: PerformanceMatrix, config) -> MomentSummary:
    mean, within, across = variance_components(matrix.values[matrix.config_index(config)])
    return MomentSummary(mean, within, max(0.0, across), "plug-in")
