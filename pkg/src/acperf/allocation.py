"""Run-count vectors (n_1, ..., n_K) for an experimental setting of N runs.

Allocations index instances by position only; binding positions to
concrete instances is left to the caller.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from acperf.errors import AcperfError


@dataclass(frozen=True)
class Allocation:
    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts:
            raise AcperfError("an allocation needs at least one instance position")
        if min(counts) < 0:
            raise AcperfError("run counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def K(self) -> int:
        return len(self.counts)

    @property
    def n_max(self) -> int:
        return max(self.counts)

    @property
    def sum_sq(self) -> int:
        return sum_of_squares(self)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)


def _check(N, K):
    if K < 1:
        raise AcperfError(f"K must be at least 1, got {K}")
    if N < 0:
        raise AcperfError(f"N must be non-negative, got {N}")


def even_allocation(N: int, K: int, seed=None) -> Allocation:
    """Spread N runs as evenly as possible; the N mod K extra runs go to random positions."""
    _check(N, K)
    q, extra = divmod(N, K)
    counts = np.full(K, q, dtype=np.int64)
    if extra:
        rng = np.random.default_rng(seed)
        counts[rng.choice(K, size=extra, replace=False)] += 1
    return Allocation(tuple(counts))


def batch_allocation(N: int, K: int, batch: int = 5, seed=None) -> Allocation:
    """Give ``batch`` runs to randomly chosen distinct positions until N is spent.

    The last chosen position receives the residual ``N mod batch`` runs.
    """
    _check(N, K)
    if batch < 1:
        raise AcperfError("batch must be at least 1")
    needed = -(-N // batch)
    if needed > K:
        raise AcperfError(f"N={N} in batches of {batch} needs {needed} instances but K={K}")
    counts = np.zeros(K, dtype=np.int64)
    if needed:
        rng = np.random.default_rng(seed)
        picked = rng.choice(K, size=needed, replace=False)
        counts[picked] = batch
        if N % batch:
            counts[picked[-1]] = N % batch
    return Allocation(tuple(counts))


def replacement_allocation(N: int, K: int, seed=None) -> Allocation:
    """N single runs, each on a position drawn uniformly with replacement."""
    _check(N, K)
    rng = np.random.default_rng(seed)
    return Allocation(tuple(rng.multinomial(N, np.full(K, 1.0 / K))))


def sum_of_squares(a: Allocation) -> int:
    return sum(c * c for c in a.counts)


ALLOCATORS = {
    "even": even_allocation,
    "batch": batch_allocation,
    "replacement": replacement_allocation,
}


def make_allocation(kind: str, N: int, K: int, seed=None, batch: int = 5) -> Allocation:
    if kind == "batch":
        return batch_allocation(N, K, batch, seed)
    try:
        return ALLOCATORS[kind](N, K, seed)
    except KeyError:
        raise AcperfError(f"unknown allocation kind {kind!r}; choose from {sorted(ALLOCATORS)}") from None
