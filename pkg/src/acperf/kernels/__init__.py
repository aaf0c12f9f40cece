"""Hot kernels: per-configuration training means over a performance matrix.

Two kernels cover every estimator the harness needs:

``train_means_without``
    replicate columns are taken without replacement inside each
    (configuration, instance) cell; the ``counts[k]`` replicates with the
    smallest ``keys`` are used.
``train_means_with``
    each run draws its replicate column independently (``picks``).

The compiled backend is used when importable; ``ACPERF_PURE_PYTHON=1``
forces the numpy fallback.  Both backends agree to rounding error.
"""
import os
from contextlib import contextmanager

import numpy as np

from acperf.kernels import _pure

try:
    if os.environ.get("ACPERF_PURE_PYTHON"):
        raise ImportError("pure-python backend forced")
    from acperf.kernels import _core
except ImportError:
    _core = None

_BACKENDS = {"python": _pure}
if _core is not None:
    _BACKENDS["cython"] = _core

_impl = _core if _core is not None else _pure
BACKEND = "cython" if _core is not None else "python"


def available_backends():
    return sorted(_BACKENDS)


@contextmanager
def use_backend(name):
    """Temporarily route kernel calls to backend ``name``."""
    global _impl, BACKEND
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    saved = _impl, BACKEND
    _impl, BACKEND = _BACKENDS[name], name
    try:
        yield
    finally:
        _impl, BACKEND = saved


def _prep(values, inst, counts):
    values = np.ascontiguousarray(values, dtype=np.float64)
    inst = np.ascontiguousarray(inst, dtype=np.int64)
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    if values.ndim != 3:
        raise ValueError("values must be an (M, P, R) array")
    if inst.shape != counts.shape or inst.ndim != 1:
        raise ValueError("inst and counts must be 1-d arrays of equal length")
    if counts.min(initial=0) < 0 or counts.sum() < 1:
        raise ValueError("counts must be non-negative with a positive total")
    if inst.size and (inst.min() < 0 or inst.max() >= values.shape[1]):
        raise ValueError("instance index out of range")
    return values, inst, counts


def train_means_without(values, inst, counts, keys):
    """Mean utility per configuration, replicates sampled without replacement.

    Parameters
    ----------
    values : (M, P, R) array
    inst : (K,) int array of instance indices into axis 1
    counts : (K,) int array, runs per training position, each <= R
    keys : (M, K, R) array of sort keys (typically uniforms)
    """
    values, inst, counts = _prep(values, inst, counts)
    keys = np.ascontiguousarray(keys, dtype=np.float64)
    M, _, R = values.shape
    if keys.shape != (M, inst.size, R):
        raise ValueError(f"keys must have shape {(M, inst.size, R)}, got {keys.shape}")
    if counts.max() > R:
        raise ValueError(f"a position asks for {counts.max()} runs but only {R} replicates exist")
    return _impl.train_means_without(values, inst, counts, keys)


def train_means_with(values, inst, counts, picks):
    """Mean utility per configuration, each run's replicate drawn independently.

    ``picks`` is (M, N) with run order matching ``np.repeat(inst, counts)``.
    """
    values, inst, counts = _prep(values, inst, counts)
    picks = np.ascontiguousarray(picks, dtype=np.int64)
    M, _, R = values.shape
    if picks.shape != (M, int(counts.sum())):
        raise ValueError(f"picks must have shape {(M, int(counts.sum()))}, got {picks.shape}")
    if picks.size and (picks.min() < 0 or picks.max() >= R):
        raise ValueError("replicate pick out of range")
    return _impl.train_means_with(values, inst, counts, picks)
