"""Resampling experiments on performance matrices.

Every repetition derives its random streams from ``(seed, repetition, ...)``
through :class:`numpy.random.SeedSequence`, so results do not depend on
how repetitions are scheduled across threads.  Aggregates use
:func:`math.fsum` and are invariant to repetition order.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from acperf.allocation import (Allocation, batch_allocation, even_allocation,
                               replacement_allocation)
from acperf.bounds import BoundInput, finite_bound
from acperf.errors import AcperfError, ReplicateCapError
from acperf.estimation import tau_squared, train_means
from acperf.scenario import DiscreteScenario, PerformanceMatrix, exact_moments

THREADS_ENV = "ACPERF_THREADS"
ESTIMATORS = ("even", "batch", "replacement")
AXES = ("estimator-grid", "m", "N", "K")
FIT_KINDS = ("f_m", "f_N", "f_K")
STANDARD_R1_GRID = tuple(round(0.1 + 0.05 * i, 2) for i in range(9))
STANDARD_R2_GRID = tuple(round(0.25 * i, 2) for i in range(1, 17))
STANDARD_REPS = 2500
DEFAULT_REPS = 200

# stream tags keep the per-repetition generators of different purposes apart
_SPLIT, _ALLOC, _REPL, _ORDER = 0, 1, 2, 3


def _rng(seed, *keys) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise AcperfError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        return max(1, n)
    return os.cpu_count() or 1


def _map_reps(fn, reps, n_jobs):
    n_jobs = default_threads() if n_jobs is None else max(1, n_jobs)
    if n_jobs == 1 or reps == 1:
        return [fn(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=min(n_jobs, reps)) as pool:
        return list(pool.map(fn, range(reps)))


def summarize(values) -> tuple[float, float]:
    """Mean and sample standard deviation, both order-independent."""
    vals = [float(v) for v in values]
    if not vals:
        raise AcperfError("nothing to summarize")
    mean = math.fsum(vals) / len(vals)
    if len(vals) == 1:
        return mean, 0.0
    return mean, math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1))


@dataclass(frozen=True)
class SplitPlan:
    train_ids: tuple
    test_ids: tuple
    seed: object = None


def _split_perm(P, p1, p2, rng):
    if p1 < 0 or p2 < 0 or p1 + p2 > P:
        raise AcperfError(f"cannot split {P} instances into {p1} training and {p2} test")
    perm = rng.permutation(P)
    # test first, so training sets of growing size are nested under one permutation
    return perm[p2:p2 + p1], perm[:p2]


def split(instances: Sequence, p1: int, p2: int, seed) -> SplitPlan:
    """Disjoint random training (p1) and test (p2) instance sets."""
    instances = list(instances)
    train, test = _split_perm(len(instances), p1, p2, np.random.default_rng(seed))
    return SplitPlan(tuple(instances[i] for i in train), tuple(instances[i] for i in test), seed)


def _aligned(configs, perf, what):
    if isinstance(perf, Mapping):
        try:
            return np.array([perf[c] for c in configs], dtype=np.float64)
        except KeyError as exc:
            raise AcperfError(f"{what} lacks configuration {exc.args[0]!r}") from None
    arr = np.asarray(perf, dtype=np.float64)
    if arr.shape != (len(configs),):
        raise AcperfError(f"{what} must cover all {len(configs)} configurations")
    return arr


def uniform_es_error(configs, train_perf, true_perf) -> float:
    """Largest signed estimation error, max over configs of (true - train)."""
    if len(configs) == 0:
        raise AcperfError("no configurations")
    return float(np.max(_aligned(configs, true_perf, "true_perf")
                        - _aligned(configs, train_perf, "train_perf")))


def train_es_error(configs, train_perf, true_perf) -> float:
    """Estimation error of the configuration with the best (lowest) training performance."""
    if len(configs) == 0:
        raise AcperfError("no configurations")
    train = _aligned(configs, train_perf, "train_perf")
    best = int(np.argmin(train))  # argmin returns the first index on ties
    return float(_aligned(configs, true_perf, "true_perf")[best] - train[best])


@dataclass(frozen=True)
class SweepPoint:
    coords: dict
    stats: dict  # series name -> (mean, std)
    reps: int


@dataclass(frozen=True)
class SweepResult:
    axis: str
    points: tuple
    series: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.axis not in AXES:
            raise AcperfError(f"unknown sweep axis {self.axis!r}")
        for p in self.points:
            if p.reps < 1 or any(s < 0 for _, s in p.stats.values()):
                raise AcperfError("sweep points need reps >= 1 and std >= 0")

    @property
    def headline(self) -> str:
        return self.series[0]

    @property
    def x_name(self) -> str:
        return "r2" if self.axis == "estimator-grid" else self.axis

    def xy(self, series: str | None = None, x: str | None = None):
        series = series or self.headline
        x = x or self.x_name
        return [(p.coords[x], p.stats[series][0]) for p in self.points]

    def column(self, series: str | None = None, stat: int = 0):
        series = series or self.headline
        return np.array([p.stats[series][stat] for p in self.points])

    def coord_names(self):
        return list(self.points[0].coords) if self.points else [self.x_name]

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        coords = self.coord_names()
        header = coords + ["mean", "std", "reps"]
        for s in self.series:
            header += [f"{s}_mean", f"{s}_std"]
        w.writerow(header)
        for p in self.points:
            m, sd = p.stats[self.headline]
            row = [_fmt(p.coords[c]) for c in coords] + [_fmt(m), _fmt(sd), p.reps]
            for s in self.series:
                row += [_fmt(p.stats[s][0]), _fmt(p.stats[s][1])]
            w.writerow(row)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "axis": self.axis,
            "series": list(self.series),
            "headline": self.headline,
            "metadata": self.metadata,
            "points": [
                {"coords": p.coords, "reps": p.reps,
                 "stats": {k: {"mean": m, "std": s} for k, (m, s) in p.stats.items()}}
                for p in self.points
            ],
        }


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def read_sweep_csv(path) -> dict:
    """Columns of a sweep CSV as float arrays keyed by header name."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise AcperfError(f"{path}: no sweep rows")
    header, body = rows[0], rows[1:]
    try:
        return {h: np.array([float(r[i]) for r in body]) for i, h in enumerate(header)}
    except (ValueError, IndexError):
        raise AcperfError(f"{path}: malformed sweep CSV") from None


def _grid_sizes(P, r1, r2):
    # subtract a hair before ceil so 0.1 * 200 = 20.000000000000004 stays 20
    K = math.ceil(r1 * P - 1e-9)
    return K, math.ceil(r2 * K - 1e-9)


def compare_estimators(matrix: PerformanceMatrix, r1_grid, r2_grid, reps: int = DEFAULT_REPS,
                       seed=0, batch: int = 5, n_jobs: int | None = None) -> SweepResult:
    """Estimation error of the even, batch and with-replacement estimators.

    For each (r1, r2): K = ceil(r1 P), N = ceil(r2 K), split K | P/2
    ``reps`` times.  Splits are shared by all r2 values and all three
    estimators.  The with-replacement estimator draws each run's replicate
    column independently, so it is never limited by R.
    """
    M, P, R = matrix.shape
    if reps < 1:
        raise AcperfError("reps must be at least 1")
    if batch > R:
        raise ReplicateCapError(f"batch={batch} exceeds the R={R} stored replicates")
    P2 = P // 2
    grid = []
    for i, r1 in enumerate(r1_grid):
        for j, r2 in enumerate(r2_grid):
            K, N = _grid_sizes(P, r1, r2)
            if K < 1 or N < 1:
                raise AcperfError(f"r1={r1}, r2={r2} gives K={K}, N={N}; both must be >= 1")
            if K + P2 > P:
                raise AcperfError(f"r1={r1} gives K={K}, which leaves fewer than P/2={P2} test instances")
            if N > R * K:
                raise ReplicateCapError(f"r2={r2}: N={N} exceeds R*K={R * K} available replicates")
            if -(-N // batch) > K:
                raise ReplicateCapError(f"r2={r2}: N={N} in batches of {batch} needs more than K={K} instances")
            grid.append((i, j, float(r1), float(r2), K, N))

    inst_means = matrix.values.mean(axis=2)
    K_by_r1 = {i: K for i, _, _, _, K, _ in grid}

    def one_rep(rep):
        out = np.empty((len(grid), len(ESTIMATORS), 2))
        splits = {i: _split_perm(P, K, P2, _rng(seed, rep, _SPLIT, i)) for i, K in K_by_r1.items()}
        for g, (i, j, _, _, K, N) in enumerate(grid):
            train_idx, test_idx = splits[i]
            true = inst_means[:, test_idx].mean(axis=1)
            for e, est in enumerate(ESTIMATORS):
                arng = _rng(seed, rep, _ALLOC, i, j, e)
                if est == "even":
                    alloc, mode = even_allocation(N, K, arng), "without"
                elif est == "batch":
                    alloc, mode = batch_allocation(N, K, batch, arng), "without"
                else:
                    alloc, mode = replacement_allocation(N, K, arng), "with"
                train = train_means(matrix, alloc, train_idx, _rng(seed, rep, _REPL, i, j, e), mode)
                err = true - train
                out[g, e] = np.abs(err).mean(), err.mean()
        return out

    per_rep = np.stack(_map_reps(one_rep, reps, n_jobs))  # (reps, grid, est, 2)
    names = ([f"{e}_abs" for e in ESTIMATORS] + [f"{e}_signed" for e in ESTIMATORS]
             + ["even_minus_batch_abs", "even_minus_replacement_abs"])
    points = []
    for g, (_, _, r1, r2, K, N) in enumerate(grid):
        block = per_rep[:, g]
        cols = {f"{e}_abs": block[:, k, 0] for k, e in enumerate(ESTIMATORS)}
        cols.update({f"{e}_signed": block[:, k, 1] for k, e in enumerate(ESTIMATORS)})
        cols["even_minus_batch_abs"] = block[:, 0, 0] - block[:, 1, 0]
        cols["even_minus_replacement_abs"] = block[:, 0, 0] - block[:, 2, 0]
        points.append(SweepPoint({"r1": r1, "r2": r2, "K": K, "N": N},
                                 {n: summarize(cols[n]) for n in names}, reps))
    meta = {"scenario": matrix.meta.name if matrix.meta else "", "M": M, "P": P, "R": R,
            "test_size": P2, "batch": batch, "reps": reps, "seed": int(seed),
            "r1_grid": [float(r) for r in r1_grid], "r2_grid": [float(r) for r in r2_grid]}
    return SweepResult("estimator-grid", tuple(points), tuple(names), meta)


@dataclass(frozen=True)
class SweepProtocol:
    """Fixed quantities of an m, N or K sweep; ``None`` picks the standard protocol.

    Defaults: K = P/2 training instances, P/2 test instances,
    N = runs_per_instance * K with runs_per_instance = R, and the full
    grid 1..M, 1..N or 1..P/2 for the swept axis.
    """

    K: int | None = None
    test_size: int | None = None
    runs_per_instance: int | None = None
    grid: tuple | None = None

    def resolve(self, axis, matrix: PerformanceMatrix):
        M, P, R = matrix.shape
        test = P // 2 if self.test_size is None else self.test_size
        K = P // 2 if self.K is None else self.K
        rpi = R if self.runs_per_instance is None else self.runs_per_instance
        if rpi > R:
            raise ReplicateCapError(f"runs_per_instance={rpi} exceeds R={R}")
        if K < 1 or test < 1 or K + test > P:
            raise AcperfError(f"K={K} training + {test} test instances do not fit in P={P}")
        full = {"m": range(1, M + 1), "N": range(1, rpi * K + 1), "K": range(1, P - test + 1)}[axis]
        grid = tuple(int(g) for g in (full if self.grid is None else self.grid))
        if not grid:
            raise AcperfError("empty sweep grid")
        limit = {"m": M, "N": R * K, "K": P - test}[axis]
        if min(grid) < 1 or max(grid) > limit:
            raise AcperfError(f"{axis} grid must lie in [1, {limit}]")
        return K, test, rpi, grid


def sweep(axis: str, matrix: PerformanceMatrix, protocol: SweepProtocol | None = None,
          reps: int = DEFAULT_REPS, seed=0, n_jobs: int | None = None) -> SweepResult:
    """Mean uniform and train estimation error while one of m, N, K varies.

    Uses the even allocation throughout.  The split of repetition r depends
    only on (seed, r), so the N = R*K point of an N sweep equals the m = M
    point of an m sweep run with the same seed.
    """
    if axis not in ("m", "N", "K"):
        raise AcperfError(f"sweep axis must be m, N or K, got {axis!r}")
    if reps < 1:
        raise AcperfError("reps must be at least 1")
    protocol = protocol or SweepProtocol()
    K0, test, rpi, grid = protocol.resolve(axis, matrix)
    M, P, R = matrix.shape
    inst_means = matrix.values.mean(axis=2)
    axis_tag = AXES.index(axis)

    def errors(train_idx, test_idx, N, rep, g):
        K = len(train_idx)
        alloc = even_allocation(N, K, _rng(seed, rep, _ALLOC, axis_tag, g))
        train = train_means(matrix, alloc, train_idx, _rng(seed, rep, _REPL, axis_tag, g))
        true = inst_means[:, test_idx].mean(axis=1)
        return train, true

    def one_rep(rep):
        srng = _rng(seed, rep, _SPLIT)
        if axis == "K":
            perm_train, test_idx = _split_perm(P, P - test, test, srng)
        else:
            perm_train, test_idx = _split_perm(P, K0, test, srng)
        out = np.empty((len(grid), 2))
        if axis == "m":
            train, true = errors(perm_train, test_idx, rpi * K0, rep, 0)
            order = _rng(seed, rep, _ORDER).permutation(M)
            err = (true - train)[order]
            running = np.maximum.accumulate(err)
            best_err = np.empty(M)
            best = None
            for t, c in enumerate(order):
                if best is None or train[c] < train[best] or (train[c] == train[best] and c < best):
                    best = c
                best_err[t] = true[best] - train[best]
            for g, m in enumerate(grid):
                out[g] = running[m - 1], best_err[m - 1]
            return out
        for g, v in enumerate(grid):
            if axis == "N":
                train_idx, N = perm_train, v
            else:
                train_idx, N = perm_train[:v], rpi * v
            train, true = errors(train_idx, test_idx, N, rep, g)
            err = true - train
            out[g] = err.max(), err[int(np.argmin(train))]
        return out

    per_rep = np.stack(_map_reps(one_rep, reps, n_jobs))  # (reps, grid, 2)
    points = tuple(
        SweepPoint({axis: v}, {"uniform": summarize(per_rep[:, g, 0]),
                               "train": summarize(per_rep[:, g, 1])}, reps)
        for g, v in enumerate(grid))
    meta = {"scenario": matrix.meta.name if matrix.meta else "", "M": M, "P": P, "R": R,
            "K": K0, "test_size": test, "runs_per_instance": rpi, "reps": reps,
            "seed": int(seed)}
    return SweepResult(axis, points, ("uniform", "train"), meta)


@dataclass(frozen=True)
class FitResult:
    kind: str
    a: float
    b: float
    residual_norm: float
    r_squared: float
    n_points: int

    def predict(self, x):
        B = _basis(self.kind, np.asarray(x, dtype=np.float64))
        return B @ np.array([self.a, self.b])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b, "residual_norm": self.residual_norm,
                "r_squared": self.r_squared, "n_points": self.n_points}


def _basis(kind, x):
    if kind == "f_m":
        if np.any(x < 1):
            raise AcperfError("f_m needs m >= 1")
        lx = np.log(x)
        return np.column_stack([lx, np.sqrt(lx)])
    if np.any(x <= 0):
        raise AcperfError(f"{kind} needs positive x")
    if kind == "f_N":
        return np.column_stack([np.ones_like(x), np.sqrt(1.0 / x)])
    if kind == "f_K":
        return np.column_stack([1.0 / x, np.sqrt(1.0 / x)])
    raise AcperfError(f"unknown fit kind {kind!r}; choose from {FIT_KINDS}")


def fit_curve(kind: str, points) -> FitResult:
    """Least-squares fit of a * g1(x) + b * g2(x).

    f_m: g = (ln m, sqrt(ln m)); f_N: g = (1, sqrt(1/N)); f_K: g = (1/K, sqrt(1/K)).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise AcperfError("fit_curve needs at least two (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    B = _basis(kind, x)
    if np.linalg.matrix_rank(B) < 2:
        raise AcperfError(f"{kind} design is rank-deficient for these x values")
    coef, *_ = np.linalg.lstsq(B, y, rcond=None)
    resid = y - B @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    return FitResult(kind, float(coef[0]), float(coef[1]), math.sqrt(ss_res), r2, len(pts))


@dataclass(frozen=True)
class CoverageResult:
    rate: float
    epsilon: float
    trials: int
    worst_config: str
    mean_sup_error: float

    def to_dict(self) -> dict:
        return {"rate": self.rate, "epsilon": self.epsilon, "trials": self.trials,
                "worst_config": self.worst_config, "mean_sup_error": self.mean_sup_error}


def coverage_trial(scenario: DiscreteScenario, configs, alloc: Allocation, delta: float,
                   trials: int, seed=0, chunk: int = 2000) -> CoverageResult:
    """Fraction of fresh training draws whose uniform error exceeds the finite bound.

    Each trial draws the K training instances from the scenario's instance
    distribution and the runs from the outcome tables; the error is
    measured against the exact expected utilities.
    """
    configs = list(configs)
    if not configs:
        raise AcperfError("no configurations")
    if trials < 1:
        raise AcperfError("trials must be at least 1")
    moments = [exact_moments(scenario, c) for c in configs]
    taus = [tau_squared(m, alloc) for m in moments]
    worst = int(np.argmax(taus))
    eps = finite_bound(BoundInput(delta, alloc, scenario.C, moments[worst], m=len(configs))).epsilon
    cidx = np.array([scenario.config_index(c) for c in configs])
    u = np.array([m.mean for m in moments])
    counts = alloc.as_array()
    rng = np.random.default_rng(seed)
    sups = []
    for start in range(0, trials, chunk):
        t = min(chunk, trials - start)
        inst = scenario.draw_instances((t, alloc.K), rng)
        runs = np.repeat(inst, counts, axis=1)  # (t, N)
        draws = scenario.draw_outcomes(cidx[:, None, None], runs[None, :, :], rng)
        sups.append((u[:, None] - draws.mean(axis=2)).max(axis=0))
    sup = np.concatenate(sups)
    rate = float(np.count_nonzero(sup > eps)) / trials
    return CoverageResult(rate, eps, trials, str(configs[worst]), math.fsum(sup) / trials)


def write_sweep(result: SweepResult, csv_path, json_path=None) -> None:
    from acperf.io import atomic_write

    atomic_write(csv_path, result.to_csv_text())
    if json_path is not None:
        atomic_write(json_path, json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
