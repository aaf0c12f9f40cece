"""Configuration scenarios: performance matrices and discrete ground-truth models.

A :class:`PerformanceMatrix` holds M configurations x P instances x R
replicate runs of bounded utility.  A :class:`DiscreteScenario` is a fully
enumerable generative model (finite instance distribution, finite outcome
distribution per configuration and instance) whose moments are exact; it
serves as the oracle for every statistical test in the package.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from acperf.errors import AcperfError, MatrixFormatError

METRICS = ("par10", "raw-utility")
PAR10_FACTOR = 10
MATRIX_HEADER = ("config", "instance", "run", "value", "status")
PROB_TOL = 1e-12


@dataclass(frozen=True)
class ScenarioMeta:
    name: str
    metric: str
    u_lo: float
    u_hi: float
    num_params: int = 1
    cutoff: float | None = None
    lipschitz: float | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise AcperfError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if not self.u_lo < self.u_hi:
            raise AcperfError(f"u_lo ({self.u_lo}) must be below u_hi ({self.u_hi})")
        if self.num_params < 1:
            raise AcperfError("num_params must be a positive integer")
        if self.metric == "par10":
            if self.cutoff is None or not self.cutoff > 0:
                raise AcperfError("par10 metric requires a positive cutoff")
            if not math.isclose(self.u_hi, PAR10_FACTOR * self.cutoff, rel_tol=1e-12):
                raise AcperfError(f"par10 requires u_hi = 10 x cutoff = {PAR10_FACTOR * self.cutoff}")
            if self.u_lo < 0:
                raise AcperfError("par10 requires u_lo >= 0")
        for key in ("lipschitz", "radius"):
            val = getattr(self, key)
            if val is not None and not val > 0:
                raise AcperfError(f"{key} must be positive when given")

    @classmethod
    def par10(cls, name, cutoff, **kw):
        kw.setdefault("u_lo", 0.0)
        return cls(name=name, metric="par10", cutoff=float(cutoff),
                   u_hi=PAR10_FACTOR * float(cutoff), **kw)

    @property
    def C(self) -> float:
        """Width of the utility range, U - L."""
        return self.u_hi - self.u_lo

    def to_dict(self) -> dict:
        return {
            "name": self.name, "metric": self.metric, "cutoff": self.cutoff,
            "u_lo": self.u_lo, "u_hi": self.u_hi, "num_params": self.num_params,
            "lipschitz": self.lipschitz, "radius": self.radius,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScenarioMeta":
        unknown = set(d) - {"name", "metric", "cutoff", "u_lo", "u_hi",
                            "num_params", "lipschitz", "radius"}
        if unknown:
            raise MatrixFormatError(f"unknown metadata keys: {sorted(unknown)}")
        metric = d.get("metric", "raw-utility")
        cutoff = d.get("cutoff")
        u_hi = d.get("u_hi")
        if metric == "par10" and u_hi is None and cutoff is not None:
            u_hi = PAR10_FACTOR * float(cutoff)
        u_lo = d.get("u_lo", 0.0 if metric == "par10" else None)
        if u_lo is None or u_hi is None:
            raise MatrixFormatError("metadata needs u_lo and u_hi")
        return cls(
            name=str(d.get("name", "")), metric=metric,
            u_lo=float(u_lo), u_hi=float(u_hi),
            num_params=int(d.get("num_params", 1)),
            cutoff=None if cutoff is None else float(cutoff),
            lipschitz=None if d.get("lipschitz") is None else float(d["lipschitz"]),
            radius=None if d.get("radius") is None else float(d["radius"]),
        )


def load_meta(path) -> ScenarioMeta:
    with open(path) as fh:
        return ScenarioMeta.from_dict(json.load(fh))


def save_meta(meta: ScenarioMeta, path) -> None:
    Path(path).write_text(json.dumps(meta.to_dict(), indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True, eq=False)
class PerformanceMatrix:
    """Utilities of M configurations on P instances, R replicate runs each."""

    configs: tuple
    instances: tuple
    values: np.ndarray
    meta: ScenarioMeta | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        object.__setattr__(self, "configs", tuple(self.configs))
        object.__setattr__(self, "instances", tuple(self.instances))
        if values.ndim != 3:
            raise AcperfError(f"values must be 3-d (M, P, R), got shape {values.shape}")
        if values.shape[:2] != (len(self.configs), len(self.instances)):
            raise AcperfError(
                f"values shape {values.shape} does not match "
                f"{len(self.configs)} configs x {len(self.instances)} instances")
        if min(values.shape) < 1:
            raise AcperfError("matrix dimensions must all be positive")
        if len(set(self.configs)) != len(self.configs) or len(set(self.instances)) != len(self.instances):
            raise AcperfError("duplicate configuration or instance identifiers")
        if not np.all(np.isfinite(values)):
            raise AcperfError("matrix holds non-finite values")
        if self.meta is not None:
            bad = np.argwhere((values < self.meta.u_lo) | (values > self.meta.u_hi))
            if bad.size:
                c, p, r = bad[0]
                raise AcperfError(
                    f"value {values[c, p, r]} at ({self.configs[c]}, {self.instances[p]}, run {r}) "
                    f"outside [{self.meta.u_lo}, {self.meta.u_hi}]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape

    @property
    def runs_per_cell(self) -> int:
        return self.values.shape[2]

    def config_index(self, config) -> int:
        try:
            return self.configs.index(config)
        except ValueError:
            raise AcperfError(f"unknown configuration {config!r}") from None

    def instance_indices(self, instances: Sequence) -> np.ndarray:
        lookup = {z: i for i, z in enumerate(self.instances)}
        try:
            return np.array([lookup[z] for z in instances], dtype=np.int64)
        except KeyError as exc:
            raise AcperfError(f"unknown instance {exc.args[0]!r}") from None

    def equals(self, other: "PerformanceMatrix") -> bool:
        return (self.configs == other.configs and self.instances == other.instances
                and self.values.shape == other.values.shape
                and bool(np.array_equal(self.values, other.values)))


def load_matrix(path, meta: ScenarioMeta, runs: int | None = None) -> PerformanceMatrix:
    """Read a long-form matrix CSV (one row per run).

    Timeouts are scored 10 x cutoff under the par10 metric.  ``runs`` fixes R;
    by default R is the largest run count seen and every cell must match it.
    """
    cells: dict[tuple[str, str], dict[str, float]] = {}
    configs: dict[str, None] = {}
    instances: dict[str, None] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(MATRIX_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise MatrixFormatError(f"{path}: header lacks columns {sorted(missing)}")
        for row in reader:
            line = reader.line_num
            cfg, inst, run = row["config"], row["instance"], row["run"]
            if not cfg or not inst or run in (None, ""):
                raise MatrixFormatError(f"line {line}: empty config, instance or run field")
            status = (row["status"] or "").strip()
            val = _parse_value(row["value"], status, meta, line)
            cell = cells.setdefault((cfg, inst), {})
            if run in cell:
                raise MatrixFormatError(f"line {line}: duplicate run {run!r} for cell ({cfg}, {inst})")
            cell[run] = val
            configs.setdefault(cfg)
            instances.setdefault(inst)
    if not cells:
        raise MatrixFormatError(f"{path}: no data rows")

    R = runs if runs is not None else max(len(c) for c in cells.values())
    values = np.empty((len(configs), len(instances), R))
    for ci, cfg in enumerate(configs):
        for pi, inst in enumerate(instances):
            cell = cells.get((cfg, inst))
            if cell is None:
                raise MatrixFormatError(f"missing cell ({cfg}, {inst}): no rows")
            if len(cell) != R:
                raise MatrixFormatError(f"cell ({cfg}, {inst}) holds {len(cell)} runs, expected {R}")
            values[ci, pi] = [cell[k] for k in sorted(cell, key=_run_key)]
    return PerformanceMatrix(tuple(configs), tuple(instances), values, meta)


def _run_key(run: str):
    try:
        return (0, int(run), run)
    except ValueError:
        return (1, 0, run)


def _parse_value(raw, status, meta: ScenarioMeta, line) -> float:
    if status not in ("ok", "timeout"):
        raise MatrixFormatError(f"line {line}: status must be ok or timeout, got {status!r}")
    if status == "timeout":
        if meta.metric != "par10":
            raise MatrixFormatError(f"line {line}: timeout status requires the par10 metric")
        return PAR10_FACTOR * meta.cutoff
    try:
        val = float(raw)
    except (TypeError, ValueError):
        raise MatrixFormatError(f"line {line}: value {raw!r} is not a number") from None
    if not math.isfinite(val):
        raise MatrixFormatError(f"line {line}: value {raw!r} is not finite")
    if meta.metric == "par10":
        if val < 0:
            raise MatrixFormatError(f"line {line}: negative runtime {val}")
        if val > meta.cutoff:
            raise MatrixFormatError(
                f"line {line}: runtime {val} exceeds cutoff {meta.cutoff} but status is ok")
    if not meta.u_lo <= val <= meta.u_hi:
        raise MatrixFormatError(f"line {line}: value {val} outside [{meta.u_lo}, {meta.u_hi}]")
    return val


def save_matrix(matrix: PerformanceMatrix, path, meta: ScenarioMeta | None = None) -> None:
    meta = meta or matrix.meta
    penalty = PAR10_FACTOR * meta.cutoff if meta is not None and meta.metric == "par10" else None
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MATRIX_HEADER)
        for ci, cfg in enumerate(matrix.configs):
            for pi, inst in enumerate(matrix.instances):
                for r, v in enumerate(matrix.values[ci, pi]):
                    if penalty is not None and v == penalty:
                        w.writerow((cfg, inst, r, repr(float(meta.cutoff)), "timeout"))
                    else:
                        w.writerow((cfg, inst, r, repr(float(v)), "ok"))


@dataclass(frozen=True)
class MomentSummary:
    """Mean, expected within-instance variance and across-instance variance."""

    mean: float
    within_var: float
    across_var: float
    source: str = "exact"

    def __post_init__(self):
        if self.within_var < 0 or self.across_var < 0:
            raise AcperfError("variance components must be non-negative")
        if self.source not in ("exact", "plug-in"):
            raise AcperfError(f"unknown moment source {self.source!r}")

    @property
    def total_var(self) -> float:
        return self.within_var + self.across_var

    def to_dict(self) -> dict:
        return {"mean": self.mean, "within_var": self.within_var,
                "across_var": self.across_var, "source": self.source}


@dataclass(frozen=True)
class DiscreteScenario:
    """Finite-support instance distribution with finite outcome tables.

    ``outcomes[config][i]`` is a sequence of ``(utility, probability)``
    pairs for instance ``instances[i]``.
    """

    instance_probs: tuple
    outcomes: Mapping
    instances: tuple = ()
    name: str = "scenario"
    u_lo: float | None = None
    u_hi: float | None = None
    configs: tuple = field(init=False)

    def __post_init__(self):
        probs = tuple(float(p) for p in self.instance_probs)
        object.__setattr__(self, "instance_probs", probs)
        if not probs:
            raise AcperfError("scenario needs at least one instance")
        insts = tuple(self.instances) or tuple(str(i) for i in range(len(probs)))
        if len(insts) != len(probs):
            raise AcperfError("instances and instance_probs differ in length")
        object.__setattr__(self, "instances", insts)
        _check_distribution(probs, "instance_probs")

        outcomes = {}
        for cfg, rows in self.outcomes.items():
            if len(rows) != len(probs):
                raise AcperfError(f"config {cfg!r} has {len(rows)} outcome lists, expected {len(probs)}")
            table = []
            for i, dist in enumerate(rows):
                dist = tuple((float(u), float(p)) for u, p in dist)
                if not dist:
                    raise AcperfError(f"empty outcome list for ({cfg}, {insts[i]})")
                _check_distribution([p for _, p in dist], f"outcomes[{cfg}][{insts[i]}]")
                table.append(dist)
            outcomes[cfg] = tuple(table)
        if not outcomes:
            raise AcperfError("scenario needs at least one configuration")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "configs", tuple(outcomes))

        utils = [u for rows in outcomes.values() for dist in rows for u, _ in dist]
        lo = min(utils) if self.u_lo is None else float(self.u_lo)
        hi = max(utils) if self.u_hi is None else float(self.u_hi)
        if hi <= lo:
            hi = lo + 1.0
        if min(utils) < lo or max(utils) > hi:
            raise AcperfError(f"outcome utilities fall outside [{lo}, {hi}]")
        object.__setattr__(self, "u_lo", lo)
        object.__setattr__(self, "u_hi", hi)

    @property
    def C(self) -> float:
        return self.u_hi - self.u_lo

    def config_index(self, config) -> int:
        try:
            return self.configs.index(config)
        except ValueError:
            raise AcperfError(f"unknown configuration {config!r}") from None

    def meta(self) -> ScenarioMeta:
        return ScenarioMeta(name=self.name, metric="raw-utility", u_lo=self.u_lo, u_hi=self.u_hi)

    @cached_property
    def _tables(self):
        """Padded (C, Z, O) utility and cumulative-probability arrays."""
        C, Z = len(self.configs), len(self.instance_probs)
        O = max(len(d) for rows in self.outcomes.values() for d in rows)
        util = np.zeros((C, Z, O))
        cdf = np.ones((C, Z, O))
        width = np.zeros((C, Z), dtype=np.int64)
        for c, cfg in enumerate(self.configs):
            for z, dist in enumerate(self.outcomes[cfg]):
                k = len(dist)
                util[c, z, :k] = [u for u, _ in dist]
                util[c, z, k:] = dist[-1][0]
                cum = np.cumsum([p for _, p in dist])
                cum[-1] = 1.0
                cdf[c, z, :k] = cum
                width[c, z] = k
        inst_cdf = np.cumsum(self.instance_probs)
        inst_cdf[-1] = 1.0
        return util, cdf, width, inst_cdf

    def draw_instances(self, size, rng) -> np.ndarray:
        """Instance indices drawn i.i.d. from the instance distribution."""
        inst_cdf = self._tables[3]
        # u < 1 and inst_cdf ends in exactly 1.0, so the index stays in range
        return np.searchsorted(inst_cdf, rng.random(size), side="right")

    def draw_outcomes(self, config_idx, instance_idx, rng) -> np.ndarray:
        """One utility draw per element of the broadcast index arrays."""
        util, cdf, _, _ = self._tables
        if np.ndim(config_idx) == 0:
            # single configuration: index its (Z, O) slab directly, which is much cheaper
            util, cdf = util[config_idx], cdf[config_idx]
            instance_idx = np.asarray(instance_idx)
            u = rng.random(instance_idx.shape)
            return util[instance_idx, (u[..., None] >= cdf[instance_idx]).sum(axis=-1)]
        u = rng.random(np.broadcast_shapes(np.shape(config_idx), np.shape(instance_idx)))
        # u < 1 and every cdf row ends in 1.0, so k never passes the last real outcome
        k = (u[..., None] >= cdf[config_idx, instance_idx]).sum(axis=-1)
        return util[config_idx, instance_idx, k]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "instances": list(self.instances),
            "instance_probs": list(self.instance_probs),
            "u_lo": self.u_lo,
            "u_hi": self.u_hi,
            "outcomes": {
                cfg: {self.instances[i]: [list(p) for p in dist] for i, dist in enumerate(rows)}
                for cfg, rows in self.outcomes.items()
            },
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DiscreteScenario":
        try:
            probs = d["instance_probs"]
            raw = d["outcomes"]
        except KeyError as exc:
            raise MatrixFormatError(f"scenario JSON lacks key {exc.args[0]!r}") from None
        insts = tuple(d.get("instances") or (str(i) for i in range(len(probs))))
        outcomes = {}
        for cfg, per_inst in raw.items():
            if not isinstance(per_inst, Mapping):
                raise MatrixFormatError(f"outcomes[{cfg!r}] must map instance -> [[utility, prob], ...]")
            missing = [z for z in insts if z not in per_inst]
            if missing:
                raise MatrixFormatError(f"outcomes[{cfg!r}] lacks instances {missing}")
            outcomes[cfg] = [per_inst[z] for z in insts]
        return cls(instance_probs=probs, outcomes=outcomes, instances=insts,
                   name=str(d.get("name", "scenario")), u_lo=d.get("u_lo"), u_hi=d.get("u_hi"))


def _check_distribution(probs, what):
    if any(not 0.0 <= p <= 1.0 for p in probs):
        raise AcperfError(f"{what}: probabilities must lie in [0, 1]")
    if abs(math.fsum(probs) - 1.0) > PROB_TOL:
        raise AcperfError(f"{what}: probabilities sum to {math.fsum(probs)!r}, not 1")


def load_scenario(path) -> DiscreteScenario:
    with open(path) as fh:
        return DiscreteScenario.from_dict(json.load(fh))


def save_scenario(s: DiscreteScenario, path) -> None:
    Path(path).write_text(json.dumps(s.to_dict(), indent=2, sort_keys=True) + "\n")


def exact_moments(s: DiscreteScenario, config) -> MomentSummary:
    """Enumerate u, expected within-instance and across-instance variance."""
    if config not in s.outcomes:
        raise AcperfError(f"unknown configuration {config!r}")
    rows = s.outcomes[config]
    u_z = [math.fsum(u * p for u, p in dist) for dist in rows]
    var_z = [math.fsum(p * (u - m) ** 2 for u, p in dist) for dist, m in zip(rows, u_z)]
    probs = s.instance_probs
    mean = math.fsum(p * m for p, m in zip(probs, u_z))
    within = math.fsum(p * v for p, v in zip(probs, var_z))
    across = math.fsum(p * (m - mean) ** 2 for p, m in zip(probs, u_z))
    return MomentSummary(mean, within, across, "exact")


def sample_matrix(s: DiscreteScenario, M: int, P: int, R: int, seed) -> PerformanceMatrix:
    """Draw P instances from the scenario and R runs per (configuration, instance).

    The first M configurations of the scenario are used.  Instance ids are
    ``"<type>#<j>"`` so the underlying scenario instance stays visible.
    """
    if min(M, P, R) < 1:
        raise AcperfError("M, P and R must all be positive")
    if M > len(s.configs):
        raise AcperfError(f"scenario has {len(s.configs)} configurations, {M} requested")
    rng = np.random.default_rng(seed)
    types = s.draw_instances(P, rng)
    cfg = np.arange(M)[:, None, None]
    values = s.draw_outcomes(cfg, types[None, :, None] + np.zeros((1, 1, R), dtype=np.int64), rng)
    ids = tuple(f"{s.instances[t]}#{j}" for j, t in enumerate(types))
    return PerformanceMatrix(s.configs[:M], ids, values, s.meta())


def example_scenario() -> DiscreteScenario:
    """Two equiprobable instances; outcomes {0, 2} on the first, {3, 5} on the second."""
    return DiscreteScenario(
        instance_probs=(0.5, 0.5),
        outcomes={"theta": [[(0.0, 0.5), (2.0, 0.5)], [(3.0, 0.5), (5.0, 0.5)]]},
        instances=("z1", "z2"),
        name="example",
    )


def random_scenario(num_configs: int, num_instances: int, num_outcomes: int = 3, seed=0, *,
                    u_lo: float = 0.0, u_hi: float = 10.0, across: float = 1.0,
                    interaction: float = 0.5, within: float = 1.0,
                    name: str = "synthetic") -> DiscreteScenario:
    """Synthetic scenario with a shared instance-hardness effect.

    Per-instance expected utility is ``center + scale * (across * hardness_z
    + interaction * noise_cz + skill_c)``; runs scatter around it with
    relative spread ``within``.  Utilities are clipped to [u_lo, u_hi].
    """
    if min(num_configs, num_instances, num_outcomes) < 1:
        raise AcperfError("scenario dimensions must be positive")
    rng = np.random.default_rng(seed)
    center, scale = (u_lo + u_hi) / 2, (u_hi - u_lo) / 8
    inst_p = rng.dirichlet(np.full(num_instances, 5.0))
    hardness = rng.standard_normal(num_instances)
    skill = 0.3 * rng.standard_normal(num_configs)
    base = center + scale * (across * hardness[None, :]
                             + interaction * rng.standard_normal((num_configs, num_instances))
                             + skill[:, None])
    spread = within * scale * rng.standard_normal((num_configs, num_instances, num_outcomes))
    utils = np.clip(base[..., None] + spread, u_lo, u_hi)
    out_p = rng.dirichlet(np.ones(num_outcomes), size=(num_configs, num_instances))
    # exact renormalisation so each list sums to 1 within tolerance
    out_p[..., -1] = 1.0 - out_p[..., :-1].sum(axis=-1)
    out_p = np.clip(out_p, 0.0, 1.0)
    inst_p[-1] = 1.0 - inst_p[:-1].sum()
    outcomes = {
        f"c{c:03d}": [[(float(utils[c, z, o]), float(out_p[c, z, o])) for o in range(num_outcomes)]
                      for z in range(num_instances)]
        for c in range(num_configs)
    }
    return DiscreteScenario(tuple(float(p) for p in inst_p), outcomes,
                            tuple(f"z{z:03d}" for z in range(num_instances)),
                            name=name, u_lo=u_lo, u_hi=u_hi)
