"""Command-line front end: ``acperf <command> [options]``.

Exit status: 0 success, 1 validation/runtime error, 2 bad usage.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from acperf import bounds, harness
from acperf.allocation import Allocation, even_allocation, make_allocation
from acperf.errors import AcperfError
from acperf.estimation import estimate, plug_in_moments
from acperf.io import atomic_write
from acperf.plotting import sweep_svg
from acperf.scenario import (MomentSummary, ScenarioMeta, example_scenario, exact_moments,
                             load_matrix, load_meta, load_scenario, random_scenario,
                             sample_matrix, save_matrix, save_meta, save_scenario)

_ALLOC_TAG, _INST_TAG, _EST_TAG = 11, 12, 13


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text, out):
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _load_source(args):
    if args.scenario and args.matrix:
        raise AcperfError("give either --scenario or --matrix, not both")
    if args.scenario:
        return load_scenario(args.scenario)
    if args.matrix:
        if not args.meta:
            raise AcperfError("--matrix needs --meta")
        return load_matrix(args.matrix, load_meta(args.meta))
    raise AcperfError("one of --scenario or --matrix is required")


def _load_matrix(args):
    return load_matrix(args.matrix, load_meta(args.meta))


def cmd_synth(args):
    if args.preset == "example":
        s = example_scenario()
    else:
        s = random_scenario(args.configs, args.instances, args.outcomes, args.seed,
                            u_lo=args.u_lo, u_hi=args.u_hi, across=args.across,
                            interaction=args.interaction, within=args.within, name=args.name)
    writes = [(args.out, None)]
    if args.matrix_out:
        if args.P is None:
            raise AcperfError("--matrix-out needs --P")
        M = args.M or len(s.configs)
        matrix = sample_matrix(s, M, args.P, args.R, harness._rng(args.seed, _INST_TAG))
        writes.append((args.matrix_out, matrix))
    save_scenario(s, args.out)
    for path, matrix in writes[1:]:
        save_matrix(matrix, path)
        if args.meta_out:
            save_meta(matrix.meta, args.meta_out)


def cmd_moments(args):
    src = _load_source(args)
    configs = args.config or list(src.configs)
    rows = []
    for c in configs:
        m = exact_moments(src, c) if args.scenario else plug_in_moments(src, c)
        rows.append({"config": c, **m.to_dict()})
    _emit(_dump(rows), args.out)


def cmd_estimate(args):
    src = _load_source(args)
    alloc = make_allocation(args.allocation, args.N, args.K, harness._rng(args.seed, _ALLOC_TAG), args.batch)
    binding = args.instances.split(",") if args.instances else None
    if args.matrix and binding is None:
        pick = harness._rng(args.seed, _INST_TAG).choice(len(src.instances), size=args.K, replace=False)
        binding = [src.instances[i] for i in pick]
    replicates = "with" if args.allocation == "replacement" and args.matrix else "without"
    value = estimate(src, args.config, alloc, binding, harness._rng(args.seed, _EST_TAG), replicates)
    _emit(_dump({"config": args.config, "estimate": value, "allocation": args.allocation,
                 "counts": list(alloc.counts), "instances": binding}), args.out)


def cmd_bound(args):
    meta = load_meta(args.meta) if args.meta else None
    if args.alloc:
        alloc = Allocation(tuple(args.alloc))
    elif args.N is not None and args.K is not None:
        alloc = even_allocation(args.N, args.K, harness._rng(args.seed, _ALLOC_TAG))
    else:
        raise AcperfError("give --alloc or both --N and --K")
    C = args.C if args.C is not None else (meta.C if meta else None)
    if C is None:
        raise AcperfError("give --C or --meta")
    pick = lambda flag, key: flag if flag is not None else (getattr(meta, key) if meta else None)
    inp = bounds.BoundInput(
        delta=args.delta, alloc=alloc, C=C,
        moments=MomentSummary(0.0, args.wi, args.ai, "exact"), m=args.m,
        h=pick(args.h, "num_params"), lipschitz=pick(args.lipschitz, "lipschitz"),
        radius=pick(args.radius, "radius"))
    _emit(_dump(bounds.evaluate(args.method, inp, args.epsilon).to_dict()), args.out)


def _write_sweep(result, args, title):
    texts = [(args.out, result.to_csv_text())]
    if args.json:
        texts.append((args.json, _dump(result.to_dict())))
    if args.plot:
        texts.append((args.plot, sweep_svg(result, title=title)))
    if not args.out:
        sys.stdout.write(texts.pop(0)[1])
    for path, text in texts:
        atomic_write(path, text)


def cmd_compare(args):
    matrix = _load_matrix(args)
    r1 = list(harness.STANDARD_R1_GRID) if args.paper_grid and args.r1 is None else (args.r1 or [0.5])
    r2 = list(harness.STANDARD_R2_GRID) if args.paper_grid and args.r2 is None else (args.r2 or list(harness.STANDARD_R2_GRID))
    result = harness.compare_estimators(matrix, r1, r2, args.reps, args.seed, args.batch, args.threads)
    _write_sweep(result, args, f"estimator comparison ({matrix.meta.name})")


def cmd_sweep(args):
    matrix = _load_matrix(args)
    protocol = harness.SweepProtocol(K=args.K, test_size=args.test_size,
                                     runs_per_instance=args.runs_per_instance,
                                     grid=tuple(args.grid) if args.grid else None)
    result = harness.sweep(args.axis, matrix, protocol, args.reps, args.seed, args.threads)
    _write_sweep(result, args, f"{args.axis} sweep ({matrix.meta.name})")


def cmd_fit(args):
    cols = harness.read_sweep_csv(args.input)
    x_name = args.x or {"f_m": "m", "f_N": "N", "f_K": "K"}[args.kind]
    y_name = f"{args.series}_mean" if args.series else "mean"
    for name in (x_name, y_name):
        if name not in cols:
            raise AcperfError(f"{args.input} has no column {name!r}")
    fit = harness.fit_curve(args.kind, np.column_stack([cols[x_name], cols[y_name]]))
    _emit(_dump({**fit.to_dict(), "x": x_name, "y": y_name}), args.out)


def cmd_coverage(args):
    s = load_scenario(args.scenario)
    configs = args.configs.split(",") if args.configs else list(s.configs)
    alloc = make_allocation(args.allocation, args.N, args.K, harness._rng(args.seed, _ALLOC_TAG), args.batch)
    res = harness.coverage_trial(s, configs, alloc, args.delta, args.trials,
                                 harness._rng(args.seed, _EST_TAG))
    _emit(_dump({**res.to_dict(), "delta": args.delta, "counts": list(alloc.counts)}), args.out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed for every random stream")
    common.add_argument("--out", help="output file (stdout when omitted)")

    p = argparse.ArgumentParser(prog="acperf", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic discrete scenario (and sampled matrix)")
    s.add_argument("--preset", choices=["random", "example"], default="random")
    s.add_argument("--configs", type=int, default=10)
    s.add_argument("--instances", type=int, default=20)
    s.add_argument("--outcomes", type=int, default=3)
    s.add_argument("--u-lo", type=float, default=0.0)
    s.add_argument("--u-hi", type=float, default=10.0)
    s.add_argument("--across", type=float, default=1.0)
    s.add_argument("--interaction", type=float, default=0.5)
    s.add_argument("--within", type=float, default=1.0)
    s.add_argument("--name", default="synthetic")
    s.add_argument("--matrix-out")
    s.add_argument("--meta-out")
    s.add_argument("--M", type=int)
    s.add_argument("--P", type=int)
    s.add_argument("--R", type=int, default=5)
    s.set_defaults(func=cmd_synth, needs_out=True)

    src = argparse.ArgumentParser(add_help=False)
    src.add_argument("--scenario")
    src.add_argument("--matrix")
    src.add_argument("--meta")

    s = sub.add_parser("moments", parents=[common, src], help="exact or plug-in moment summaries")
    s.add_argument("--config", action="append")
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("estimate", parents=[common, src], help="training performance of one configuration")
    s.add_argument("--config", required=True)
    s.add_argument("--allocation", choices=["even", "batch", "replacement"], default="even")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--batch", type=int, default=5)
    s.add_argument("--instances", help="comma-separated instance ids bound to the K positions")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("bound", parents=[common], help="evaluate an estimation-error bound")
    s.add_argument("--method", choices=list(bounds.METHODS), default="finite")
    s.add_argument("--delta", type=float, default=0.05)
    s.add_argument("--m", type=int)
    s.add_argument("--N", type=int)
    s.add_argument("--K", type=int)
    s.add_argument("--alloc", type=_ints, help="explicit run counts, e.g. 5,5,2")
    s.add_argument("--C", type=float)
    s.add_argument("--wi", type=float, default=0.0, help="within-instance variance")
    s.add_argument("--ai", type=float, default=0.0, help="across-instance variance")
    s.add_argument("--h", type=int)
    s.add_argument("--lipschitz", type=float)
    s.add_argument("--radius", type=float)
    s.add_argument("--epsilon", type=float, help="deviation for --method tail")
    s.add_argument("--meta", help="scenario metadata JSON supplying C, h, lipschitz, radius")
    s.set_defaults(func=cmd_bound)

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--matrix", required=True)
    out.add_argument("--meta", required=True)
    out.add_argument("--reps", type=int, default=harness.DEFAULT_REPS,
                     help=f"repetitions (full-scale runs use {harness.STANDARD_REPS})")
    out.add_argument("--threads", type=int, help=f"worker threads (default: ${harness.THREADS_ENV} or all cores)")
    out.add_argument("--json", help="also write the JSON envelope here")
    out.add_argument("--plot", help="also write an SVG chart here")

    s = sub.add_parser("compare", parents=[common, out], help="compare even / batch / with-replacement estimators")
    s.add_argument("--r1", type=_floats)
    s.add_argument("--r2", type=_floats)
    s.add_argument("--paper-grid", action="store_true", help="r1 0.1..0.5 step 0.05, r2 0.25..4 step 0.25")
    s.add_argument("--batch", type=int, default=5)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("sweep", parents=[common, out], help="uniform/train error sweep over m, N or K")
    s.add_argument("--axis", choices=["m", "N", "K"], required=True)
    s.add_argument("--K", type=int)
    s.add_argument("--test-size", type=int)
    s.add_argument("--runs-per-instance", type=int)
    s.add_argument("--grid", type=_ints)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("fit", parents=[common], help="fit f_m, f_N or f_K to a sweep CSV")
    s.add_argument("--kind", choices=list(harness.FIT_KINDS), required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--series", default="uniform", help="series column prefix ('' for the headline mean)")
    s.add_argument("--x", help="x column (default: the axis of the kind)")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("coverage", parents=[common], help="empirical violation rate of the finite bound")
    s.add_argument("--scenario", required=True)
    s.add_argument("--configs", help="comma-separated subset (default: all)")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--allocation", choices=["even", "batch", "replacement"], default="even")
    s.add_argument("--batch", type=int, default=5)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--trials", type=int, default=10_000)
    s.set_defaults(func=cmd_coverage)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "needs_out", False) and not args.out:
        parser.error(f"{args.command} requires --out")
    try:
        args.func(args)
    except (AcperfError, OSError) as exc:
        print(f"acperf {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
