"""Command-line interface: ``locsketch <command> [options]``.

Exit codes: 0 on success, 2 for invalid input, 3 for numerical failure.
"""
import argparse
import csv
import io as _io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import _accel
from .errors import NumericalError, ValidationError
from .estimate import EstimatorConfig, estimate_block_coherence, exact_block_importance
from .harness import (
    STRATEGIES,
    SyntheticSpec,
    bench_apply,
    generate,
    load_dataset,
    mean_ratios,
    phase_transition,
    sweep_ratio,
)
from .io import read_fmx, read_matrix, write_fmx
from .linalg import PartitionedMatrix
from .measures import allocate, block_coherence, orthobasis, profile_json
from .rng import RandomSource
from .solvers import (
    RidgeProblem,
    approx_matmul,
    matmul_error,
    ridge_exact,
    ridge_sketched,
)

REFERENCE_BENCH = [(2**18, 2**10), (2**20, 2**12), (2**22, 2**14)]
DESK_BENCH = [(2**14, 2**6), (2**16, 2**8)]


def _ints(text):
    return [int(v) for v in text.split(",") if v]


def _floats(text):
    return [float(v) for v in text.split(",") if v]


def _pairs(text):
    out = []
    for item in text.split(","):
        n, j = item.split(":")
        out.append((int(n), int(j)))
    return out


# -- output ------------------------------------------------------------------


def _flatten(rec):
    flat = {}
    for k, v in rec.items():
        if isinstance(v, dict):
            for kk, vv in v.items():
                flat[f"{k}.{kk}"] = vv
        elif isinstance(v, (list, tuple)):
            flat[k] = json.dumps(list(v))
        else:
            flat[k] = v
    return flat


def _emit(args, records):
    """Write records as JSON lines (or CSV) to ``--out``, else to stdout."""
    records = [dict(r, threads=args.threads) for r in records]
    if args.format == "csv":
        rows = [_flatten(r) for r in records]
        fields = []
        for r in rows:
            fields.extend(k for k in r if k not in fields)
        buf = _io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = "".join(json.dumps(r) + "\n" for r in records)
    if args.out:
        with open(args.out, "a") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _say(args, text):
    # Human summaries go to stderr when records own stdout.
    print(text, file=sys.stderr if not args.out else sys.stdout)


# -- problem sources ---------------------------------------------------------


def _spec_from_args(args):
    spectrum = tuple(_floats(args.spectrum)) if args.spectrum else None
    rank = len(spectrum) if spectrum else (args.rank if args.rank else args.cols)
    return SyntheticSpec(
        n_total=args.n,
        blocks=args.blocks,
        cols=args.cols,
        spectrum=spectrum,
        target_sd=args.target_sd,
        lam=args.lam,
        rank=rank,
        coherence="planted" if args.planted is not None else "incoherent",
        planted_block=args.planted or 0,
        planted_strength=args.strength if args.planted is not None else 0.0,
        noise_sigma=args.noise,
        seed=args.data_seed,
    )


def _problem_from_args(args):
    """``(PartitionedMatrix A, b, lam)`` from ``--data DIR`` or synthetic flags."""
    if args.data:
        root = Path(args.data)
        meta = json.loads((root / "meta.json").read_text())
        a = read_fmx(root / "A.fmx")
        b = read_fmx(root / "b.fmx")[:, 0]
        rows = meta.get("block_rows")
        if args.blocks_override:
            pa = PartitionedMatrix.split(a, args.blocks_override)
        else:
            pa = PartitionedMatrix(a, tuple(rows)) if rows else PartitionedMatrix.split(a, 1)
        lam = args.lam_override if args.lam_override is not None else meta.get("lam", args.lam)
        return pa, b, lam
    spec = _spec_from_args(args)
    a, b, _ = generate(spec)
    return a, b, spec.lam


def _ridge_problem(args):
    a, b, lam = _problem_from_args(args)
    return RidgeProblem(a, b, lam)


def _write_dataset(outdir, a, b, meta, x_true=None):
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_fmx(out / "A.fmx", a.data)
    write_fmx(out / "b.fmx", b)
    if x_true is not None:
        write_fmx(out / "x_true.fmx", x_true)
    meta = dict(meta, block_rows=list(a.block_rows), shape=list(a.data.shape))
    (out / "meta.json").write_text(json.dumps(meta, indent=2))


# -- commands ----------------------------------------------------------------


def cmd_gen(args):
    spec = _spec_from_args(args)
    a, b, x_true = generate(spec)
    _write_dataset(args.outdir, a, b, {"spec": spec.to_dict(), "lam": spec.lam}, x_true)
    print(f"wrote {args.outdir}: A {a.data.shape}, {a.n_blocks} blocks")


def cmd_gamma(args):
    a, b, _ = _problem_from_args(args)
    if args.with_b:
        a = a.with_data(np.column_stack([a.data, b]))
    profile = block_coherence(orthobasis(a))
    alloc = allocate(args.m0, profile) if args.m0 else None
    print(profile_json(profile, alloc))


def cmd_estimate(args):
    a, _, _ = _problem_from_args(args)
    cfg = EstimatorConfig(
        rows_per_round=args.rows_per_round,
        stable_rounds=args.stable_rounds,
        max_rounds=args.max_rounds,
        omega=args.omega,
    )
    res = estimate_block_coherence(a, cfg, RandomSource(args.seed))
    if args.format == "json":
        print(res.to_json())
        return
    exact = exact_block_importance(a)
    order = np.argsort(exact)
    for j in order:
        print(f"{exact[j]:.10g},{res.gammas_hat[j]:.10g}")
    if not res.converged:
        print(f"# not converged after {res.rounds_used} rounds", file=sys.stderr)


def _operator(strategy, m_total, problem, seed):
    return STRATEGIES[strategy](m_total, problem, RandomSource(seed), {})


def cmd_multiply(args):
    a, b, lam = _problem_from_args(args)
    problem = RidgeProblem(a, b, lam)
    y = a.with_data(np.column_stack([a.data, b])) if args.y == "Ab" else a.with_data(b)
    s = _operator(args.strategy, args.m_total, problem, args.seed)
    t0 = time.perf_counter_ns()
    p_hat = approx_matmul(s, a, y)
    elapsed = time.perf_counter_ns() - t0
    err = matmul_error(a, y, p_hat)
    _emit(args, [{
        "schema_version": 1,
        "experiment": "multiply",
        "strategy": args.strategy,
        "m_total": args.m_total,
        "m_actual": s.n_rows,
        "seed": args.seed,
        "relative_error": err,
        "wall_time_ns": elapsed,
    }])


def cmd_ridge(args):
    problem = _ridge_problem(args)
    exact = ridge_exact(problem)
    rec = {"schema_version": 1, "experiment": "ridge", "f_star": exact.objective,
           "seed": args.seed}
    if args.strategy != "exact":
        s = _operator(args.strategy, args.m_total, problem, args.seed)
        t0 = time.perf_counter_ns()
        sol = ridge_sketched(s, problem)
        rec.update(
            strategy=args.strategy,
            m_total=args.m_total,
            m_actual=s.n_rows,
            f_hat=sol.objective,
            ratio=sol.objective / exact.objective,
            wall_time_ns=time.perf_counter_ns() - t0,
        )
    _emit(args, [rec])


def cmd_sweep(args):
    problem = _ridge_problem(args)
    strategies = args.strategies.split(",")
    records = sweep_ratio(problem, _ints(args.m_grid), strategies, args.trials, args.seed,
                          diagnostics=args.diagnostics)
    _emit(args, records)
    for name, by_m in mean_ratios(records).items():
        cells = " ".join(f"{m}:{r:.5f}" for m, r in by_m.items())
        _say(args, f"{name:>10} {cells}")


def cmd_phase(args):
    problem = _ridge_problem(args)
    m_grid, eps_grid = _ints(args.m_grid), _floats(args.eps_grid)
    prob, records = phase_transition(problem, m_grid, eps_grid, args.trials, args.strategy,
                                     args.seed)
    _emit(args, records)
    _say(args, "M\\eps," + ",".join(f"{e:g}" for e in eps_grid))
    for m, row in zip(m_grid, prob):
        _say(args, f"{m}," + ",".join(f"{v:.2f}" for v in row))


def cmd_bench(args):
    configs = REFERENCE_BENCH if args.full else (_pairs(args.configs) if args.configs else DESK_BENCH)
    kinds = args.kinds.split(",")
    rows = bench_apply(configs, _ints(args.m_list), args.d, args.repeats, kinds, args.seed)
    for r in rows:
        r.update(schema_version=1, experiment="bench", backend=_accel.BACKEND)
    _emit(args, rows)
    for r in rows:
        med = "skipped" if r["median_s"] is None else f"{r['median_s']:.4g} s"
        _say(args, f"{r['kind']:>8} N={r['n']:<8} J={r['J']:<6} M={r['m']:<5} {med}")


def cmd_load(args):
    ds = load_dataset(args.path, args.label_column, args.standardize, args.subsample, args.seed,
                      skip_header=args.skip_header)
    labels = ds.labels - ds.labels.mean() if args.center_labels else ds.labels
    a = ds.partitioned(args.blocks)
    meta = {"source": str(args.path), "lam": args.lam, "standardized": args.standardize,
            "kept_columns": ds.kept_columns.tolist()}
    if args.outdir:
        _write_dataset(args.outdir, a, labels, meta)
    print(json.dumps({"rows": a.total_rows, "cols": a.cols, "blocks": a.n_blocks,
                      "outdir": args.outdir}))


# -- parser ------------------------------------------------------------------


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="root seed for sketches")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="append records to this JSON-lines/CSV file")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def _problem_flags():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("problem source")
    g.add_argument("--data", help="directory written by 'gen' or 'load'")
    g.add_argument("--blocks-override", type=int, help="re-split --data into this many blocks")
    g.add_argument("--lam-override", type=float, help="lambda for --data problems")
    g.add_argument("--n", type=int, default=2000, help="total rows")
    g.add_argument("--blocks", type=int, default=10)
    g.add_argument("--cols", type=int, default=50)
    g.add_argument("--rank", type=int, default=50)
    g.add_argument("--spectrum", help="explicit descending singular values, comma separated")
    g.add_argument("--target-sd", type=float, default=8.5)
    g.add_argument("--lam", type=float, default=0.15)
    g.add_argument("--planted", type=int, help="block index that receives planted coherence")
    g.add_argument("--strength", type=float, default=0.9)
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("--data-seed", type=int, default=0)
    return p


def build_parser():
    parser = argparse.ArgumentParser(prog="locsketch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common, prob = _common(), _problem_flags()
    strategies = sorted(STRATEGIES)

    p = sub.add_parser("gen", parents=[common, prob], help="write a synthetic problem")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("gamma", parents=[common, prob], help="exact block coherence")
    p.add_argument("--m0", type=int, help="also print the allocation for this M_0")
    p.add_argument("--with-b", action="store_true", help="use an orthobasis of [A b]")
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("estimate", parents=[common, prob], help="estimate block importance")
    p.add_argument("--rows-per-round", type=int)
    p.add_argument("--stable-rounds", type=int, default=2)
    p.add_argument("--max-rounds", type=int, default=10)
    p.add_argument("--omega", choices=("gaussian", "fourier"), default="gaussian")
    p.set_defaults(func=cmd_estimate, format="text")

    p = sub.add_parser("multiply", parents=[common, prob], help="sketched A^T Y and its error")
    p.add_argument("--m-total", type=int, required=True)
    p.add_argument("--strategy", choices=strategies, default="nonuniform")
    p.add_argument("--y", choices=("b", "Ab"), default="Ab")
    p.set_defaults(func=cmd_multiply)

    p = sub.add_parser("ridge", parents=[common, prob], help="exact or sketched ridge")
    p.add_argument("--m-total", type=int, default=400)
    p.add_argument("--strategy", choices=["exact"] + strategies, default="nonuniform")
    p.set_defaults(func=cmd_ridge)

    p = sub.add_parser("sweep", parents=[common, prob], help="quality ratio versus M")
    p.add_argument("--m-grid", default="100,200,400,800,1600")
    p.add_argument("--strategies", default="dense,uniform,nonuniform")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--diagnostics", action="store_true", help="add lhs9/lhs10/delta_norm")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("phase", parents=[common, prob], help="success probability grid")
    p.add_argument("--m-grid", default="100,200,400,800")
    p.add_argument("--eps-grid", default="0.01,0.02,0.05,0.1,0.2,0.5")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--strategy", choices=strategies, default="uniform")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("bench", parents=[common], help="sketch apply timings")
    p.add_argument("--configs", help="comma separated N:J pairs")
    p.add_argument("--m-list", default="600,1400,2200,3000")
    p.add_argument("--d", type=int, default=40)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--kinds", default="block,fourier,dense")
    p.add_argument("--full", action="store_true", help="larger reference configurations")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("load", parents=[common], help="ingest a delimited dataset")
    p.add_argument("path")
    p.add_argument("--label-column", type=int, default=0)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--center-labels", action="store_true")
    p.add_argument("--subsample", type=int)
    p.add_argument("--skip-header", action="store_true")
    p.add_argument("--blocks", type=int, default=1)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--outdir")
    p.set_defaults(func=cmd_load)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.threads = _accel.set_threads(args.threads)
    try:
        args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
