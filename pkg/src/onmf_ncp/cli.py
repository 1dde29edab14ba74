"""Command-line front end: ``onmf-ncp {synth,cluster,eval,bench}``.

Exit codes: 0 converged, 1 usage or I/O error, 2 iteration cap reached,
3 numerical failure (NaN/Inf or a failed line search).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import io as mio
from .baselines import PLUSPLUS, RANDOM, KmeansConfig, kmeans
from .datagen import (
    PAPER_CLUSTER_SIZES,
    PAPER_K,
    PAPER_M,
    PAPER_N,
    PAPER_OUTLIER_FRAC,
    SynthConfig,
    generate_synthetic,
)
from .metrics import (
    adjusted_rand_index,
    clustering_accuracy,
    consensus_map,
    cophenetic_correlation,
    orthogonality_eps,
)
from .penalty import GENERIC, NONSMOOTH, SMOOTH, penalty_value
from .solvers import LineSearchError, NcpConfig, NumericalError, PalmConfig, ncp_solve, random_init

DATA_MAX = "data-max"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MAX_ITER = 2
EXIT_NUMERICAL = 3

THREADS_ENV = "ONMF_NCP_THREADS"

NCP_METHODS = {"sncp": SMOOTH, "nsncp": NONSMOOTH, "sncp-generic": GENERIC}
KMEANS_METHODS = {"kmeans": RANDOM, "kmeans++": PLUSPLUS}
METHODS = tuple(NCP_METHODS) + tuple(KMEANS_METHODS)


class UsageError(Exception):
    pass


# -- argument helpers ------------------------------------------------------

def _int_list(text: str) -> list:
    """Parse non-negative integers: ``"0-9"``, ``"1,3,5"`` or a mix like ``"0-2,7"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            try:
                lo, hi = int(lo), int(hi)
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad range {part!r}") from None
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            try:
                out.append(int(part))
            except ValueError:
                raise argparse.ArgumentTypeError(f"not an integer: {part!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _float_list(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def _seed_list(text: str) -> list:
    seeds = _int_list(text)
    if any(s < 0 for s in seeds):
        raise argparse.ArgumentTypeError("seeds must be non-negative")
    return seeds


def _upper_bound(text: str):
    if text == DATA_MAX:
        return DATA_MAX
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or {DATA_MAX!r}, got {text!r}") from None


def _threads_default():
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV}={env!r} is not an integer") from None
        if n < 1:
            raise UsageError(f"{THREADS_ENV} must be at least 1")
        return n
    return os.cpu_count() or 1


def _add_solver_args(p):
    g = p.add_argument_group("NCP solver")
    g.add_argument("--rho0", type=float, default=1e-8, help="initial penalty weight (default 1e-8)")
    g.add_argument("--gamma", type=float, default=1.1, help="penalty growth factor (default 1.1)")
    g.add_argument("--eps-orth", type=float, default=1e-10, help="orthogonality level below which rho stops growing")
    g.add_argument("--eps-stop", type=float, default=None, help="outer stop on max(eps_orth, eps_nr); method default if omitted")
    g.add_argument("--max-outer", type=int, default=1000)
    g.add_argument("--mu", type=float, default=0.0)
    g.add_argument("--nu", type=float, default=1e-10)
    g.add_argument("--eps-palm", type=float, default=3e-3)
    g.add_argument("--max-inner", type=int, default=500)
    g.add_argument("--step-safety", type=float, default=PalmConfig.step_safety)
    g.add_argument("--w-lower", type=float, default=None)
    g.add_argument("--w-upper", type=_upper_bound, default=None,
                   help="upper bound on the entries of W: a number or 'data-max' for max(X)")
    g.add_argument("--p", type=float, default=1.0, help="generic penalty p")
    g.add_argument("--q", type=float, default=2.0, help="generic penalty q")
    g.add_argument("--v", type=float, default=2.0, help="generic penalty v")
    g = p.add_argument_group("K-means")
    g.add_argument("--kmeans-max-iters", type=int, default=300)
    g.add_argument("--kmeans-tol", type=float, default=1e-6)


def _add_synth_args(p, snr_list=False):
    p.add_argument("--m", type=int, default=PAPER_M)
    p.add_argument("--n", type=int, default=PAPER_N)
    p.add_argument("--k", type=int, default=PAPER_K)
    p.add_argument("--sizes", type=_int_list, default=None, help="cluster sizes, comma separated (default: benchmark sizes)")
    if snr_list:
        p.add_argument("--snr-db", type=_float_list, default=[-3.0, 1.0], help="comma separated SNR grid in dB")
    else:
        p.add_argument("--snr-db", type=float, default=-3.0)
    p.add_argument("--outliers", type=float, default=PAPER_OUTLIER_FRAC, help="outlier fraction")


def _synth_config(args, snr, seed) -> SynthConfig:
    if args.sizes is not None:
        sizes = args.sizes
    elif (args.n, args.k) == (PAPER_N, PAPER_K):
        sizes = PAPER_CLUSTER_SIZES
    else:
        base, extra = divmod(args.n, args.k)
        sizes = [base + (1 if i < extra else 0) for i in range(args.k)]
    try:
        return SynthConfig(M=args.m, N=args.n, K=args.k, cluster_sizes=sizes, snr_db=snr,
                           outlier_frac=args.outliers, seed=seed)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _ncp_config(args, method, seed, data_max=None) -> NcpConfig:
    w_upper = data_max if args.w_upper == DATA_MAX else args.w_upper
    try:
        palm = PalmConfig(eps_palm=args.eps_palm, max_inner_iters=args.max_inner, step_safety=args.step_safety)
        return NcpConfig(
            method=NCP_METHODS[method], rho0=args.rho0, gamma=args.gamma, eps_orth=args.eps_orth,
            eps_stop=args.eps_stop, max_outer_iters=args.max_outer, mu=args.mu, nu=args.nu, palm=palm,
            w_lower=args.w_lower, w_upper=w_upper, p=args.p, q=args.q, v=args.v, seed=seed,
        )
    except ValueError as err:
        raise UsageError(str(err)) from None


def _kmeans_config(args, method, K, seed, centroids=None) -> KmeansConfig:
    init = KMEANS_METHODS[method] if centroids is None else centroids
    try:
        return KmeansConfig(K=K, max_iters=args.kmeans_max_iters, tol=args.kmeans_tol,
                            init=init, seed=seed)
    except ValueError as err:
        raise UsageError(str(err)) from None


# -- running one method ----------------------------------------------------

def _one_hot(labels, K):
    H = np.zeros((K, labels.size))
    H[labels, np.arange(labels.size)] = 1.0
    return H


def run_method(X, K, method, args, seed, init=None, truth=None, timing=False) -> tuple:
    """Run one clustering method; returns ``(labels, report_dict, status)``.

    ``init`` is the starting FactorPair for the NCP methods; K-means uses
    its W as the initial centroids.
    """
    t0 = time.perf_counter()
    if method in NCP_METHODS:
        cfg = _ncp_config(args, method, seed, float(X.max()))
        res = ncp_solve(X, K, cfg, init=init)
        labels = res.labels.labels
        trace = []
        for rec in res.trace:
            d = dict(vars(rec))
            if not timing:
                d.pop("wall_time")
            trace.append(d)
        spec = cfg.penalty(res.rho)
        final = {
            "eps_orth": orthogonality_eps(res.H),
            "penalty_value": penalty_value(res.H, spec),
            "objective": res.trace[-1].objective,
            "rho": res.rho,
            "zero_columns": res.zero_columns,
            "degenerate_columns": int(res.labels.degenerate.sum()),
        }
        config = {"ncp": cfg.to_dict()}
        status = res.status
    else:
        kcfg = _kmeans_config(args, method, K, seed, None if init is None else init.W)
        res = kmeans(X, kcfg)
        labels = res.labels
        trace = [{"iteration": i, "inertia": v} for i, v in enumerate(res.history)]
        final = {
            "eps_orth": orthogonality_eps(_one_hot(labels, K)),
            "penalty_value": 0.0,
            "objective": res.inertia,
        }
        config = {"kmeans": {"K": kcfg.K, "max_iters": kcfg.max_iters, "tol": kcfg.tol,
                             "init": kcfg.init_name, "seed": kcfg.seed}}
        status = "converged" if res.converged else "max_iter"
    if truth is not None:
        final["acc"] = clustering_accuracy(labels, truth)
        final["ari"] = adjusted_rand_index(labels, truth)
    report = {"method": method, "seed": seed, "K": K, "status": status, "config": config,
              "trace": trace, "final": final}
    if timing:
        report["wall_time_seconds"] = time.perf_counter() - t0
    return labels, report, status


# -- subcommands -----------------------------------------------------------

def cmd_synth(args) -> int:
    cfg = _synth_config(args, args.snr_db, args.seed)
    data = generate_synthetic(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = "mtx" if args.format == mio.MATRIX_MARKET else "csv"
    mio.write_matrix(out / f"X.{ext}", data.X, args.format)
    mio.write_labels(out / "truth.txt", data.truth)
    print(f"wrote {out / f'X.{ext}'} ({cfg.M} x {cfg.N}) and {out / 'truth.txt'}")
    return EXIT_OK


def _labels_path_for(base: Path, seed: int, many: bool) -> Path:
    if not many:
        return base
    return base.with_name(f"{base.stem}.seed{seed}{base.suffix or '.txt'}")


def cmd_cluster(args) -> int:
    X = mio.read_matrix(args.input, args.format)
    truth = mio.read_labels(args.truth) if args.truth else None
    if truth is not None and truth.size != X.shape[1]:
        raise UsageError(f"truth has {truth.size} labels but X has {X.shape[1]} samples")
    seeds = args.seeds if args.seeds is not None else [args.seed]
    many = len(seeds) > 1
    labels_base = Path(args.labels)
    runs, worst = [], EXIT_OK
    for seed in seeds:
        labels, rep, status = run_method(X, args.k, args.method, args, seed, truth=truth, timing=args.timing)
        lp = _labels_path_for(labels_base, seed, many)
        mio.write_labels(lp, labels)
        rep["labels_path"] = str(lp)
        rep["input"] = {"path": str(args.input), "format": args.format or mio.guess_format(args.input)}
        runs.append(rep)
        if status != "converged":
            worst = EXIT_MAX_ITER
    if many:
        report = {"runs": runs, "summary": _summary(runs)}
    else:
        report = runs[0]
    mio.write_report(args.report, report)
    if truth is not None:
        s = _summary(runs)
        print(f"{args.method}: mean ACC {s['acc_mean']:.4f}, mean ARI {s['ari_mean']:.4f} over {len(runs)} run(s)")
    return worst


def _summary(runs) -> dict:
    out = {"runs": len(runs), "converged": sum(r["status"] == "converged" for r in runs)}
    for key in ("acc", "ari"):
        vals = [r["final"][key] for r in runs if key in r["final"]]
        if vals:
            out[f"{key}_mean"] = float(np.mean(vals))
    times = [r["wall_time_seconds"] for r in runs if "wall_time_seconds" in r]
    if times:
        out["wall_time_mean"] = float(np.mean(times))
    return out


def cmd_eval(args) -> int:
    label_sets = [mio.read_labels(p) for p in args.labels]
    n = label_sets[0].size
    for p, l in zip(args.labels, label_sets):
        if l.size != n:
            raise UsageError(f"{p} has {l.size} labels, expected {n}")
    result = {}
    if args.truth:
        truth = mio.read_labels(args.truth)
        if truth.size != n:
            raise UsageError(f"{args.truth} has {truth.size} labels, expected {n}")
        result["files"] = [
            {"path": str(p), "acc": clustering_accuracy(l, truth), "ari": adjusted_rand_index(l, truth)}
            for p, l in zip(args.labels, label_sets)
        ]
        if len(label_sets) == 1:
            result["acc"] = result["files"][0]["acc"]
            result["ari"] = result["files"][0]["ari"]
    if args.consensus:
        if len(label_sets) < 2:
            raise UsageError("--consensus needs at least two label files")
        cmap = consensus_map(label_sets)
        cc = cophenetic_correlation(cmap)
        result["cc"] = cc.value
        result["cc_constant"] = cc.constant
        if args.consensus_out:
            mio.write_matrix(args.consensus_out, cmap.C)
            result["consensus_matrix_path"] = str(args.consensus_out)
    if not result:
        raise UsageError("nothing to evaluate: pass --truth and/or --consensus")
    text = mio.dumps_report(result)
    if args.out:
        mio.write_report(args.out, result)
    sys.stdout.write(text)
    return EXIT_OK


def _bench_cell(job):
    # one (snr, seed) trial: every method starts from the same initial point
    args, snr, seed = job
    cfg = _synth_config(args, snr, seed)
    data = generate_synthetic(cfg)
    init = random_init(data.X, cfg.K, seed)
    out = []
    with threadpool_limits(limits=args.threads):
        for method in args.methods:
            start = init if method in NCP_METHODS or args.kmeans_init == "shared" else None
            _, rep, status = run_method(data.X, cfg.K, method, args, seed, init=start, truth=data.truth,
                                        timing=args.timing)
            row = {"snr_db": snr, "seed": seed, "method": method, "status": status,
                   "acc": rep["final"]["acc"], "ari": rep["final"]["ari"],
                   "outer_iterations": len(rep["trace"])}
            if args.timing:
                row["wall_time_seconds"] = rep["wall_time_seconds"]
            out.append(row)
    return out


def cmd_bench(args) -> int:
    jobs = [(args, snr, seed) for snr in args.snr_db for seed in args.seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            cells = list(ex.map(_bench_cell, jobs))
    else:
        cells = [_bench_cell(j) for j in jobs]
    rows = [r for cell in cells for r in cell]
    table = []
    for snr in args.snr_db:
        for method in args.methods:
            sel = [r for r in rows if r["snr_db"] == snr and r["method"] == method]
            entry = {"snr_db": snr, "method": method, "trials": len(sel),
                     "acc_mean": float(np.mean([r["acc"] for r in sel])),
                     "ari_mean": float(np.mean([r["ari"] for r in sel])),
                     "converged": sum(r["status"] == "converged" for r in sel)}
            if args.timing:
                entry["wall_time_mean"] = float(np.mean([r["wall_time_seconds"] for r in sel]))
            table.append(entry)
    report = {"methods": list(args.methods), "seeds": list(args.seeds), "snr_db": list(args.snr_db),
              "rows": rows, "table": table}
    if args.out:
        mio.write_report(args.out, report)
    for e in table:
        print(f"SNR {e['snr_db']:+g} dB  {e['method']:<13} ACC {e['acc_mean']:.3f}  ARI {e['ari_mean']:.3f}"
              f"  converged {e['converged']}/{e['trials']}")
    return EXIT_OK if all(r["status"] == "converged" for r in rows) else EXIT_MAX_ITER


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onmf-ncp", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None,
                        help=f"BLAS threads (default: ${THREADS_ENV} or all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic clustering dataset")
    _add_synth_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=mio.FORMATS, default=mio.CSV)
    p.add_argument("--out", required=True, help="output directory for X.csv/X.mtx and truth.txt")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("cluster", help="cluster the columns of a data matrix")
    p.add_argument("--input", required=True, help="data matrix, samples as columns")
    p.add_argument("--format", choices=mio.FORMATS, default=None)
    p.add_argument("--method", choices=METHODS, default="sncp")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=_seed_list, default=None, help="several seeds, e.g. 0-9")
    p.add_argument("--truth", default=None, help="ground-truth labels, adds ACC/ARI to the report")
    p.add_argument("--labels", default="labels.txt", help="output labels file")
    p.add_argument("--report", default="report.json", help="output JSON report")
    p.add_argument("--timing", action="store_true", help="include wall-clock times in the report")
    _add_solver_args(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("eval", help="score label files against truth and/or each other")
    p.add_argument("--labels", nargs="+", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--consensus", action="store_true", help="consensus map and cophenetic correlation")
    p.add_argument("--consensus-out", default=None, help="write the consensus matrix (CSV)")
    p.add_argument("--out", default=None, help="also write the metrics JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="compare methods on synthetic data over seeds and SNRs")
    _add_synth_args(p, snr_list=True)
    p.add_argument("--methods", type=lambda s: [m.strip() for m in s.split(",") if m.strip()],
                   default=["kmeans", "sncp", "nsncp"])
    p.add_argument("--seeds", type=_seed_list, default=list(range(10)))
    p.add_argument("--kmeans-init", choices=("sample", "shared"), default="sample",
                   help="K-means start: its own random/++ sample seeding (default) or the NCP initial W")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--timing", action="store_true")
    p.add_argument("--out", default=None)
    _add_solver_args(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if args.threads is None:
            args.threads = _threads_default()
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        if getattr(args, "methods", None) is not None:
            bad = [m for m in args.methods if m not in METHODS]
            if bad:
                raise UsageError(f"unknown method(s) {bad}; choose from {list(METHODS)}")
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be at least 1")
        with threadpool_limits(limits=args.threads):
            return args.func(args)
    except UsageError as err:
        print(f"onmf-ncp: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, LineSearchError) as err:
        print(f"onmf-ncp: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError) as err:
        print(f"onmf-ncp: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
