"""Benchmark harness CLI: reproduce the simulated and QAPLIB experiments.

Each subcommand writes a CSV of per-run rows plus a JSON metadata sidecar
(<out>.meta.json) embedding the resolved configuration and master seed, so
reruns with the same seed reproduce every non-timing column bit-exactly.
Aggregate subcommands additionally write <out stem>.summary.csv with means
and standard errors per grid point.

Worker-pool size is the --workers flag, capped by the OTMATCH_THREADS
environment variable; replicates use independent RNG streams keyed by
(master seed, grid point, replicate), so parallel and serial execution
produce identical results.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    edge_disagreements,
    format_matrix_text,
    format_permutation_text,
    match_ratio,
    parse_matrix_text,
    pass_to_ranks,
    qap_objective,
)
from .lap import solve_lap
from .matcher import MatchOptions, frank_wolfe_match, seeded_match, SeedSet
from .qaplib import load_instance, relative_accuracy
from .samplers import SbmSpec, sample_er_pair, sample_sbm_pair, shuffle_pair
from .sinkhorn import SinkhornParams, lot

SCHEMA_VERSION = 1

SOLVER_STEP = {"faq": "exact_lap", "goat": "lot"}

# Default block probability matrices for the SBM experiments.
SBM_ACCURACY_B = [[0.2, 0.01, 0.01], [0.01, 0.1, 0.01], [0.01, 0.01, 0.2]]
SBM_SEEDED_B = [[0.7, 0.3, 0.4], [0.3, 0.7, 0.3], [0.4, 0.3, 0.7]]


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "fn"}


def _derive_seed(master_seed: int, *tags: int) -> int:
    """Stable 63-bit child seed for one task of an experiment."""
    ss = np.random.SeedSequence([int(master_seed), *[int(t) for t in tags]])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def _worker_count(requested: int) -> int:
    cap = os.environ.get("OTMATCH_THREADS")
    if cap:
        requested = min(requested, max(1, int(cap)))
    return max(1, requested)


def _run_tasks(fn, tasks, workers: int):
    """Run tasks (ordered list of argument tuples), preserving order."""
    workers = _worker_count(workers)
    if workers == 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*tasks)))


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _write_meta(out: Path, command: str, config: dict) -> None:
    meta = {
        "schema_version": SCHEMA_VERSION,
        "otmatch_version": __version__,
        "command": command,
        "config": config,
    }
    Path(str(out) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _aggregate(rows, key_cols, value_col, header):
    """Mean and standard error of one column grouped by key columns."""
    groups: dict[tuple, list[float]] = {}
    order: list[tuple] = []
    for row in rows:
        key = tuple(row[header.index(c)] for c in key_cols)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(float(row[header.index(value_col)]))
    out = []
    for key in order:
        vals = np.array(groups[key])
        se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
        out.append([*key, vals.size, float(vals.mean()), se])
    return out


def _summary_path(out: Path) -> Path:
    return out.with_name(out.stem + ".summary.csv")


def _match_options(solver: str, args, init="barycenter", seed: int = 0,
                   shuffle_input: bool = False, n_restarts: int = 1) -> MatchOptions:
    return MatchOptions(
        step_solver=SOLVER_STEP[solver],
        sinkhorn=SinkhornParams(lam=args.lam),
        init=init,
        max_iters=args.max_iters,
        fw_tol=args.fw_tol,
        n_restarts=n_restarts,
        shuffle_input=shuffle_input,
        rng_seed=seed,
        objective_sense="maximize",
    )


# --- lap-vs-lot -------------------------------------------------------------

def _lap_vs_lot_task(n, rep, cost_low, cost_high, lam, seed):
    rng = np.random.default_rng([seed, n, rep])
    M = rng.uniform(cost_low, cost_high, size=(n, n))
    t0 = time.perf_counter()
    sol = solve_lap(M, "minimize")
    t_lap = time.perf_counter() - t0
    t0 = time.perf_counter()
    res = lot(M, "minimize", SinkhornParams(lam=lam))
    t_lot = time.perf_counter() - t0
    ofv_lot = float((res.matrix * M).sum())
    gap = (sol.objective - ofv_lot) / sol.objective
    return [n, rep, t_lap, t_lot, sol.objective, ofv_lot, gap, res.sweeps, res.converged]


def cmd_lap_vs_lot(args) -> int:
    header = ["n", "replicate", "t_lap", "t_lot", "ofv_lap", "ofv_lot",
              "rel_gap", "lot_sweeps", "lot_converged"]
    tasks = [
        (n, rep, args.cost_low, args.cost_high, args.lam, args.seed)
        for n in args.n_grid
        for rep in range(args.replicates)
    ]
    rows = _run_tasks(_lap_vs_lot_task, tasks, args.workers)
    out = Path(args.out)
    _write_csv(out, header, [[_fmt(x) for x in r] for r in rows])
    _write_meta(out, "lap-vs-lot", _config(args) | {"out": str(out)})
    return 0


# --- rho-sbm ----------------------------------------------------------------

def _sbm_spec(n: int, block_probs, rho: float) -> SbmSpec:
    k = len(block_probs)
    base = n // k
    sizes = [base + (1 if i < n % k else 0) for i in range(k)]
    return SbmSpec(block_sizes=tuple(sizes), block_probs=np.array(block_probs), rho=rho)


def _rho_sbm_task(n, block_probs, rho, rep, solvers, args_dict, seed):
    args = argparse.Namespace(**args_dict)
    rng = np.random.default_rng([seed, round(rho * 1000), rep])
    A, B = sample_sbm_pair(_sbm_spec(n, block_probs, rho), rng)
    Bs, truth = shuffle_pair(B, rng)
    child = _derive_seed(seed, round(rho * 1000), rep)
    rows = []
    for solver in solvers:
        opts = _match_options(solver, args, seed=child)
        t0 = time.perf_counter()
        res = frank_wolfe_match(A, Bs, opts)
        t_solve = time.perf_counter() - t0
        rows.append([rho, rep, solver, match_ratio(res.alignment, truth),
                     res.objective, res.iterations, res.converged, t_solve])
    return rows


def cmd_rho_sbm(args) -> int:
    header = ["rho", "replicate", "solver", "match_ratio", "objective",
              "iterations", "converged", "t_solve"]
    block_probs = json.loads(args.block_probs)
    tasks = [
        (args.n, block_probs, rho, rep, args.solvers, _config(args), args.seed)
        for rho in args.rho_grid
        for rep in range(args.replicates)
    ]
    nested = _run_tasks(_rho_sbm_task, tasks, args.workers)
    rows = [row for group in nested for row in group]
    out = Path(args.out)
    _write_csv(out, header, [[_fmt(x) for x in r] for r in rows])
    summary = _aggregate(rows, ["rho", "solver"], "match_ratio", header)
    _write_csv(_summary_path(out), ["rho", "solver", "replicates",
                                    "mean_match_ratio", "se_match_ratio"],
               [[_fmt(x) for x in r] for r in summary])
    _write_meta(out, "rho-sbm", _config(args) | {"out": str(out)})
    return 0


# --- seeded -----------------------------------------------------------------

def _seeded_task(n, block_probs, rho, m, rep, solvers, args_dict, seed):
    args = argparse.Namespace(**args_dict)
    # The graph pair and shuffle for a replicate are shared across all m.
    rng = np.random.default_rng([seed, round(rho * 1000), rep])
    A, B = sample_sbm_pair(_sbm_spec(n, block_probs, rho), rng)
    Bs, truth = shuffle_pair(B, rng)
    seed_rng = np.random.default_rng([seed, round(rho * 1000), rep, m])
    g1 = np.sort(seed_rng.choice(n, size=m, replace=False)) if m else np.empty(0, dtype=int)
    pairs = np.stack([g1, truth[g1]], axis=1) if m else np.empty((0, 2), dtype=int)
    nonseed = np.setdiff1d(np.arange(n), g1)
    # No m in the solver stream: m = 0 rows then reproduce rho-sbm exactly.
    child = _derive_seed(seed, round(rho * 1000), rep)
    rows = []
    for solver in solvers:
        opts = _match_options(solver, args, seed=child)
        t0 = time.perf_counter()
        res = seeded_match(A, Bs, SeedSet(pairs), opts)
        t_solve = time.perf_counter() - t0
        ratio_all = match_ratio(res.alignment, truth)
        ratio_ns = float(np.mean(res.alignment[nonseed] == truth[nonseed])) if nonseed.size else 1.0
        rows.append([rho, m, rep, solver, ratio_ns, ratio_all,
                     res.objective, res.iterations, t_solve])
    return rows


def cmd_seeded(args) -> int:
    header = ["rho", "m", "replicate", "solver", "match_ratio_nonseed",
              "match_ratio_all", "objective", "iterations", "t_solve"]
    block_probs = json.loads(args.block_probs)
    for m in args.seed_grid:
        if m >= args.n:
            raise SystemExit(f"seed count {m} must be less than n = {args.n}")
    tasks = [
        (args.n, block_probs, rho, m, rep, args.solvers, _config(args), args.seed)
        for rho in args.rho_grid
        for m in args.seed_grid
        for rep in range(args.replicates)
    ]
    nested = _run_tasks(_seeded_task, tasks, args.workers)
    rows = [row for group in nested for row in group]
    out = Path(args.out)
    _write_csv(out, header, [[_fmt(x) for x in r] for r in rows])
    summary = _aggregate(rows, ["rho", "m", "solver"], "match_ratio_nonseed", header)
    _write_csv(_summary_path(out), ["rho", "m", "solver", "replicates",
                                    "mean_match_ratio_nonseed", "se_match_ratio_nonseed"],
               [[_fmt(x) for x in r] for r in summary])
    _write_meta(out, "seeded", _config(args) | {"out": str(out)})
    return 0


# --- er-scaling -------------------------------------------------------------

def _er_scaling_task(n, rep, solvers, args_dict, seed):
    args = argparse.Namespace(**args_dict)
    rng = np.random.default_rng([seed, n, rep])
    p = math.log(n) / n
    A, B = sample_er_pair(n, p, args.rho, rng)
    Bs, truth = shuffle_pair(B, rng)
    child = _derive_seed(seed, n, rep)
    rows = []
    for solver in solvers:
        opts = _match_options(solver, args, seed=child)
        t0 = time.perf_counter()
        res = frank_wolfe_match(A, Bs, opts)
        t_solve = time.perf_counter() - t0
        rows.append([n, rep, solver, t_solve, match_ratio(res.alignment, truth),
                     res.objective, res.iterations])
    return rows


def cmd_er_scaling(args) -> int:
    header = ["n", "replicate", "solver", "t_solve", "match_ratio",
              "objective", "iterations"]
    tasks = [
        (n, rep, args.solvers, _config(args), args.seed)
        for n in args.n_grid
        for rep in range(args.replicates)
    ]
    nested = _run_tasks(_er_scaling_task, tasks, args.workers)
    rows = [row for group in nested for row in group]
    out = Path(args.out)
    _write_csv(out, header, [[_fmt(x) for x in r] for r in rows])
    summary = _aggregate(rows, ["n", "solver"], "match_ratio", header)
    _write_csv(_summary_path(out), ["n", "solver", "replicates",
                                    "mean_match_ratio", "se_match_ratio"],
               [[_fmt(x) for x in r] for r in summary])
    _write_meta(out, "er-scaling", _config(args) | {"out": str(out)})
    return 0


# --- qaplib -----------------------------------------------------------------

def _qaplib_task(dat_path, solvers, args_dict, seed):
    args = argparse.Namespace(**args_dict)
    dat_path = Path(dat_path)
    try:
        inst = load_instance(dat_path)
    except (ValueError, OSError) as e:
        return [[dat_path.stem, "", solver, "error", "", "", "", str(e)]
                for solver in solvers]
    child = _derive_seed(seed, inst.n, *[ord(c) for c in inst.name])
    init = "barycenter" if args.init == "barycenter" else "randomized_blend"
    objectives = {}
    rows = []
    for solver in solvers:
        opts = MatchOptions(
            step_solver=SOLVER_STEP[solver],
            sinkhorn=SinkhornParams(lam=args.lam),
            init=init,
            max_iters=args.max_iters,
            fw_tol=args.fw_tol,
            n_restarts=args.n_restarts,
            shuffle_input=True,
            rng_seed=child,
            objective_sense="minimize",
        )
        res = frank_wolfe_match(inst.A, inst.B, opts)
        objectives[solver] = res.objective
        gap = ""
        if inst.known_optimum is not None:
            gap = (res.objective - inst.known_optimum) / inst.known_optimum
        rows.append([inst.name, inst.n, solver, "ok", res.objective,
                     inst.known_optimum if inst.known_optimum is not None else "",
                     gap, ""])
    if len(solvers) == 2 and all(v > 0 for v in objectives.values()):
        a, b = solvers
        for row, solver in zip(rows, solvers):
            other = b if solver == a else a
            row[7] = relative_accuracy(objectives[solver], objectives[other])
    return rows


def cmd_qaplib(args) -> int:
    header = ["instance", "n", "solver", "status", "objective",
              "known_optimum", "gap_to_optimum", "log10_ratio_vs_other"]
    dats = sorted(Path(args.dir).glob("*.dat"))
    if not dats:
        raise SystemExit(f"no .dat files found in {args.dir}")
    tasks = [(str(p), args.solvers, _config(args), args.seed) for p in dats]
    nested = _run_tasks(_qaplib_task, tasks, args.workers)
    rows = [row for group in nested for row in group]
    out = Path(args.out)
    _write_csv(out, header, [[_fmt(x) for x in r] for r in rows])
    _write_meta(out, "qaplib", _config(args) | {"out": str(out)})
    return 0


# --- match / shuffle --------------------------------------------------------

def cmd_match(args) -> int:
    A = parse_matrix_text(Path(args.file_a).read_text())
    B = parse_matrix_text(Path(args.file_b).read_text())
    if A.shape != B.shape:
        raise SystemExit(f"order mismatch: {A.shape[0]} vs {B.shape[0]}")
    if args.ptr:
        A = pass_to_ranks(A)
        B = pass_to_ranks(B)
    opts = MatchOptions(
        step_solver=SOLVER_STEP[args.solver],
        sinkhorn=SinkhornParams(lam=args.lam),
        init="randomized_blend" if args.n_restarts > 1 else args.init,
        max_iters=args.max_iters,
        fw_tol=args.fw_tol,
        n_restarts=args.n_restarts,
        shuffle_input=args.shuffle,
        rng_seed=args.seed,
        objective_sense="maximize",
    )
    res = frank_wolfe_match(A, B, opts)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(format_permutation_text(res.alignment))
    summary = {
        "objective": res.objective,
        "edge_disagreements": edge_disagreements(A, B, res.alignment),
        "iterations": res.iterations,
        "converged": res.converged,
        "wall_time": res.wall_time,
        "config": {
            "solver": args.solver, "lam": args.lam, "max_iters": args.max_iters,
            "fw_tol": args.fw_tol, "n_restarts": args.n_restarts,
            "shuffle": args.shuffle, "ptr": args.ptr, "seed": args.seed,
            "init": args.init,
        },
    }
    line = json.dumps(summary, sort_keys=True)
    with open(str(out) + ".summary.jsonl", "a") as fh:
        fh.write(line + "\n")
    print(line)
    return 0


def cmd_shuffle(args) -> int:
    B = parse_matrix_text(Path(args.file).read_text())
    rng = np.random.default_rng(args.seed)
    Bs, truth = shuffle_pair(B, rng)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(format_matrix_text(Bs))
    Path(str(out) + ".truth.txt").write_text(format_permutation_text(truth))
    return 0


# --- argument parsing -------------------------------------------------------

def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def _add_common(p, default_out):
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", default=default_out, help="output CSV path")
    p.add_argument("--workers", type=int, default=1,
                   help="worker pool size (capped by OTMATCH_THREADS)")
    p.add_argument("--lam", type=float, default=100.0,
                   help="Sinkhorn regularization (vs unit-scaled cost)")


def _add_solver_common(p):
    p.add_argument("--solvers", type=lambda s: s.split(","),
                   default=["faq", "goat"], help="comma list from {faq,goat}")
    p.add_argument("--max-iters", type=int, default=30)
    p.add_argument("--fw-tol", type=float, default=1e-2)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="otmatch", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lap-vs-lot", help="exact LAP vs LOT on random cost matrices")
    p.add_argument("--n-grid", type=_int_list, default=[250, 500, 1000])
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--cost-low", type=float, default=100.0)
    p.add_argument("--cost-high", type=float, default=150.0)
    _add_common(p, "lap_vs_lot.csv")
    p.set_defaults(fn=cmd_lap_vs_lot)

    p = sub.add_parser("rho-sbm", help="match ratio vs correlation on SBM pairs")
    p.add_argument("--n", type=int, default=150)
    p.add_argument("--block-probs", default=json.dumps(SBM_ACCURACY_B),
                   help="JSON k x k block probability matrix")
    p.add_argument("--rho-grid", type=_float_list, default=[0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
    p.add_argument("--replicates", type=int, default=25)
    _add_solver_common(p)
    _add_common(p, "rho_sbm.csv")
    p.set_defaults(fn=cmd_rho_sbm)

    p = sub.add_parser("seeded", help="match ratio vs number of seeds on SBM pairs")
    p.add_argument("--n", type=int, default=90)
    p.add_argument("--block-probs", default=json.dumps(SBM_SEEDED_B))
    p.add_argument("--rho-grid", type=_float_list, default=[0.9])
    p.add_argument("--seed-grid", type=_int_list, default=[0, 5, 10, 20])
    p.add_argument("--replicates", type=int, default=20)
    _add_solver_common(p)
    _add_common(p, "seeded.csv")
    p.set_defaults(fn=cmd_seeded)

    p = sub.add_parser("er-scaling", help="runtime and accuracy vs n on ER pairs")
    p.add_argument("--n-grid", type=_int_list, default=[100, 200, 400])
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--rho", type=float, default=1.0,
                   help="edgewise correlation (density is log(n)/n)")
    _add_solver_common(p)
    _add_common(p, "er_scaling.csv")
    p.set_defaults(fn=cmd_er_scaling)

    p = sub.add_parser("qaplib", help="FAQ vs GOAT over a directory of QAPLIB .dat files")
    p.add_argument("dir", help="directory containing .dat (and optional .sln) files")
    p.add_argument("--init", choices=["barycenter", "random"], default="barycenter")
    p.add_argument("--n-restarts", type=int, default=1)
    _add_solver_common(p)
    _add_common(p, "qaplib.csv")
    p.set_defaults(fn=cmd_qaplib)

    p = sub.add_parser("match", help="match two graphs from matrix text files")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--solver", choices=["faq", "goat"], default="goat")
    p.add_argument("--init", choices=["barycenter", "randomized_blend"],
                   default="barycenter")
    p.add_argument("--ptr", action="store_true",
                   help="apply pass-to-ranks to both inputs first")
    p.add_argument("--shuffle", action="store_true",
                   help="shuffle B internally per restart (bias mitigation)")
    p.add_argument("--n-restarts", type=int, default=1)
    p.add_argument("--max-iters", type=int, default=30)
    p.add_argument("--fw-tol", type=float, default=1e-2)
    _add_common(p, "alignment.txt")
    p.set_defaults(fn=cmd_match)

    p = sub.add_parser("shuffle", help="write a randomly relabeled copy of a matrix file")
    p.add_argument("file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="shuffled.txt")
    p.set_defaults(fn=cmd_shuffle)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
