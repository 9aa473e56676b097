"""Experiment grids: parameter study, gap study, degenerate pairs, bits sweep.

Each grid cell is an independent, seeded solve scored against the Jacobi
oracle.  Rows are plain dicts so they go straight into CSV.
"""

from __future__ import annotations

import csv
import itertools
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .annealer import SamplerConfig
from .eigensolver import (
    ConvergenceError, EigenResult, SolveOptions, eigvec_error, jacobi_oracle, rayleigh,
    solve_degenerate_pair, solve_smallest, solve_smallest_ising,
)
from .matgen import EnsembleSpec

TRACE_HEADER = ["iter", "phase", "lambda", "eval_err", "evec_err", "precision", "anneal_s"]
WORK_SECONDS = 1e-9  # nominal seconds per attempted flip in "work" timing mode

RAW_FIELDS = [
    "suite", "n", "bits", "response", "alpha", "init", "gap", "matrix_seed", "sampler_seed",
    "status", "eigenvalue", "oracle_eigenvalue", "eval_err", "evec_err", "guess_evec_err",
    "iterations", "accepted", "anneal_s", "run2_iterations", "overlap", "run2_eval_err",
]
GROUP_KEYS = ["suite", "n", "bits", "response", "alpha", "init", "gap"]
MEAN_FIELDS = ["guess_evec_err", "iterations", "anneal_s", "eval_err", "evec_err",
               "run2_iterations", "overlap"]


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("QUBO_EIG_THREADS", "1")))
    except ValueError:
        return 1


def trace_rows(result: EigenResult, oracle_value=None, oracle_vector=None,
               timing: str = "wall") -> List[list]:
    """Rows for the trace CSV (see ``TRACE_HEADER``)."""
    rows = []
    for rec in result.trace:
        eval_err = "" if oracle_value is None else _fmt(abs(rec.eigenvalue - oracle_value))
        evec_err = "" if oracle_vector is None else _fmt(eigvec_error(rec.vector, oracle_vector))
        t = rec.anneal_seconds if timing == "wall" else rec.anneal_work * WORK_SECONDS
        rows.append([rec.iteration, rec.phase, _fmt(rec.eigenvalue), eval_err, evec_err,
                     _fmt(rec.precision), _fmt(t)])
    return rows


def write_csv_atomic(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    os.replace(tmp, path)


def _score(row: dict, result: EigenResult, w, V) -> dict:
    row.update(
        eigenvalue=result.eigenvalue,
        oracle_eigenvalue=float(w[0]),
        eval_err=abs(result.eigenvalue - w[0]),
        evec_err=eigvec_error(result.eigenvector, V[:, 0]),
        guess_evec_err=(eigvec_error(result.guess_vector, V[:, 0])
                        if result.guess_vector is not None else math.nan),
        iterations=result.iterations,
        accepted=result.accepted_steps,
        anneal_s=result.anneal_seconds,
    )
    return row


def run_cell(cell: dict) -> dict:
    """Solve one grid cell.  Failures are reported in ``status``, never raised."""
    spec: EnsembleSpec = cell["spec"]
    opts: SolveOptions = cell["opts"]
    row = {k: cell.get(k, "") for k in GROUP_KEYS}
    row.update(n=spec.n, matrix_seed=spec.seed, sampler_seed=opts.sampler.seed, status="ok")
    try:
        A = spec.build()
        w, V = jacobi_oracle(A)
        if opts.stop == "oracle":
            opts = replace(opts, target_eigenvalue=float(w[0]))
        if cell.get("variant") == "degenerate":
            first, second = solve_degenerate_pair(A, opts)
            _score(row, first, w, V)
            row.update(run2_iterations=second.iterations,
                       overlap=abs(float(first.eigenvector @ second.eigenvector)),
                       run2_eval_err=abs(rayleigh(A, second.eigenvector) - w[0]))
        else:
            solve = solve_smallest_ising if cell.get("variant") == "ising" else solve_smallest
            result = solve(A, opts)
            _score(row, result, w, V)
            if cell.get("trace_path"):
                write_csv_atomic(cell["trace_path"], TRACE_HEADER,
                                 trace_rows(result, w[0], V[:, 0], cell.get("timing", "wall")))
    except ConvergenceError as exc:
        row["status"] = f"no-convergence: {exc}"
        _score(row, exc.result, w, V)
    except Exception as exc:  # noqa: BLE001 - a failed cell must not stop the suite
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    return row


def run_cells(cells: List[dict], workers: Optional[int] = None) -> List[dict]:
    workers = workers or max_workers()
    if workers <= 1 or len(cells) <= 1:
        return [run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_cell, cells))


def _opts(base: SolveOptions, seed: int, **kw) -> SolveOptions:
    return replace(base, sampler=replace(base.sampler, seed=seed), **kw)


def params_cells(base: SolveOptions, sizes=(10, 20), bits=(2, 4, 6, 8),
                 betas=(None, 100.0), alphas=(0.0, 0.1), inits=("trace",),
                 seeds=range(10), ratio=0.3) -> List[dict]:
    cells = []
    for n, b, beta, alpha, init, s in itertools.product(sizes, bits, betas, alphas, inits, seeds):
        cells.append(dict(
            suite="params", bits=b, response="best" if beta is None else f"full{beta:g}",
            alpha=alpha, init=init, gap="",
            spec=EnsembleSpec("mp", n=n, seed=s, ratio=ratio),
            opts=_opts(base, s, bits=b, full_response_beta=beta, bias_alpha=alpha,
                       initial_lambda=init)))
    return cells


def gap_cells(base: SolveOptions, sizes=(10,), bits=(2, 4), gaps=(0.0, 0.01, 0.1, 0.5, 1.0),
              seeds=range(30)) -> List[dict]:
    cells = []
    for n, b, g, s in itertools.product(sizes, bits, gaps, seeds):
        cells.append(dict(
            suite="gap", bits=b, response=_response(base), alpha=base.bias_alpha,
            init=_init(base), gap=g,
            spec=EnsembleSpec("gap", n=n, seed=s, gap=g), opts=_opts(base, s, bits=b)))
    return cells


def degenerate_cells(base: SolveOptions, sizes=(10, 20), bits=(2, 4),
                     seeds=range(10)) -> List[dict]:
    cells = []
    for n, b, s in itertools.product(sizes, bits, seeds):
        cells.append(dict(
            suite="degenerate", variant="degenerate", bits=b, response=_response(base),
            alpha=base.bias_alpha, init=_init(base), gap=0.0,
            spec=EnsembleSpec("degenerate", n=n, seed=s), opts=_opts(base, s, bits=b)))
    return cells


def bits_sweep_cells(base: SolveOptions, spec: EnsembleSpec, bits=(2, 4, 6, 8),
                     seeds=range(5), trace_dir=None, timing="wall") -> List[dict]:
    cells = []
    for b, s in itertools.product(bits, seeds):
        cell = dict(suite="bits-sweep", bits=b, response=_response(base), alpha=base.bias_alpha,
                    init=_init(base), gap="", spec=spec, opts=_opts(base, s, bits=b), timing=timing)
        if trace_dir is not None:
            cell["trace_path"] = str(Path(trace_dir) / f"trace_b{b}_s{s}.csv")
        cells.append(cell)
    return cells


def _response(opts):
    return "best" if opts.full_response_beta is None else f"full{opts.full_response_beta:g}"


def _init(opts):
    return opts.initial_lambda if isinstance(opts.initial_lambda, str) else f"{opts.initial_lambda:g}"


def summarize(rows: List[dict]) -> List[dict]:
    """Per-cell means over the successful rows, in first-seen cell order."""
    groups: Dict[tuple, List[dict]] = {}
    for r in rows:
        groups.setdefault(tuple(str(r.get(k, "")) for k in GROUP_KEYS), []).append(r)
    out = []
    for key, members in groups.items():
        ok = [r for r in members if r.get("status") == "ok"]
        s = dict(zip(GROUP_KEYS, key))
        s["runs"] = len(members)
        s["ok"] = len(ok)
        for f in MEAN_FIELDS:
            vals = [float(r[f]) for r in ok if r.get(f, "") not in ("", None)]
            vals = [v for v in vals if not math.isnan(v)]
            s[f"mean_{f}"] = float(np.mean(vals)) if vals else ""
        out.append(s)
    return out


SUMMARY_FIELDS = GROUP_KEYS + ["runs", "ok"] + [f"mean_{f}" for f in MEAN_FIELDS]


def write_results(out_dir, rows: List[dict]) -> List[dict]:
    summary = summarize(rows)
    write_csv_atomic(Path(out_dir) / "raw.csv", RAW_FIELDS,
                     ([_fmt(r.get(k, "")) for k in RAW_FIELDS] for r in rows))
    write_csv_atomic(Path(out_dir) / "summary.csv", SUMMARY_FIELDS,
                     ([_fmt(s.get(k, "")) for k in SUMMARY_FIELDS] for s in summary))
    return summary


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def load_results(out_dir, rtol: float = 1e-12):
    """Read ``raw.csv`` / ``summary.csv`` back and check the summary against the raw rows."""
    with open(Path(out_dir) / "raw.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    with open(Path(out_dir) / "summary.csv", newline="") as fh:
        stored = list(csv.DictReader(fh))
    recomputed = summarize(rows)
    if len(recomputed) != len(stored):
        raise ValueError(f"summary has {len(stored)} cells, raw rows give {len(recomputed)}")
    for a, b in zip(recomputed, stored):
        for k in SUMMARY_FIELDS:
            x, y = a[k], b[k]
            if k.startswith("mean_") and x != "" and y != "":
                if not math.isclose(float(x), float(y), rel_tol=rtol, abs_tol=1e-300):
                    raise ValueError(f"summary mismatch in {k}: stored {y}, recomputed {x}")
            elif str(x) != str(y):
                raise ValueError(f"summary mismatch in {k}: stored {y!r}, recomputed {x!r}")
    return rows, stored


def default_experiment_options(**kw) -> SolveOptions:
    """Solver settings used by the experiment grids: stop at the oracle eigenvalue."""
    base = dict(stop="oracle", target_eigenvalue=0.0, sampler=SamplerConfig())
    base.update(kw)
    return SolveOptions(**base)
