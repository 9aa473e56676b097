"""Command-line front end.

    qubo-eig solve --diag 1,2,3 --bits 4 --out run/
    qubo-eig solve --ensemble mp --n 10 --ratio 0.3 --seed 1 --out run/
    qubo-eig solve-gen --a-mtx A.mtx --b-mtx B.mtx --out run/
    qubo-eig experiment gap --seeds 30 --out gap/

``solve`` and ``solve-gen`` write ``trace.csv`` and ``summary.json`` under
``--out``; ``experiment`` writes ``raw.csv`` and ``summary.csv``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from .annealer import SamplerConfig
from .eigensolver import (
    ConvergenceError, DefinitenessError, DegenerateSampleError, EigenResult, SolveOptions,
    eigvec_error, generalized_oracle, jacobi_oracle, solve_generalized, solve_largest,
    solve_smallest, solve_smallest_ising,
)
from . import experiments as ex
from .matgen import EnsembleSpec, MatrixFormatError, load_matrix_market, mesh_pair, random_spd
from .oracle import MAX_ORACLE_N

log = logging.getLogger("qubo_eig")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_CONVERGENCE = 3


def _init_value(text: str):
    if text in ("trace", "gershgorin"):
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--init must be trace, gershgorin or a number, got {text!r}")


def _float_list(text: str) -> List[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> List[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _solver_flags(p: argparse.ArgumentParser, experiment: bool = False) -> None:
    g = p.add_argument_group("solver")
    if not experiment:
        g.add_argument("--bits", type=int, default=4)
    g.add_argument("--tolerance", type=float, default=1e-8)
    g.add_argument("--bias-alpha", type=float, default=0.0)
    g.add_argument("--full-response-beta", type=float, default=None)
    g.add_argument("--precision-shrink", type=float, default=0.1)
    g.add_argument("--init", type=_init_value, default="trace",
                   help="initial shift: trace, gershgorin or a number")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--sweeps", type=int, default=1000)
    g.add_argument("--reads", type=int, default=32)
    g.add_argument("--max-iterations", type=int, default=10000)
    g.add_argument("--stop", choices=("precision", "oracle"), default=None,
                   help="exit rule (default: precision for solves, oracle for experiments)")
    g.add_argument("--timing", choices=("wall", "work"), default="wall",
                   help="anneal_s column: wall-clock seconds, or attempted flips * 1e-9 "
                        "(deterministic)")
    g.add_argument("--out", type=Path, required=True)


def _matrix_flags(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--diag", type=_float_list, help="comma-separated diagonal")
    src.add_argument("--mtx", type=Path, help="Matrix Market file")
    src.add_argument("--ensemble", choices=("mp", "gap", "degenerate", "spd"))
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--ratio", type=float, default=0.3)
    p.add_argument("--gap", type=float, default=0.1)
    p.add_argument("--matrix-seed", type=int, default=None,
                   help="seed for generated matrices (default: --seed)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qubo-eig", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="smallest (or largest) eigenpair of one matrix")
    _matrix_flags(p)
    _solver_flags(p)
    p.add_argument("--ising", action="store_true", help="one-bit Ising variant")
    p.add_argument("--largest", action="store_true")

    p = sub.add_parser("solve-gen", help="smallest generalized eigenpair A v = lam B v")
    a = p.add_mutually_exclusive_group()
    a.add_argument("--a-mtx", type=Path)
    a.add_argument("--a-diag", type=_float_list)
    b = p.add_mutually_exclusive_group()
    b.add_argument("--b-mtx", type=Path)
    b.add_argument("--b-diag", type=_float_list)
    p.add_argument("--pair", choices=("spd", "mesh"),
                   help="generated pair: random symmetric A with SPD B, or a FEM mesh pair")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--matrix-seed", type=int, default=None)
    p.add_argument("--init-vector", type=Path, help="text file with the starting vector w")
    _solver_flags(p)

    p = sub.add_parser("experiment", help="run a study grid")
    p.add_argument("suite", choices=("params", "gap", "degenerate", "bits-sweep"))
    p.add_argument("--sizes", type=_int_list, default=None)
    p.add_argument("--bits-list", type=_int_list, default=None)
    p.add_argument("--seeds", type=int, default=None, help="number of seeds per cell")
    p.add_argument("--gaps", type=_float_list, default=None)
    p.add_argument("--inits", default="trace", help="comma-separated: trace,gershgorin")
    p.add_argument("--mtx", type=Path, help="bits-sweep: matrix file (default MP n=50)")
    p.add_argument("--n", type=int, default=50, help="bits-sweep: size of the MP matrix")
    p.add_argument("--ratio", type=float, default=0.3)
    p.add_argument("--matrix-seed", type=int, default=0)
    _solver_flags(p, experiment=True)
    return parser


def options_from_args(args, bits: Optional[int] = None, stop_default: str = "precision",
                      target: Optional[float] = None) -> SolveOptions:
    stop = args.stop or stop_default
    return SolveOptions(
        bits=bits if bits is not None else args.bits,
        tolerance=args.tolerance,
        bias_alpha=args.bias_alpha,
        full_response_beta=args.full_response_beta,
        precision_shrink=args.precision_shrink,
        initial_lambda=args.init,
        max_iterations=args.max_iterations,
        sampler=SamplerConfig(num_reads=args.reads, sweeps=args.sweeps, seed=args.seed),
        stop=stop,
        target_eigenvalue=target if stop == "oracle" else None,
    )


def _load_matrix(args) -> np.ndarray:
    if args.diag is not None:
        return np.diag(args.diag)
    if args.mtx is not None:
        return load_matrix_market(args.mtx)
    seed = args.seed if args.matrix_seed is None else args.matrix_seed
    return EnsembleSpec(args.ensemble, n=args.n, seed=seed, ratio=args.ratio, gap=args.gap).build()


def _oracle(A, B=None, largest=False):
    if A.shape[0] > MAX_ORACLE_N:
        return None, None
    w, V = jacobi_oracle(A) if B is None else generalized_oracle(A, B)
    k = -1 if largest else 0
    return float(w[k]), V[:, k]


def _write_outputs(out: Path, result: EigenResult, summary: dict, oracle_value, oracle_vector,
                   timing: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    ex.write_csv_atomic(out / "trace.csv", ex.TRACE_HEADER,
                        ex.trace_rows(result, oracle_value, oracle_vector, timing))
    tmp = out / "summary.json.tmp"
    tmp.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    tmp.replace(out / "summary.json")


def _summary(result: EigenResult, opts: SolveOptions, A, B, oracle_value, oracle_vector,
             converged: bool, timing: str, extra: dict) -> dict:
    v = result.eigenvector
    Bv = v if B is None else B @ v
    s = dict(
        eigenvalue=result.eigenvalue,
        eigenvector=[float(x) for x in v],
        iterations=result.iterations,
        accepted_steps=result.accepted_steps,
        anneal_seconds=(result.anneal_seconds if timing == "wall"
                        else result.anneal_work * ex.WORK_SECONDS),
        anneal_work=result.anneal_work,
        residual=float(np.linalg.norm(A @ v - result.eigenvalue * Bv)),
        converged=converged,
        options={k: val for k, val in asdict(opts).items()},
    )
    if oracle_value is not None:
        s["oracle_eigenvalue"] = oracle_value
        s["eval_err"] = abs(result.eigenvalue - oracle_value)
        s["evec_err"] = eigvec_error(v, oracle_vector)
    s.update(extra)
    return s


def _run_solve(args, A, B=None, w0=None) -> int:
    largest = getattr(args, "largest", False)
    oracle_value, oracle_vector = _oracle(A, B, largest)
    stop = args.stop or "precision"
    if stop == "oracle" and oracle_value is None:
        log.error("--stop oracle needs a matrix small enough for the reference solver")
        return EXIT_INPUT
    opts = options_from_args(args, target=oracle_value)
    if B is not None:
        solve = lambda M, o: solve_generalized(M, B, o, w0)  # noqa: E731
    elif getattr(args, "ising", False):
        solve = solve_smallest_ising
    elif largest:
        solve = solve_largest
    else:
        solve = solve_smallest

    converged, code = True, EXIT_OK
    try:
        result = solve(A, opts)
    except ConvergenceError as exc:
        log.error("%s", exc)
        result, converged, code = exc.result, False, EXIT_NO_CONVERGENCE
    extra = {"variant": "generalized" if B is not None else
             "ising" if getattr(args, "ising", False) else
             "largest" if largest else "smallest"}
    summary = _summary(result, opts, A, B, oracle_value, oracle_vector, converged,
                       args.timing, extra)
    _write_outputs(args.out, result, summary, oracle_value, oracle_vector, args.timing)
    print(f"eigenvalue {float(result.eigenvalue)!r}  iterations {result.iterations}"
          + (f"  eval_err {summary['eval_err']:.3e}" if oracle_value is not None else ""))
    return code


def cmd_solve(args) -> int:
    return _run_solve(args, _load_matrix(args))


def _read_side(mtx, diag, name):
    if mtx is not None:
        return load_matrix_market(mtx)
    if diag is not None:
        return np.diag(diag)
    raise ValueError(f"{name} matrix missing: give --{name.lower()}-mtx or --{name.lower()}-diag")


def cmd_solve_gen(args) -> int:
    seed = args.seed if args.matrix_seed is None else args.matrix_seed
    if args.pair == "spd":
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((args.n, args.n))
        A = 0.5 * (X + X.T)
        B = random_spd(args.n, seed + 1)
    elif args.pair == "mesh":
        side = int(round(np.sqrt(args.n)))
        A, B = mesh_pair(side, max(args.n // side, 2))
    else:
        A = _read_side(args.a_mtx, args.a_diag, "A")
        B = _read_side(args.b_mtx, args.b_diag, "B")
    if A.shape != B.shape:
        raise ValueError(f"A is {A.shape} but B is {B.shape}")
    try:
        np.linalg.cholesky(B)
    except np.linalg.LinAlgError:
        raise DefinitenessError("matrix B is not positive definite") from None
    w0 = np.loadtxt(args.init_vector).reshape(-1) if args.init_vector else None
    return _run_solve(args, A, B, w0)


def cmd_experiment(args) -> int:
    stop = args.stop or ("precision" if args.suite == "degenerate" else "oracle")
    base = options_from_args(args, bits=4, stop_default=stop, target=0.0)
    seeds = None if args.seeds is None else range(args.seeds)
    kw = {}
    if args.bits_list:
        kw["bits"] = tuple(args.bits_list)
    if seeds is not None:
        kw["seeds"] = seeds
    if args.sizes and args.suite != "bits-sweep":
        kw["sizes"] = tuple(args.sizes)

    if args.suite == "params":
        cells = ex.params_cells(base, inits=tuple(args.inits.split(",")), **kw)
    elif args.suite == "gap":
        if args.gaps:
            kw["gaps"] = tuple(args.gaps)
        cells = ex.gap_cells(base, **kw)
    elif args.suite == "degenerate":
        cells = ex.degenerate_cells(base, **kw)
    else:
        if args.mtx is not None:
            spec = EnsembleSpec("explicit", path=str(args.mtx))
        else:
            spec = EnsembleSpec("mp", n=args.n, seed=args.matrix_seed, ratio=args.ratio)
        cells = ex.bits_sweep_cells(base, spec, trace_dir=args.out / "traces",
                                    timing=args.timing, **kw)

    rows = ex.run_cells(cells)
    summary = ex.write_results(args.out, rows)
    failed = sum(r["status"] != "ok" for r in rows)
    for s in summary:
        print(", ".join(f"{k}={s[k]}" for k in ("suite", "n", "bits", "response", "alpha", "gap")
                        if s[k] != "")
              + f": iterations {s['mean_iterations']}, guess err {s['mean_guess_evec_err']}")
    if failed:
        log.warning("%d of %d runs failed; see raw.csv", failed, len(rows))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"solve": cmd_solve, "solve-gen": cmd_solve_gen, "experiment": cmd_experiment}
    try:
        return handler[args.command](args)
    except (MatrixFormatError, DefinitenessError, DegenerateSampleError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
