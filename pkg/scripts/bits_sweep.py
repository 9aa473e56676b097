"""Convergence traces across bit counts for one fixed matrix.

Writes one trace CSV per (bits, seed) under ``OUT/traces`` plus raw/summary
tables.  Plot ``evec_err`` or ``precision`` against ``iter`` with any tool.

    python scripts/bits_sweep.py --n 50 --out runs/bits
    python scripts/bits_sweep.py --mtx some_matrix.mtx --out runs/bits_mtx
"""

import argparse
from pathlib import Path

from qubo_eig.experiments import (
    bits_sweep_cells, default_experiment_options, run_cells, write_results,
)
from qubo_eig.matgen import EnsembleSpec


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("runs/bits"))
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--matrix-seed", type=int, default=0)
    p.add_argument("--mtx", type=Path)
    p.add_argument("--bits", type=int, nargs="+", default=[2, 4, 6, 8])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--timing", choices=("wall", "work"), default="wall")
    args = p.parse_args()

    spec = (EnsembleSpec("explicit", path=str(args.mtx)) if args.mtx
            else EnsembleSpec("mp", n=args.n, seed=args.matrix_seed))
    cells = bits_sweep_cells(default_experiment_options(), spec, bits=tuple(args.bits),
                             seeds=range(args.seeds), trace_dir=args.out / "traces",
                             timing=args.timing)
    summary = write_results(args.out, run_cells(cells))
    print(f"{'bits':>4} {'iterations':>10} {'anneal s':>9}")
    for s in summary:
        print(f"{s['bits']:>4} {s['mean_iterations']:>10.1f} {s['mean_anneal_s']:>9.2f}")


if __name__ == "__main__":
    main()
