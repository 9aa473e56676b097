"""Guess-phase settings: best vs full response and bias alpha, MP(0.3) matrices.

    python scripts/params_study.py --out runs/params
"""

import argparse
from pathlib import Path

from qubo_eig.experiments import default_experiment_options, params_cells, run_cells, write_results


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("runs/params"))
    p.add_argument("--sizes", type=int, nargs="+", default=[10, 20])
    p.add_argument("--bits", type=int, nargs="+", default=[2, 4, 6, 8])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--inits", nargs="+", default=["trace"], choices=("trace", "gershgorin"))
    args = p.parse_args()

    cells = params_cells(default_experiment_options(), sizes=tuple(args.sizes), bits=tuple(args.bits),
                         inits=tuple(args.inits), seeds=range(args.seeds))
    summary = write_results(args.out, run_cells(cells))
    print(f"{'n':>3} {'bits':>4} {'response':>8} {'alpha':>5} {'init':>10} {'guess err':>9} {'iters':>6}")
    for s in summary:
        print(f"{s['n']:>3} {s['bits']:>4} {s['response']:>8} {float(s['alpha']):>5g} {s['init']:>10} "
              f"{s['mean_guess_evec_err']:>9.3f} {s['mean_iterations']:>6.1f}")


if __name__ == "__main__":
    main()
