"""Mean iteration counts against the spectral gap (n=10, 30 seeds by default).

    python scripts/gap_study.py --out runs/gap
"""

import argparse
from pathlib import Path

from qubo_eig.experiments import default_experiment_options, gap_cells, run_cells, write_results


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("runs/gap"))
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--seeds", type=int, default=30)
    p.add_argument("--bits", type=int, nargs="+", default=[2, 4])
    p.add_argument("--gaps", type=float, nargs="+", default=[0.0, 0.01, 0.1, 0.5, 1.0])
    p.add_argument("--stop", choices=("oracle", "precision"), default="oracle")
    args = p.parse_args()

    base = default_experiment_options(stop=args.stop)
    cells = gap_cells(base, sizes=(args.n,), bits=tuple(args.bits), gaps=tuple(args.gaps),
                      seeds=range(args.seeds))
    summary = write_results(args.out, run_cells(cells))
    print(f"{'bits':>4} {'gap':>6} {'ok':>4} {'iterations':>10}")
    for s in summary:
        print(f"{s['bits']:>4} {float(s['gap']):>6g} {s['ok']:>4} {s['mean_iterations']:>10.2f}")


if __name__ == "__main__":
    main()
