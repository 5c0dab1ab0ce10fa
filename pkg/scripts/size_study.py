"""Monte-Carlo rejection rates of the equality, dominance and discrete tests.

Null-true panels: in every period the treated unit's quantile function is a
fixed weighted average of the donors' quantile functions. ``--T0`` pre-periods are used
to fit the weights.
"""
import argparse
from pathlib import Path

import numpy as np
from scipy.stats import binom

from dsc import PanelDataset, fit_dsc
from dsc.inference import discrete_equality_test, dominance_test, equality_test
from dsc.simharness import write_summary_csv

LAM = np.array([0.2, 0.3, 0.5])


def continuous_cells(g, n, T):
    # compact donors with bounded quantile densities
    Q = [lambda u: u, lambda u: 1 + 2 * u - u * u, lambda u: -1 + 0.5 * u + u**3]
    cells = {}
    for t in range(T):
        u = 1 - g.random((4, n))
        cells[(0, t)] = sum(l * f(u[0]) for l, f in zip(LAM, Q))
        for j, f in enumerate(Q, start=1):
            cells[(j, t)] = f(u[j])
    return cells


def binomial_cells(g, n, T):
    params = ((10, 0.3), (20, 0.5), (15, 0.7))
    cells = {}
    for t in range(T):
        u = g.random((4, n))
        # target quantiles are the weighted average of the donors' quantiles
        cells[(0, t)] = sum(l * binom.ppf(u[0], m, p) for l, (m, p) in zip(LAM, params))
        for j, (m, p) in enumerate(params, start=1):
            cells[(j, t)] = binom.ppf(u[j], m, p)
    return cells


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kind", choices=("equality", "fsd", "ssd", "discrete"), default="equality")
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--T0", type=int, default=10)
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--B", type=int, default=300)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--out", default="results/size")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    make = binomial_cells if args.kind == "discrete" else continuous_cells
    rows = []
    for r in range(args.reps):
        g = np.random.default_rng(r)
        panel = PanelDataset.from_cells(make(g, args.n, args.T0 + 1), 0, args.T0 - 1)
        res = fit_dsc(panel)
        if args.kind == "equality":
            rep = equality_test(res, panel, args.T0, B=args.B, seed=r)
        elif args.kind == "discrete":
            rep = discrete_equality_test(res, panel, args.T0, B=args.B, seed=r)
        else:
            order = "first" if args.kind == "fsd" else "second"
            rep = dominance_test(res, panel, args.T0, order, B=args.B, seed=r)
        rows.append({"rep": r, "statistic": rep.statistic, "p_value": rep.p_value})
    rate = np.mean([row["p_value"] <= args.alpha for row in rows])
    print(f"{args.kind}: rejection rate {rate:.3f} at alpha {args.alpha} over {args.reps} reps")
    write_summary_csv(rows, out / f"{args.kind}.csv")


if __name__ == "__main__":
    main()
