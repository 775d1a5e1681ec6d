#!/usr/bin/env python3
"""Replication-error convergence for the put-block hedge.

Rebalances the feedback strategy on successively finer step grids and
prints the RMS of the residual initial_cost + I(Y*) + H_L, which should
shrink like sqrt(dt).  Run from the repo root:

    python scripts/convergence_study.py [--paths 500] [--seed 7]
"""

import argparse

import numpy as np

from impact_hedge.closed_form import PutBlockSpec, replication_cost
from impact_hedge.model import Affine, FactorModel, LogCoshPut, QuadraticDriver, constant
from impact_hedge.pde import SpaceTimeGrid, build_family
from impact_hedge.simulate import hedge_plan, replication_test, simulate_paths


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=500)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--steps", type=int, nargs="+", default=[250, 500, 1000, 2000, 4000])
    args = ap.parse_args()

    spec = PutBlockSpec(lam=10.0, gamma=0.1, b=100.0, c=1.0, K=100.0, T=1.0)
    model = FactorModel(f0=100.0, drift=constant(0.0), vol=constant(1.0), horizon=1.0)
    grid = SpaceTimeGrid(91.0, 109.0, 361, 400, 1.0)
    h_M, s = Affine(0.0, 0.0), Affine(0.0, 1.0)
    h_L = LogCoshPut(spec.lam, spec.gamma, spec.K, scale=-1.0)
    driver = QuadraticDriver(spec.gamma)

    family = build_family(model, driver, h_M, s, np.linspace(-21.0, 1.0, 89), grid)
    plan = hedge_plan(model, driver, h_M, h_L, s, family, grid)
    exact, _ = replication_cost(spec)
    print(f"initial cost (FD) {plan.initial_cost:.6f}  closed form {exact:.6f}")
    print(f"{'n_steps':>8} {'rms':>12} {'rms/cost':>10} {'mean':>12}")
    prev = None
    for n in args.steps:
        ens = simulate_paths(model, n, args.paths, args.seed)
        rep = replication_test(plan, ens, family, h_L, s)
        note = "" if prev is None else f"  ratio {prev / rep.rms:.3f}"
        print(f"{n:>8} {rep.rms:>12.5e} {rep.rms / plan.initial_cost:>10.4%} "
              f"{rep.mean:>12.4e}{note}")
        prev = rep.rms


if __name__ == "__main__":
    main()
