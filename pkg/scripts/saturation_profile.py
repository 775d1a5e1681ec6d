#!/usr/bin/env python3
"""Volume saturation of the hedge field Z^y for a call instrument.

Sweeps the Esscher-tilt quadrature over a wide volume range and compares
against the finite lower saturation limit -phi(d)/(gamma sqrt(tau) Phi(d)).
The upper side grows without bound (roughly linearly in y).

    python scripts/saturation_profile.py [--gamma 1.0] [--strike 0.0]
"""

import argparse

import numpy as np

from impact_hedge.closed_form import ExpUtilitySpec, call_z_limits, exp_utility_z
from impact_hedge.model import Affine, Call


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--strike", type=float, default=0.0)
    ap.add_argument("--w", type=float, default=0.0, help="current factor level")
    ap.add_argument("--tau", type=float, default=1.0, help="time to maturity")
    args = ap.parse_args()

    spec = ExpUtilitySpec(gamma=args.gamma, h_M=Affine(0.0, 0.0),
                          s=Call(args.strike), b=0.0, beta=0.0, sigma=1.0)
    limit = call_z_limits(args.gamma, args.strike, args.w, args.tau)
    print(f"lower saturation limit {limit.lower:.10f}; unbounded above")
    print(f"{'y':>10} {'Z^y':>16} {'gap to limit':>14}")
    for y in (-200.0, -100.0, -50.0, -20.0, -5.0, -1.0, 1.0, 5.0, 20.0, 50.0, 200.0):
        z = exp_utility_z(spec, args.w, 0.0, y, T=args.tau)
        gap = z - limit.lower
        print(f"{y:>10.1f} {z:>16.8f} {gap:>14.4e}")


if __name__ == "__main__":
    main()
