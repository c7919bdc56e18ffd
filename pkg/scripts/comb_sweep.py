"""Transmission of a random delta comb over momentum, from three independent solvers."""

import argparse

import numpy as np

from deltascatter.born import DeltaComb, comb_solve
from deltascatter.oracle import ode_solve, tm_solve
from deltascatter.propagator import Kinematics


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sites", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--points", type=int, default=12)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    pot = DeltaComb(rng.uniform(-1, 1, args.sites), np.sort(rng.uniform(0, 3, args.sites)))
    print("alphas   ", np.round(pot.alphas, 4))
    print("positions", np.round(pot.positions, 4))
    print(f"{'p':>7} {'T':>10} {'|dt| tm':>10} {'|dt| ode':>10} {'ode est':>10}")
    for p in np.linspace(0.5, 3.0, args.points):
        kin = Kinematics.from_momentum(float(p))
        amp, tm, ode = comb_solve(kin, pot), tm_solve(kin, pot), ode_solve(kin, pot)
        print(f"{p:7.3f} {amp.T:10.6f} {abs(amp.t - tm.t):10.2e} {abs(amp.t - ode.t):10.2e} {ode.error:10.2e}")


if __name__ == "__main__":
    main()
