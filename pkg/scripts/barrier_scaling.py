"""Deviation of the resummed wall amplitude from the exact one as V0 is halved.

Prints |t_resummed - t_exact| for both wall kernels and the ratio between
successive halvings. A ratio near 4 means the resummation is exact through
first order in V0; near 2 means only the free term is right.
"""

import argparse

import numpy as np

from deltascatter.born import Barrier, barrier_channel_kernel, barrier_kernel, resum_closed
from deltascatter.oracle import tm_solve
from deltascatter.propagator import Kinematics


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--energy", type=float, default=2.0)
    ap.add_argument("--width", type=float, default=1.0)
    ap.add_argument("--v0", type=float, default=0.2, help="starting wall height")
    ap.add_argument("--halvings", type=int, default=6)
    args = ap.parse_args()

    kin = Kinematics(1.0, args.energy)
    print(f"{'V0':>12} {'dev_series':>12} {'ratio':>7} {'dev_printed':>12} {'ratio':>7}")
    prev = None
    for V0 in args.v0 / 2.0 ** np.arange(args.halvings + 1):
        pot = Barrier(float(V0), args.width)
        exact = tm_solve(kin, pot).t
        devs = [abs(resum_closed(fn(kin, pot)).t - exact) for fn in (barrier_channel_kernel, barrier_kernel)]
        ratios = ["" if prev is None else f"{p / d:7.3f}" for p, d in zip(prev or devs, devs)]
        print(f"{V0:12.6g} {devs[0]:12.4e} {ratios[0]:>7} {devs[1]:12.4e} {ratios[1]:>7}")
        prev = devs


if __name__ == "__main__":
    main()
