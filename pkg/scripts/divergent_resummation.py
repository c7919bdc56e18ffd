"""Partial sums of the delta series beyond its radius, and what acceleration recovers."""

import argparse

from deltascatter.born import Delta, accelerate, delta_kernel, partial_sum, resum_closed
from deltascatter.propagator import Kinematics


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lam", type=float, nargs="+", default=[0.5, 1.5, 2.0, 10.0],
                    help="kernel values m alpha / p (p = 1)")
    ap.add_argument("--order", type=int, default=10)
    args = ap.parse_args()

    for lam in args.lam:
        kernel = delta_kernel(Kinematics.from_momentum(1.0), Delta(lam))
        closed = resum_closed(kernel).t
        rep = partial_sum(kernel, args.order)
        print(f"lam = {lam:g}: closed t = {closed:.12g}, ratio = {rep.ratio:g}, "
              f"{'divergent' if rep.divergent else 'convergent'}")
        for n in (0, 1, 2, args.order):
            print(f"  |S_{n} - t| = {abs(rep.partial_sums[n].t - closed):.4e}")
        for method in ("shanks", "pade"):
            err = abs(accelerate(rep, method).t - closed)
            print(f"  {method:6s} |error| = {err:.3e}")


if __name__ == "__main__":
    main()
