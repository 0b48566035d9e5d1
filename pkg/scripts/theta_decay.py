"""One-arm probability theta_n(p) from the exact frontier sum, with a log-log slope."""

import argparse
from fractions import Fraction

import numpy as np

from critlab.percolation import theta


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", default="3/10,1/2,7/10")
    ap.add_argument("--nmax", type=int, default=6)
    args = ap.parse_args()
    print("p,n,theta")
    for ps in args.p.split(","):
        p = Fraction(ps)
        ns = np.arange(1, args.nmax + 1)
        vals = [float(theta(int(n), p).exact) for n in ns]
        for n, v in zip(ns, vals):
            print(f"{ps},{n},{v:.12g}")
        slope = np.polyfit(np.log(ns[1:]), np.log(vals[1:]), 1)[0]
        print(f"# p={ps}: log-log slope over n>=2 = {slope:.4f}")


if __name__ == "__main__":
    main()
