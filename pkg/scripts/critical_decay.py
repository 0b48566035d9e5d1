"""Two-point decay exponent of the critical Ising model on a torus."""

import argparse
import json

from critlab.ising import critical_decay


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--l", type=int, default=64)
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rmin", type=int, default=4)
    ap.add_argument("--rmax", type=int, default=16)
    args = ap.parse_args()
    fit = critical_decay(args.l, args.samples, args.seed, window=(args.rmin, args.rmax))
    fit.pop("correlation")
    print(json.dumps({**fit, "expected_delta": 0.25}, indent=2))


if __name__ == "__main__":
    main()
