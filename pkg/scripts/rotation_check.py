"""Homotopy distance between critical FK loop ensembles and their rotated copies."""

import argparse
import json

from critlab.homotopy import rotation_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=64)
    ap.add_argument("--samples", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(json.dumps(rotation_check(args.m, args.samples, args.seed), indent=2, default=float))


if __name__ == "__main__":
    main()
