"""Susceptibility of the torus Ising model across a beta grid (Wolff dynamics)."""

import argparse

import numpy as np

from critlab import BETA_C_2D
from critlab.ising import susceptibility_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--l", type=int, default=32)
    ap.add_argument("--samples", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--betas", default="0.36,0.40,0.42,0.43,0.44,0.45,0.46,0.48,0.52")
    args = ap.parse_args()
    betas = [float(b) for b in args.betas.split(",")]
    chi = susceptibility_scan(args.l, betas, args.samples, args.seed)
    print("beta,chi")
    for b, c in zip(betas, chi):
        print(f"{b},{c:.6g}")
    print(f"# argmax beta = {betas[int(np.argmax(chi))]}, critical beta = {BETA_C_2D:.6f}")


if __name__ == "__main__":
    main()
