"""Leading-eigenvalue ratios of six-vertex transfer blocks away from the balanced sector."""

import argparse

from critlab.sixvertex import c_of_q, eigen_ratios


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, nargs="+", default=[1.0, 2.0, 3.0, 4.0, 9.0])
    ap.add_argument("--widths", type=int, nargs="+", default=[4, 6, 8, 10, 12])
    ap.add_argument("--rmax", type=int, default=2)
    args = ap.parse_args()
    print("q,N,r,ratio")
    for q in args.q:
        c = c_of_q(q)
        for N in args.widths:
            ratios, _ = eigen_ratios(N, min(args.rmax, N // 2), c)
            for r, x in enumerate(ratios):
                print(f"{q},{N},{r},{x:.10f}")


if __name__ == "__main__":
    main()
