"""Sufficient-condition intervals for triangular optimality across alpha.

    python3 scripts/condition_intervals.py --alphas 4 5 6 7 8 9 10
"""
import argparse

from latticeforge.analysis import c1_c2_interval, condition_onset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", type=float, nargs="+", default=[1, 2, 3, 4, 5, 6, 7, 8, 9, 10])
    ap.add_argument("--r0", type=float, default=1.0)
    args = ap.parse_args()
    print(f"# onset alpha = {condition_onset(args.r0):.6f}")
    print("alpha,lower,upper")
    for a in args.alphas:
        r = c1_c2_interval(a, args.r0)
        lo, hi = r.interval or ("", "")
        print(f"{a:g},{lo},{hi}")


if __name__ == "__main__":
    main()
