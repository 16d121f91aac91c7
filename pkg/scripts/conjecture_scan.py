"""Observed hcp/bcc/fcc ordering of dilation minima across Morse alpha.

    python3 scripts/conjecture_scan.py --alpha-min 2.8 --alpha-max 10 --num 30
"""
import argparse

import numpy as np

from latticeforge.analysis import conjecture_report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha-min", type=float, default=2.8)
    ap.add_argument("--alpha-max", type=float, default=10.0)
    ap.add_argument("--num", type=int, default=30)
    ap.add_argument("--r0", type=float, default=1.0)
    args = ap.parse_args()
    alphas = np.linspace(args.alpha_min, args.alpha_max, args.num)
    print("alpha,order,label,H,B,F")
    for r in conjecture_report([float(a) for a in alphas], r0=args.r0):
        o = r.ordering
        print(f"{r.alpha:.4f},{r.order},{r.label},{o.H:.12f},{o.B:.12f},{o.F:.12f}", flush=True)


if __name__ == "__main__":
    main()
