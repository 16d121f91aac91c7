"""Fixed-area 2D phase diagram for one potential, printed as CSV.

    python3 scripts/phase_diagram.py morse --alpha 6 --r0 1 --a-min 1 --a-max 1.5
    python3 scripts/phase_diagram.py lennard_jones --resolution 81
"""
import argparse
import os

from latticeforge.optimize import phase_diagram_2d
from latticeforge.potentials import PotentialSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("kind", choices=["morse", "lennard_jones"])
    ap.add_argument("--alpha", type=float, default=6.0)
    ap.add_argument("--r0", type=float, default=1.0)
    ap.add_argument("--a-min", type=float, default=1.0)
    ap.add_argument("--a-max", type=float, default=1.5)
    ap.add_argument("--resolution", type=int, default=41)
    ap.add_argument("--workers", type=int, default=os.cpu_count())
    args = ap.parse_args()
    spec = (PotentialSpec.morse(args.alpha, args.r0) if args.kind == "morse"
            else PotentialSpec.lennard_jones())
    pd = phase_diagram_2d(spec, args.a_min, args.a_max, resolution=args.resolution,
                          workers=args.workers)
    print("A,shape,param,x,y,energy")
    for p in pd.points:
        print(p.csv_row())
    print()
    print("A,from,to,width")
    for t in pd.transitions:
        print(f"{t.A:.12f},{t.frm},{t.to},{t.width:.3g}")


if __name__ == "__main__":
    main()
