"""Run every reproduce target and write one CSV per target.

    python3 scripts/reproduce_all.py --out results/ --workers 4
"""
import argparse
import inspect
import os
import time
from pathlib import Path

from latticeforge.reproduce import TARGETS, Check


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--workers", type=int, default=os.cpu_count())
    ap.add_argument("--only", nargs="*", choices=sorted(TARGETS))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    failed = 0
    for name in args.only or TARGETS:
        fn = TARGETS[name]
        kw = {"workers": args.workers} if "workers" in inspect.signature(fn).parameters else {}
        t = time.perf_counter()
        rows = fn(**kw)
        dt = time.perf_counter() - t
        (args.out / f"{name}.csv").write_text(
            "\n".join([Check.CSV_HEADER] + [r.csv_row() for r in rows]) + "\n")
        bad = [r.name for r in rows if not r.passed]
        failed += bool(bad)
        print(f"{name:18s} {'FAIL' if bad else 'PASS'} {dt:7.1f} s {' '.join(bad)}", flush=True)
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
