"""Quasi-optimality ratio and delta_k probe across k at a fixed scale resolution.

python scripts/k_study.py [--c1 2] [--refine 3]

Prints the resolution needed for kh/p <= c1 and the runs that fit the caps.
"""
import argparse
import math

from maxwell_dtn.cli import choose_resolution
from maxwell_dtn.potentials import InteriorMode
from maxwell_dtn.solver import run_case


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", default="2,4,8")
    ap.add_argument("--c1", type=float, default=2.0)
    ap.add_argument("--c2", type=float, default=1.0)
    ap.add_argument("--max-dofs", type=int, default=60000)
    args = ap.parse_args()
    for k in (float(v) for v in args.k.split(",")):
        p, n, ok, why = choose_resolution(k, args.c1, args.c2, args.max_dofs)
        if not ok:
            print("k=%g p=%d: kh/p <= %g not reachable (%s)" % (k, p, args.c1, why))
            continue
        res, _, _ = run_case(k, p, n, InteriorMode(1, 0, k, "TE"), c1=args.c1, c2=args.c2)
        print("k=%g p=%d n=%d dofs=%d kh/p=%.2f ratio=%.3f delta=%.3f (%.0f s)"
              % (k, p, n, res.dofs, k * res.h / max(p, 1), res.ratio, res.delta_k, res.seconds))
    print("p = ceil(c2 ln k):", [max(math.ceil(args.c2 * math.log(float(k))), 0) for k in args.k.split(",")])


if __name__ == "__main__":
    main()
