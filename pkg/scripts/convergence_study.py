"""h-convergence for the manufactured interior mode (k = 2, l = 1).

python scripts/convergence_study.py [--k 2] [--out results/convergence.csv]
"""
import argparse
import csv

from maxwell_dtn.potentials import InteriorMode
from maxwell_dtn.solver import fit_slope, run_case

REFINE = {0: (2, 4, 8), 1: (2, 3, 4), 2: (1, 2, 3)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=float, default=2.0)
    ap.add_argument("--pol", default="TE", choices=("TE", "TM"))
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    mode = InteriorMode(1, 0, args.k, args.pol)
    rows = []
    for p, ns in REFINE.items():
        res = [run_case(args.k, p, n, mode, with_delta=False)[0] for n in ns]
        for n, r in zip(ns, res):
            rows.append((p, n, r.h, r.dofs, r.err_curl_k, r.proxy_err, r.ratio, r.extra["orthogonality"]))
            print("p=%d n=%d h=%.3f dofs=%6d err=%.4e proxy=%.4e ratio=%.3f" % rows[-1][:7])
        print("p=%d slope %.2f (target >= %.1f)" % (p, fit_slope([r.h for r in res], [r.err_curl_k for r in res]), p + 0.8))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("p", "refinement", "h", "dofs", "err_curl_k", "proxy_err", "ratio", "orthogonality"))
            w.writerows(rows)


if __name__ == "__main__":
    main()
