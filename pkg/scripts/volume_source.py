"""Volume-source study: error against kh/p for a compactly supported current.

python scripts/volume_source.py [--k 2] [--p 1] [--refine 2,3,4]
"""
import argparse

from maxwell_dtn.potentials import SourceSpec, VolumeSourceField
from maxwell_dtn.solver import fit_slope, run_case


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=float, default=2.0)
    ap.add_argument("--p", type=int, default=1)
    ap.add_argument("--refine", default="2,3,4")
    ap.add_argument("--shell", default="0.1,0.8", help="support a,b of the radial profile")
    args = ap.parse_args()
    a, b = (float(v) for v in args.shell.split(","))
    field = VolumeSourceField(args.k, SourceSpec(ell=1, m=0, a=a, b=b))
    xs, errs = [], []
    for n in (int(v) for v in args.refine.split(",")):
        r = run_case(args.k, args.p, n, field, with_delta=False)[0]
        xs.append(args.k * r.h / max(args.p, 1))
        errs.append(r.err_curl_k)
        print("n=%d kh/p=%.3f dofs=%d err=%.4e proxy=%.4e" % (n, xs[-1], r.dofs, r.err_curl_k, r.proxy_err))
    print("slope vs kh/p: %.2f" % fit_slope(xs, errs))


if __name__ == "__main__":
    main()
