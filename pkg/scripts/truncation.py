"""Effect of the DtN truncation degree L_max on the discrete solution.

python scripts/truncation.py [--k 2] [--p 1] [--refine 2]
"""
import argparse

import numpy as np

from maxwell_dtn.femcore.assembly import Load, assemble_system
from maxwell_dtn.femcore.mesh import build_ball_mesh
from maxwell_dtn.potentials import InteriorMode
from maxwell_dtn.solver import default_L_max, error_norm, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=float, default=2.0)
    ap.add_argument("--p", type=int, default=1)
    ap.add_argument("--refine", type=int, default=2)
    args = ap.parse_args()
    mode = InteriorMode(1, 0, args.k, "TE")
    mesh = build_ball_mesh(args.refine)
    L0 = default_L_max(args.k)
    sols = {}
    for L in (L0, L0 + 5, L0 + 10, L0 + 20):
        system = assemble_system(mesh, args.p, args.k, L, Load(boundary=mode.boundary_density()))
        sols[L] = (system, solve(system))
    ref = sols[L0 + 20][1]
    for L, (system, x) in sols.items():
        change = np.linalg.norm(x - ref) / np.linalg.norm(ref)
        err = error_norm(system.space, x, mode, args.k)
        print("L_max=%3d change vs L_max+20: %.3e  energy error %.5e" % (L, change, err))


if __name__ == "__main__":
    main()
