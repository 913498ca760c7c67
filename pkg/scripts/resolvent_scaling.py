#!/usr/bin/env python3
"""Fit the L_mu -> L_nu decay of the free resolvent norm along lambda = iy.

For each exponent pair the expected slope is -1 + 1/mu - 1/nu; the script
prints the fitted log-log slope from a battery of indicator test functions.
"""
import argparse
import sys

import numpy as np

from diraclab import boundary_from_config, build_mesh, opnorm_scaling

PAIRS = [(1.0, 1.0), (2.0, 2.0), (1.0, 2.0), (2.0, np.inf),
         (1.0, np.inf), (4.0 / 3.0, 4.0)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--boundary", default="dirichlet_analog")
    ap.add_argument("--panels", type=int, default=256)
    ap.add_argument("--y", default="4,8,16,32,64")
    args = ap.parse_args()
    U = boundary_from_config(args.boundary)
    mesh = build_mesh(args.panels, order=5)
    ys = [float(v) for v in args.y.split(",")]
    print(f"{'mu':>6} {'nu':>6} {'fitted':>8} {'expected':>9} {'prefactor':>10}")
    for mu, nu in PAIRS:
        est = opnorm_scaling(U, mu, nu, ys, mesh=mesh)
        expected = -1.0 + (0.0 if mu == np.inf else 1.0 / mu) \
            - (0.0 if nu == np.inf else 1.0 / nu)
        fnu = "inf" if nu == np.inf else f"{nu:g}"
        print(f"{mu:>6g} {fnu:>6} {est.slope:>+8.3f} {expected:>+9.3f} "
              f"{est.prefactor:>10.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
