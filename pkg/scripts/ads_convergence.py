"""Relative gap between finite-ball AdS pressures and -rho_vac, for several reduced temperatures.

    python3 scripts/ads_convergence.py --thetas 1 10 100 --k-max 12
"""

import argparse
import csv
import sys

from relgas import geometry as geo
from relgas import thermo


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--thetas", type=float, nargs="+", default=[1.0, 10.0, 100.0])
    ap.add_argument("--k-max", type=int, default=12)
    ap.add_argument("--lam", type=float, default=-3.0)
    args = ap.parse_args()
    k = geo.PhysicalConstants.natural()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["theta", "k_index", "radius_m", "pressure_Pa", "relative_gap"])
    for th in args.thetas:
        for r in thermo.ads_pressure_sequence(geo.GasSpec(1.0, 1.0 / th), k, args.lam, args.k_max):
            w.writerow([th, r.k_index, r.radius, repr(r.pressure), repr(r.relative_gap)])


if __name__ == "__main__":
    main()
