"""Mean gap and total variation between relativistic and Newtonian occupation laws along a c-sweep.

The gap should shrink by about 4 per doubling of c (leading correction 15/(8 theta)).

    python3 scripts/newtonian_limit.py --spacetime kerr --doublings 6
"""

import argparse

from relgas import geometry as geo
from relgas import thermo


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--spacetime", choices=("minkowski", "einstein_static", "kerr"), default="kerr")
    ap.add_argument("--doublings", type=int, default=5)
    ap.add_argument("--T", type=float, default=0.01)
    ap.add_argument("--mu", type=float, default=0.06)
    ap.add_argument("--radius", type=float, default=3.0)
    args = ap.parse_args()
    k = geo.PhysicalConstants.natural()
    sp = {
        "minkowski": geo.Minkowski(),
        "einstein_static": geo.EinsteinStatic(1e-3),
        "kerr": geo.KerrCircularOrbit(M=1.0, a=0.5, r0=100.0, G=1.0, c=1.0),
    }[args.spacetime]
    cs = [2.0**i for i in range(args.doublings)]
    res = thermo.newtonian_limit_sweep(sp, geo.Ball(args.radius), geo.GasSpec(1.0, args.T, args.mu), k, cs)
    print(f"{'c':>6} {'theta':>10} {'<N> rel':>14} {'<N> newt':>14} {'gap':>11} {'TV':>11}")
    for r in res.rows:
        print(f"{r.c:6g} {r.theta:10.4g} {r.mean_rel:14.8g} {r.mean_newt:14.8g} {r.gap:11.3e} {r.tv:11.3e}")
    print("gap ratios:", " ".join(f"{v:.4f}" for v in res.gap_ratios))


if __name__ == "__main__":
    main()
