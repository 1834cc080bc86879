"""Hard-core gas in a small ball: GCMC mean occupation vs the truncated partition function.

Runs one chain per spacetime and prints the z-score of the difference.

    python3 scripts/hard_core_chains.py --sweeps 20000
"""

import argparse

from relgas import geometry as geo
from relgas.gibbs import Potential, gcmc_chain, truncated_partition
from relgas.thermo import ordered_map


def one(args, sp):
    k = geo.PhysicalConstants.natural()
    gas = geo.GasSpec(1.0, args.T, args.mu)
    reg = geo.Ball(args.radius)
    pot = Potential.hard_spheres(args.hard_core)
    part = truncated_partition(reg, sp, gas, k, pot, n_max=args.n_max)
    chain = gcmc_chain(reg, sp, gas, k, pot, seed=args.seed, sweeps=args.sweeps, burn_in=args.sweeps // 20)
    return sp.name, part.mean_n, chain.stats.mean_n, chain.stats.stderr


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sweeps", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--radius", type=float, default=0.6)
    ap.add_argument("--hard-core", type=float, default=1.0)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--n-max", type=int, default=9)
    args = ap.parse_args()
    spaces = [geo.Minkowski(), geo.EinsteinStatic(0.3), geo.DeSitter(0.3), geo.AntiDeSitter(-0.3)]
    for name, exact, mc, se in ordered_map(lambda sp: one(args, sp), spaces):
        print(f"{name:16s} partition {exact:.6f}  chain {mc:.6f} +- {se:.6f}  z = {(mc - exact) / se:+.2f}")


if __name__ == "__main__":
    main()
