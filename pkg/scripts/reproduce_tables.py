"""Finite-beta tables and renormalization ladders for the bundled examples.

    python scripts/reproduce_tables.py [example2 example3 ...]
"""

import argparse
import math

from zerotemp.cli import load_spec
from zerotemp.finite_beta import beta_sweep
from zerotemp.renorm import zero_temperature_limit


def show_ladder(L):
    for depth, lvl in enumerate(L.levels):
        sys = lvl.system
        comps = [" ".join(sys.graph.names[v] for v in c.vertices) for c in lvl.heavy.heavy]
        print(f"  level {depth}: {sys.graph.n} symbols, heavy {comps}")
        if lvl.renormalized is None:
            continue
        rs = lvl.renormalized
        for (J, K), x in sorted(rs.phi.items()):
            print(f"    {J + 1}->{K + 1}: phi' = {str(x):>5}  psi' = {rs.psi[(J, K)]: .6f}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("examples", nargs="*", default=["example1", "example2", "example3"])
    ap.add_argument("--kmax", type=int, default=6, help="largest multiple of log 2")
    args = ap.parse_args()
    betas = [k * math.log(2) for k in range(1, args.kmax + 1)]
    for name in args.examples:
        g, phi, psi = load_spec(name).system()
        L = zero_temperature_limit(g, phi, psi)
        print(f"== {name}")
        show_ladder(L)
        sweep = beta_sweep(g, phi, psi, betas, list(g.names), L)
        print("  beta/log2 " + "".join(f"{c:>10}" for c in sweep.cylinders))
        for b, row in sweep.rows():
            label = b if isinstance(b, str) else f"{b / math.log(2):.0f}"
            print(f"  {label:>9} " + "".join(f"{x:10.6f}" for x in row))


if __name__ == "__main__":
    main()
