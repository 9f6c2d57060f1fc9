"""Compare computed limits with direct equilibrium states on random systems.

    python scripts/oracle_sweep.py --count 300 --seed 0 --betas 30,60,120
"""

import argparse
import random
import time

import numpy as np

from zerotemp.finite_beta import equilibrium_state
from zerotemp.potentials import normalize
from zerotemp.random_systems import near_tie, random_system
from zerotemp.renorm import zero_temperature_limit


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--betas", default="30,60")
    ap.add_argument("--threshold", type=float, default=1e-4)
    ap.add_argument("--show", type=int, default=5, help="how many of the slowest systems to print")
    args = ap.parse_args()
    betas = [float(b) for b in args.betas.split(",")]

    rng = random.Random(args.seed)
    t0 = time.perf_counter()
    rows, resampled = [], 0
    while len(rows) < args.count:
        g, phi, psi = random_system(rng)
        sys = normalize(g, phi, psi)
        if near_tie(sys):
            resampled += 1
            continue
        L = zero_temperature_limit(g, phi, psi)
        masses = L.symbol_masses()
        errs = [float(np.abs(equilibrium_state(g, phi, psi, b).marginals - masses).max()) for b in betas]
        rows.append((len(rows), g, phi, sys.report.phi_g, len(L.levels), errs))
    dt = time.perf_counter() - t0

    print(f"{len(rows)} systems, {resampled} near-tie resamples, {dt:.1f}s")
    for j, b in enumerate(betas):
        e = np.array([r[5][j] for r in rows])
        print(f"beta {b:6.1f}: max err {e.max():.2e}, median {np.median(e):.1e}, "
              f"{int((e > args.threshold).sum())} above {args.threshold:g}")
    depth = np.bincount([r[4] for r in rows])
    print("ladder depths:", {d: int(c) for d, c in enumerate(depth) if c})
    print("slowest:")
    for i, g, phi, phi_g, levels, errs in sorted(rows, key=lambda r: -r[5][-1])[:args.show]:
        arrows = " ".join(f"{g.names[a]}{g.names[b]}:{phi[(a, b)]}" for a, b in g.sorted_arrows)
        print(f"  #{i} phi_g={phi_g} levels={levels} errs={['%.1e' % e for e in errs]}  {arrows}")


if __name__ == "__main__":
    main()
