"""Compare two ways of aggregating excursion weights into the renormalized psi.

``walk``: the default. Sums exp(psi) over every phi-optimal walk between
heavy endpoints (a resolvent over the non-heavy interior), weighted by the
left eigenvector at the start and the right eigenvector at the end.

``series``: sums, over elementary optimal paths only, exp(psi(path)) times the
sum of the return series of its interior vertices, with the eigenvector
weights attached the other way round (right at the start, left at the end).

Both ladders are compared with the equilibrium state at a large beta.

    python scripts/psi_prime_variants.py --count 40 --beta 200
"""

import argparse
import random
from fractions import Fraction
from unittest import mock

import numpy as np
from scipy.special import logsumexp

from zerotemp import renorm
from zerotemp.finite_beta import equilibrium_state
from zerotemp.potentials import Potential, path_sum
from zerotemp.sft import Digraph, is_irreducible


def series_potentials(sys, heavy, g_prime, central, trans):
    rs = renorm_default(sys, heavy, g_prime, central, trans)
    Mbar = renorm._xbar_matrix(sys, heavy)
    psi_p = {}
    for (J, K), pairs in rs.argmax_pairs.items():
        CJ, CK = heavy.heavy[J], heavy.heavy[K]
        terms = []
        for a, c in pairs:
            for path in trans.paths[(a, c)]:
                P = renorm.transition_pressure(sys, heavy, path, Mbar)
                terms.append(CJ.log_v(a) + CK.log_w(c) + path_sum(sys.psi, path) + P)
        psi_p[(J, K)] = float(logsumexp(terms))
    return renorm.RenormalizedSystem(rs.graph, rs.phi, Potential(rs.graph, psi_p),
                                     rs.argmax_pairs, central, trans)


renorm_default = renorm.renormalized_potentials


def tied_system(rng):
    """Tied heavy 2-cycles, light zero-cost loops in between, random connecting arrows.

    Each heavy 2-cycle carries psi = (x, -x), so all have pressure 0 while
    their eigenvectors differ; light loops make excursion interiors nontrivial.
    """
    pairs = rng.randint(2, 3)
    light = rng.randint(1, 2)
    n = 2 * pairs + light
    phi, psi = {}, {}
    for k in range(pairs):
        x = rng.uniform(-1, 1)
        a, b = 2 * k, 2 * k + 1
        phi[(a, b)] = phi[(b, a)] = Fraction(0)
        psi[(a, b)], psi[(b, a)] = x, -x
    for v in range(2 * pairs, n):
        phi[(v, v)] = Fraction(0)
        psi[(v, v)] = -rng.uniform(0.2, 2)
    while True:
        extra = {(a, b) for a in range(n) for b in range(n)
                 if (a, b) not in phi and a // 2 != b // 2 and rng.random() < 0.4}
        g = Digraph(tuple("abcdefgh"[:n]), frozenset(set(phi) | extra))
        if is_irreducible(g):
            break
    phi = {**phi, **{e: Fraction(-rng.choice([1, 1, 2])) for e in extra}}
    psi = {**psi, **{e: rng.uniform(-1, 1) for e in extra}}
    return g, phi, psi


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=40)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--beta", type=float, default=200.0)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    errs = {"walk": [], "series": []}
    tried = 0
    while len(errs["walk"]) < args.count:
        tried += 1
        g, phi, psi = tied_system(rng)
        L = renorm.zero_temperature_limit(g, phi, psi)
        top = L.levels[-1].heavy.heavy[0]
        if len(L.levels) < 2 or len(top.vertices) < 2:  # psi' is inert otherwise
            continue
        truth = equilibrium_state(g, phi, psi, args.beta).marginals
        errs["walk"].append(float(np.abs(L.symbol_masses() - truth).max()))
        with mock.patch.object(renorm, "renormalized_potentials", series_potentials):
            Ls = renorm.zero_temperature_limit(g, phi, psi)
        errs["series"].append(float(np.abs(Ls.symbol_masses() - truth).max()))
    print(f"{args.count} systems whose limit depends on the renormalized psi ({tried} drawn), beta = {args.beta:g}")
    for name, e in errs.items():
        e = np.array(e)
        print(f"  {name:>6}: max err {e.max():.2e}  median {np.median(e):.1e}  "
              f"below 1e-6: {int((e < 1e-6).sum())}/{len(e)}")
    gap = np.array(errs["series"]) - np.array(errs["walk"])
    print(f"  series worse than walk on {int((gap > 1e-9).sum())}, better on {int((gap < -1e-9).sum())}")


if __name__ == "__main__":
    main()
