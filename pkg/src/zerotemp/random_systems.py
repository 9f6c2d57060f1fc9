"""Random irreducible systems for oracle comparisons."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from .potentials import NormalizedSystem
from .sft import Digraph, is_irreducible

PHI_NUMERATORS = (0, -1, -2, -3)
PHI_DENOMINATORS = (1, 2)
NEAR_TIE = 1e-6


def random_system(rng: random.Random, max_symbols: int = 4, arrow_prob: float = 0.6,
                  psi_scale: float = 1.0) -> tuple[Digraph, dict, dict]:
    """Irreducible graph on 2..max_symbols vertices with grid-valued phi.

    Half of the draws use ``psi = 0``; the rest draw psi uniformly from
    ``[-psi_scale, psi_scale]``.
    """
    n = rng.randint(2, max_symbols)
    names = tuple("abcdefgh"[:n])
    while True:
        arrows = frozenset((a, b) for a in range(n) for b in range(n) if rng.random() < arrow_prob)
        g = Digraph(names, arrows)
        if is_irreducible(g):
            break
    phi = {e: Fraction(rng.choice(PHI_NUMERATORS), rng.choice(PHI_DENOMINATORS)) for e in g.sorted_arrows}
    if rng.random() < 0.5:
        psi = {e: 0.0 for e in g.sorted_arrows}
    else:
        psi = {e: rng.uniform(-psi_scale, psi_scale) for e in g.sorted_arrows}
    return g, phi, psi


def near_tie(sys: NormalizedSystem, width: float = NEAR_TIE) -> bool:
    """Two component pressures closer than ``width`` but not tied within the heavy tolerance.

    Such pairs are split by the heavy classification while finite-beta
    measures only resolve them for beta far beyond 1/gap.
    """
    P = sys.component_pressures()
    return any(sys.eps_rho < abs(x - y) < width for x, y in itertools.combinations(P, 2))
