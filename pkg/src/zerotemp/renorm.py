"""Heavy components, renormalized systems and the zero-temperature limit."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .perron import (DEFAULT_TOL, MarkovGibbsMeasure, NotIrreducible, SymbolNotInAlphabet, TransferMatrix, markov_measure,
                     return_series, spectral_radius, transfer_matrix, DivergentSeries)
from .potentials import EPS_RHO, NormalizedSystem, Potential, normalize
from .sft import Arrow, Digraph, PathRec, is_irreducible


class RenormError(RuntimeError):
    pass


class InconsistentHeavyComponent(RenormError):
    pass


class RenormalizedNotIrreducible(RenormError):
    def __init__(self, msg: str, ladder=None):
        super().__init__(msg)
        self.ladder = ladder or []


class IterationCap(RenormError):
    pass


@dataclass(frozen=True)
class ComponentData:
    """A transitive component of the maximizing subshift with its psi-equilibrium state."""

    vertices: tuple[int, ...]
    arrows: frozenset[Arrow]
    pressure: float  # normalized: 0 for heavy components
    measure: MarkovGibbsMeasure  # on the induced subgraph, vertex order = ``vertices``
    heavy: bool

    @property
    def is_cycle(self) -> bool:
        return len(self.arrows) == len(self.vertices)

    def local(self, vertex: int) -> int:
        return self.vertices.index(vertex)

    def log_v(self, vertex: int) -> float:
        return float(self.measure.eig.log_v[self.local(vertex)])

    def log_w(self, vertex: int) -> float:
        return float(self.measure.eig.log_w[self.local(vertex)])

    def mass(self, vertex: int) -> float:
        return float(self.measure.marginals[self.local(vertex)])

    def exact_mass(self, vertex: int) -> Fraction | None:
        return Fraction(1, len(self.vertices)) if self.is_cycle else None


@dataclass(frozen=True)
class HeavyDecomposition:
    components: tuple[ComponentData, ...]  # heavy first
    n_heavy: int
    heavy_arrow_union: frozenset[Arrow]

    @property
    def N(self) -> int:
        return len(self.components)

    @property
    def heavy(self) -> tuple[ComponentData, ...]:
        return self.components[: self.n_heavy]

    @property
    def heavy_vertices(self) -> frozenset[int]:
        return frozenset(v for c in self.heavy for v in c.vertices)

    def owner(self, vertex: int) -> int | None:
        for J, c in enumerate(self.heavy):
            if vertex in c.vertices:
                return J
        return None


def _component_measure(g: Digraph, psi: Mapping[Arrow, float], vertices, arrows, tol) -> MarkovGibbsMeasure:
    pos = {v: i for i, v in enumerate(vertices)}
    sub = Digraph(tuple(g.names[v] for v in vertices), frozenset((pos[a], pos[b]) for a, b in arrows))
    sub_psi = {(pos[a], pos[b]): float(psi[(a, b)]) for a, b in arrows}
    return markov_measure(transfer_matrix(sub, None, sub_psi), tol)


def heavy_components(sys: NormalizedSystem, tol: float = DEFAULT_TOL) -> HeavyDecomposition:
    """Order the components of the maximizing subshift heavy-first and attach their measures."""
    data = []
    for comp in sys.components:
        m = _component_measure(sys.graph, sys.psi, comp.vertices, comp.arrows, tol)
        P = m.eig.log_rho
        data.append(ComponentData(comp.vertices, comp.arrows, P, m, P >= -sys.eps_rho))
    data.sort(key=lambda c: (not c.heavy, c.vertices[0]))
    n_heavy = sum(c.heavy for c in data)
    union = frozenset(e for c in data[:n_heavy] for e in c.arrows)
    return HeavyDecomposition(tuple(data), n_heavy, union)


@dataclass(frozen=True)
class CentralTerms:
    centers: tuple[int, ...]
    phi_ell: Mapping[int, Fraction]  # vertex -> central term, over all heavy vertices


def central_terms(sys: NormalizedSystem, heavy: HeavyDecomposition, rule: str = "smallest") -> CentralTerms:
    """Potential ``phi_ell`` on each heavy component, zero at its central vertex."""
    centers = []
    ell: dict[int, Fraction] = {}
    for comp in heavy.heavy:
        c = min(comp.vertices) if rule == "smallest" else max(comp.vertices)
        centers.append(c)
        succ: dict[int, list[int]] = {v: [] for v in comp.vertices}
        for a, b in comp.arrows:
            succ[a].append(b)
        ell[c] = Fraction(0)
        queue = deque([c])
        while queue:
            a = queue.popleft()
            for b in sorted(succ[a]):
                if b not in ell:
                    ell[b] = ell[a] + sys.phi[(a, b)]
                    queue.append(b)
        for a, b in comp.arrows:
            if ell[b] != ell[a] + sys.phi[(a, b)]:
                raise InconsistentHeavyComponent(
                    f"circuit through arrow {(a, b)} of heavy component {comp.vertices} has nonzero phi-sum")
    return CentralTerms(tuple(centers), ell)


@dataclass(frozen=True)
class TransitionData:
    """Optimal excursions between heavy vertices.

    ``phi_r[(a, c)]`` is the maximal phi-sum over elementary paths ``a -> c``
    whose interior avoids heavy vertices and whose arrows avoid the heavy arrow
    set; ``paths[(a, c)]`` lists the maximizing ones. Pairs without any such
    path are absent (value minus infinity).
    """

    phi_r: Mapping[tuple[int, int], Fraction]
    paths: Mapping[tuple[int, int], tuple[PathRec, ...]]
    walk_weight: Mapping[tuple[int, int], float]


def _excursion_graph(sys: NormalizedSystem, heavy: HeavyDecomposition):
    H = heavy.heavy_vertices
    allowed = [e for e in sys.graph.sorted_arrows if e not in heavy.heavy_arrow_union]
    return H, allowed


def _longest_from(source: int, allowed: Sequence[Arrow], inner: frozenset[int], phi, forward: bool):
    """Longest walk values from ``source`` (forward) or to ``source`` (backward) through ``inner``."""
    d: dict[int, Fraction] = {}
    if forward:
        for a, b in allowed:
            if a == source and b in inner:
                w = phi[(a, b)]
                if b not in d or w > d[b]:
                    d[b] = w
    else:
        for a, b in allowed:
            if b == source and a in inner:
                w = phi[(a, b)]
                if a not in d or w > d[a]:
                    d[a] = w
    inner_arrows = [(a, b) for a, b in allowed if a in inner and b in inner]
    for _ in range(len(inner) + 1):
        changed = False
        for a, b in inner_arrows:
            x, y = (a, b) if forward else (b, a)
            if x in d:
                cand = d[x] + phi[(a, b)]
                if y not in d or cand > d[y]:
                    d[y] = cand
                    changed = True
        if not changed:
            break
    else:
        raise RenormError("positive cycle among non-heavy vertices; phi is not normalized")
    return d


def transition_data(sys: NormalizedSystem, heavy: HeavyDecomposition) -> TransitionData:
    H, allowed = _excursion_graph(sys, heavy)
    inner = frozenset(range(sys.graph.n)) - H
    phi = sys.phi
    out_arrows: dict[int, list[int]] = {}
    for a, b in allowed:
        out_arrows.setdefault(a, []).append(b)
    heavy_list = sorted(H)
    fwd = {a: _longest_from(a, allowed, inner, phi, True) for a in heavy_list}
    bwd = {c: _longest_from(c, allowed, inner, phi, False) for c in heavy_list}
    allowed_set = set(allowed)
    phi_r: dict[tuple[int, int], Fraction] = {}
    paths: dict[tuple[int, int], tuple[PathRec, ...]] = {}
    weights: dict[tuple[int, int], float] = {}
    for a in heavy_list:
        for c in heavy_list:
            best = phi[(a, c)] if (a, c) in allowed_set else None
            for x, dx in fwd[a].items():
                if (x, c) in allowed_set:
                    cand = dx + phi[(x, c)]
                    if best is None or cand > best:
                        best = cand
            if best is None:
                continue
            phi_r[(a, c)] = best
            paths[(a, c)] = tuple(_maximizing_paths(a, c, best, out_arrows, inner, phi, bwd[c]))
            weights[(a, c)] = _walk_weight(a, c, best, allowed, inner, sys, fwd[a], bwd[c])
    return TransitionData(phi_r, paths, weights)


def _maximizing_paths(a, c, target, out_arrows, inner, phi, to_c) -> list[PathRec]:
    found = []
    stack = [a]
    on_path = {a}

    def dfs(x: int, s: Fraction) -> None:
        for y in out_arrows.get(x, ()):
            t = s + phi[(x, y)]
            if y == c:
                if t == target:
                    found.append(PathRec(tuple(stack) + (c,), True))
                continue
            if y not in inner or y in on_path:
                continue
            if y not in to_c or t + to_c[y] < target:
                continue
            stack.append(y)
            on_path.add(y)
            dfs(y, t)
            stack.pop()
            on_path.discard(y)

    dfs(a, Fraction(0))
    found.sort(key=lambda p: p.vertices)
    return found


def _walk_weight(a, c, target, allowed, inner, sys, from_a, to_c) -> float:
    """Total ``exp(psi)`` over all phi-maximizing walks ``a ~> c`` with non-heavy interior."""
    phi, psi = sys.phi, sys.psi
    da = dict(from_a)
    ec = dict(to_c)

    def tight(x, y):
        dx = Fraction(0) if x == a else da.get(x)
        ey = Fraction(0) if y == c else ec.get(y)
        return dx is not None and ey is not None and dx + phi[(x, y)] + ey == target

    mids = sorted(v for v in inner if v in da and v in ec)
    pos = {v: i for i, v in enumerate(mids)}
    k = len(mids)
    Q = np.zeros((k, k))
    head = np.zeros(k)
    tail = np.zeros(k)
    direct = 0.0
    for x, y in allowed:
        if x == a and y == c and tight(x, y):
            direct += math.exp(psi[(x, y)])
        elif x == a and y in pos and tight(x, y):
            head[pos[y]] += math.exp(psi[(x, y)])
        elif y == c and x in pos and tight(x, y):
            tail[pos[x]] += math.exp(psi[(x, y)])
        elif x in pos and y in pos and tight(x, y):
            Q[pos[x], pos[y]] += math.exp(psi[(x, y)])
    if k == 0:
        return direct
    if spectral_radius(Q) >= 1 - sys.eps_rho:
        raise DivergentSeries("zero-cost loops among non-heavy vertices do not have subcritical pressure")
    return direct + float(head @ np.linalg.solve(np.eye(k) - Q, tail))


def _xbar_matrix(sys: NormalizedSystem, heavy: HeavyDecomposition) -> TransferMatrix:
    """The psi-transfer matrix restricted to all transitive components of the maximizing subshift."""
    arrows = sys.report.maximizing_arrows
    g = Digraph(sys.graph.names, frozenset(arrows))
    return transfer_matrix(g, None, {e: sys.psi[e] for e in arrows})


def transition_pressure(sys: NormalizedSystem, heavy: HeavyDecomposition, path: PathRec,
                        Mbar: TransferMatrix | None = None) -> float:
    """``log sum_i sum_k Mbar^k(b_i, b_i)`` over the interior vertices of an excursion (0 when empty)."""
    interior = path.interior
    if not interior:
        return 0.0
    H = heavy.heavy_vertices
    if any(b in H for b in interior):
        raise ValueError("excursion interior meets a heavy component")
    if Mbar is None:
        Mbar = _xbar_matrix(sys, heavy)
    return math.log(sum(return_series(Mbar, b, sys.eps_rho) for b in interior))


def renormalized_sft(sys: NormalizedSystem, heavy: HeavyDecomposition) -> Digraph:
    """Arrow ``J -> K`` iff an excursion leaves heavy component J and first re-enters at K."""
    H, allowed = _excursion_graph(sys, heavy)
    succ: dict[int, list[int]] = {}
    for a, b in allowed:
        succ.setdefault(a, []).append(b)
    arrows = set()
    for J, comp in enumerate(heavy.heavy):
        seen = set()
        queue = deque(comp.vertices)
        while queue:
            x = queue.popleft()
            for y in succ.get(x, ()):
                if y in H:
                    arrows.add((J, heavy.owner(y)))
                elif y not in seen:
                    seen.add(y)
                    queue.append(y)
    names = tuple(str(J + 1) for J in range(heavy.n_heavy))
    return Digraph(names, frozenset(arrows))


@dataclass(frozen=True)
class RenormalizedSystem:
    graph: Digraph
    phi: Potential
    psi: Potential
    argmax_pairs: Mapping[Arrow, tuple[tuple[int, int], ...]]
    central: CentralTerms
    transitions: TransitionData


def renormalized_potentials(sys: NormalizedSystem, heavy: HeavyDecomposition, g_prime: Digraph,
                            central: CentralTerms, trans: TransitionData) -> RenormalizedSystem:
    """Potentials of the renormalized system.

    ``phi'(J,K)`` is the best excursion value corrected by the central terms.
    ``psi'(J,K)`` aggregates, over the optimal endpoint pairs ``(a, c)``, the
    left eigenvector of J at ``a``, the right eigenvector of K at ``c`` and the
    total ``exp(psi)`` weight of all phi-optimal walks from ``a`` to ``c``.
    """
    ell = central.phi_ell
    phi_p: dict[Arrow, Fraction] = {}
    psi_p: dict[Arrow, float] = {}
    argmax: dict[Arrow, tuple[tuple[int, int], ...]] = {}
    for J, K in g_prime.sorted_arrows:
        CJ, CK = heavy.heavy[J], heavy.heavy[K]
        best = None
        pairs: list[tuple[int, int]] = []
        for a in CJ.vertices:
            for c in CK.vertices:
                r = trans.phi_r.get((a, c))
                if r is None:
                    continue
                val = ell[a] + r - ell[c]
                if best is None or val > best:
                    best, pairs = val, [(a, c)]
                elif val == best:
                    pairs.append((a, c))
        if best is None:
            raise RenormError(f"arrow {(J, K)} of the renormalized graph has no excursion")
        terms = []
        for a, c in pairs:
            terms.append(CJ.log_w(a) + CK.log_v(c) + math.log(trans.walk_weight[(a, c)]))
        phi_p[(J, K)] = best
        psi_p[(J, K)] = float(logsumexp(terms))
        argmax[(J, K)] = tuple(pairs)
    return RenormalizedSystem(g_prime, Potential(g_prime, phi_p), Potential(g_prime, psi_p), argmax, central, trans)


def renormalize_step(sys: NormalizedSystem, heavy: HeavyDecomposition,
                     central_rule: str = "smallest") -> RenormalizedSystem:
    g_prime = renormalized_sft(sys, heavy)
    central = central_terms(sys, heavy, central_rule)
    trans = transition_data(sys, heavy)
    rs = renormalized_potentials(sys, heavy, g_prime, central, trans)
    for (a, c) in trans.phi_r:
        J, K = heavy.owner(a), heavy.owner(c)
        if (J, K) not in g_prime.arrows:
            raise RenormError(f"excursion {(a, c)} missing from the renormalized graph")
    return rs


def renormalize(sys: NormalizedSystem, central_rule: str = "smallest", tol: float = DEFAULT_TOL) -> NormalizedSystem:
    """One renormalization: build the coarse system and normalize it."""
    if not is_irreducible(sys.graph):
        raise RenormError("renormalization needs an irreducible system")
    heavy = heavy_components(sys, tol)
    rs = renormalize_step(sys, heavy, central_rule)
    if not is_irreducible(rs.graph):
        raise RenormalizedNotIrreducible(f"renormalized graph is not irreducible: arrows {sorted(rs.graph.arrows)}")
    return normalize(rs.graph, rs.phi, rs.psi, sys.eps_rho, tol)


@dataclass(frozen=True)
class Level:
    system: NormalizedSystem
    heavy: HeavyDecomposition
    renormalized: RenormalizedSystem | None  # None at the top of the ladder


@dataclass(frozen=True)
class ZeroTemperatureLimit:
    levels: tuple[Level, ...]
    alpha: tuple[float, ...]  # per heavy component of level 0
    alpha_exact: tuple[Fraction | None, ...]

    @property
    def graph(self) -> Digraph:
        return self.levels[0].system.graph

    @property
    def heavy(self) -> HeavyDecomposition:
        return self.levels[0].heavy

    @property
    def measures(self) -> tuple[MarkovGibbsMeasure, ...]:
        return tuple(c.measure for c in self.heavy.heavy)

    @property
    def eliminated(self) -> frozenset[int]:
        return frozenset(J for J, a in enumerate(self.alpha) if a == 0)

    def symbol_masses(self) -> np.ndarray:
        """Limit mass of every level-0 symbol."""
        out = np.zeros(self.graph.n)
        for J, comp in enumerate(self.heavy.heavy):
            for v in comp.vertices:
                out[v] = self.alpha[J] * comp.mass(v)
        return out

    def limit_cylinder(self, word) -> float:
        return limit_cylinder(self, word)


def _word_indices(g: Digraph, word) -> list[int]:
    if isinstance(word, str):
        word = list(word) if all(len(s) == 1 for s in g.names) else word.split()
    out = []
    for s in word:
        try:
            out.append(g.symbol(s))
        except KeyError:
            raise SymbolNotInAlphabet(f"symbol {s!r} not in alphabet") from None
    return out


def limit_cylinder(limit: ZeroTemperatureLimit, word) -> float:
    """Mass of a cylinder under ``sum_J alpha_J nu_J``."""
    idx = _word_indices(limit.graph, word)
    for J, comp in enumerate(limit.heavy.heavy):
        if not all(v in comp.vertices for v in idx):
            continue
        if not all(e in comp.arrows for e in zip(idx, idx[1:])):
            return 0.0
        local = [comp.local(v) for v in idx]
        return limit.alpha[J] * comp.measure.cylinder(local)
    return 0.0


def zero_temperature_limit(g: Digraph, phi, psi=None, eps_rho: float = EPS_RHO, tol: float = DEFAULT_TOL,
                           central_rule: str = "smallest") -> ZeroTemperatureLimit:
    """Weights and measures of ``lim mu_{beta phi + psi}`` as ``beta -> infinity``."""
    if not is_irreducible(g):
        raise NotIrreducible("the input graph is not irreducible")
    sys = normalize(g, phi, psi, eps_rho, tol)
    cap = 2 * g.n
    levels: list[Level] = []
    while True:
        heavy = heavy_components(sys, tol)
        if heavy.n_heavy == 1:
            levels.append(Level(sys, heavy, None))
            break
        rs = renormalize_step(sys, heavy, central_rule)
        levels.append(Level(sys, heavy, rs))
        if len(levels) > cap:
            raise IterationCap(f"renormalization depth exceeded {cap}")
        if not is_irreducible(rs.graph):
            raise RenormalizedNotIrreducible(
                f"renormalized graph at level {len(levels)} is not irreducible: arrows "
                f"{[(rs.graph.names[a], rs.graph.names[b]) for a, b in rs.graph.sorted_arrows]}",
                ladder=levels)
        sys = normalize(rs.graph, rs.phi, rs.psi, eps_rho, tol)

    alpha: list[float] = [1.0]
    exact: list[Fraction | None] = [Fraction(1)]
    for lvl in range(len(levels) - 2, -1, -1):
        nxt = levels[lvl + 1].heavy
        n_here = levels[lvl].heavy.n_heavy
        a_new: list[float] = [0.0] * n_here
        e_new: list[Fraction | None] = [Fraction(0)] * n_here
        for K, comp in enumerate(nxt.heavy):
            for J in comp.vertices:
                a_new[J] = comp.mass(J) * alpha[K]
                em = comp.exact_mass(J)
                e_new[J] = None if em is None or exact[K] is None else em * exact[K]
        alpha, exact = a_new, e_new
    return ZeroTemperatureLimit(tuple(levels), tuple(alpha), tuple(exact))
