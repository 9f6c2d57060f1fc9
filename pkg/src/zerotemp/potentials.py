"""Locally constant potentials: recoding, exact maximization and normalization."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .perron import DEFAULT_TOL, eigensystem, transfer_matrix
from .sft import Arrow, Component, Digraph, PathRec, decompose, elementary_circuits

log = logging.getLogger(__name__)

EPS_RHO = 1e-9
NEG_INF = None  # marker for "no arrow" in rational tables


class PotentialError(ValueError):
    pass


class InconsistentWordSet(PotentialError):
    pass


class EmptyLanguage(PotentialError):
    pass


class NoCircuit(PotentialError):
    pass


class ArrowNotInGraph(KeyError):
    pass


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


@dataclass(frozen=True)
class Potential:
    """Arrow function on a digraph. ``phi`` carries Fractions, ``psi`` floats."""

    graph: Digraph
    values: Mapping[Arrow, object]

    def __post_init__(self):
        if set(self.values) != set(self.graph.arrows):
            missing = set(self.graph.arrows) - set(self.values)
            extra = set(self.values) - set(self.graph.arrows)
            raise ArrowNotInGraph(f"potential domain mismatch: missing={sorted(missing)} extra={sorted(extra)}")

    def __getitem__(self, arrow: Arrow):
        try:
            return self.values[arrow]
        except KeyError:
            raise ArrowNotInGraph(arrow) from None

    def __iter__(self):
        return iter(self.values)

    def items(self):
        return self.values.items()

    def shifted(self, c) -> "Potential":
        return Potential(self.graph, {e: x + c for e, x in self.values.items()})

    def map(self, f) -> "Potential":
        return Potential(self.graph, {e: f(x) for e, x in self.values.items()})

    @classmethod
    def rational(cls, graph: Digraph, values: Mapping[Arrow, object]) -> "Potential":
        return cls(graph, {e: as_fraction(x) for e, x in values.items()})

    @classmethod
    def real(cls, graph: Digraph, values: Mapping[Arrow, object] | None = None) -> "Potential":
        if values is None:
            values = {e: 0.0 for e in graph.arrows}
        return cls(graph, {e: float(x) for e, x in values.items()})


def path_sum(f: Potential | Mapping[Arrow, object], path: PathRec | Sequence[int]):
    """Sum of arrow values along a path; exact for Fraction-valued potentials."""
    verts = path.vertices if isinstance(path, PathRec) else tuple(path)
    total = 0
    for a, b in zip(verts, verts[1:]):
        try:
            total = total + f[(a, b)]
        except KeyError:
            raise ArrowNotInGraph((a, b)) from None
    return total


def _word_key(word: Sequence[str]) -> tuple[str, ...]:
    return tuple(word)


def recode(alphabet: Sequence[str], r: int, Phi: Mapping[Sequence[str], object],
           Psi: Mapping[Sequence[str], object] | None = None) -> tuple[Digraph, Potential, Potential]:
    """Higher-block presentation of an ``(r+1)``-symbol potential.

    Vertices are the ``r``-words occurring as prefix or suffix of an admissible
    word; each admissible ``(r+1)``-word becomes the arrow from its prefix to its
    suffix. ``r = 0`` is presented on the full pair graph with the potential
    read off the first symbol.
    """
    alphabet = [str(s) for s in alphabet]
    words = {_word_key(w): v for w, v in Phi.items()}
    psi_words = {_word_key(w): v for w, v in (Psi or {}).items()}
    if not words:
        raise EmptyLanguage("no admissible words")
    if r < 0:
        raise InconsistentWordSet("r must be nonnegative")
    letters = set(alphabet)
    for w in itertools.chain(words, psi_words):
        if len(w) != r + 1:
            raise InconsistentWordSet(f"word {''.join(w)!r} has length {len(w)}, expected {r + 1}")
        bad = [s for s in w if s not in letters]
        if bad:
            raise InconsistentWordSet(f"word {w!r} uses undeclared symbols {bad}")
    extra = set(psi_words) - set(words)
    if extra:
        raise InconsistentWordSet(f"psi given on words without phi: {sorted(extra)}")

    if r == 0:
        names = tuple(s for s in alphabet if (s,) in words)
        arrows = frozenset((i, j) for i in range(len(names)) for j in range(len(names)))
        g = Digraph(names, arrows)
        phi = {(i, j): as_fraction(words[(g.names[i],)]) for i, j in arrows}
        psi = {(i, j): float(psi_words.get((g.names[i],), 0.0)) for i, j in arrows}
        return g, Potential(g, phi), Potential(g, psi)

    sep = "" if all(len(s) == 1 for s in alphabet) else "."
    verts = sorted({w[:-1] for w in words} | {w[1:] for w in words},
                   key=lambda u: [alphabet.index(s) for s in u])
    pos = {u: i for i, u in enumerate(verts)}
    names = tuple(sep.join(u) for u in verts)
    phi, psi = {}, {}
    for w, val in words.items():
        e = (pos[w[:-1]], pos[w[1:]])
        phi[e] = as_fraction(val)
        psi[e] = float(psi_words.get(w, 0.0))
    g = Digraph(names, frozenset(phi))
    return g, Potential(g, phi), Potential(g, psi)


@dataclass(frozen=True)
class MaximizationReport:
    phi_bar: Fraction
    E_phi: tuple[Fraction, ...] | None  # sorted decreasing; None when not enumerated
    phi_g: Fraction | None
    maximizing_arrows: frozenset[Arrow]
    maximizing_subgraph: Digraph  # on the full vertex set, restricted arrows
    maximizing_vertices: tuple[int, ...]
    witnesses: tuple[PathRec, ...]


def _karp_max_mean(n: int, verts: Sequence[int], arrows: Sequence[tuple[int, int, Fraction]]) -> Fraction | None:
    """Maximum cycle mean of a strongly connected subgraph (Karp), exact."""
    k = len(verts)
    pos = {v: i for i, v in enumerate(verts)}
    D: list[list[Fraction | None]] = [[None] * k for _ in range(k + 1)]
    D[0][0] = Fraction(0)
    for step in range(1, k + 1):
        row, prev = D[step], D[step - 1]
        for a, b, w in arrows:
            pa = prev[pos[a]]
            if pa is None:
                continue
            cand = pa + w
            j = pos[b]
            if row[j] is None or cand > row[j]:
                row[j] = cand
    best = None
    for j in range(k):
        if D[k][j] is None:
            continue
        worst = None
        for step in range(k):
            if D[step][j] is None:
                continue
            val = (D[k][j] - D[step][j]) / (k - step)
            if worst is None or val < worst:
                worst = val
        if worst is not None and (best is None or worst > best):
            best = worst
    return best


def max_plus_closure(n: int, weights: Mapping[Arrow, Fraction]) -> list[list[Fraction | None]]:
    """Longest walk values ``D[a][b]`` (length >= 1) for weights without positive cycles."""
    D: list[list[Fraction | None]] = [[None] * n for _ in range(n)]
    for (a, b), w in weights.items():
        if D[a][b] is None or w > D[a][b]:
            D[a][b] = w
    for k in range(n):
        Dk = D[k]
        for i in range(n):
            dik = D[i][k]
            if dik is None:
                continue
            Di = D[i]
            for j in range(n):
                dkj = Dk[j]
                if dkj is None:
                    continue
                cand = dik + dkj
                if Di[j] is None or cand > Di[j]:
                    Di[j] = cand
    return D


def maximize(g: Digraph, phi: Potential | Mapping[Arrow, object], enumerate_circuits: bool = True) -> MaximizationReport:
    """Maximal circuit mean, the maximizing arrow set and (optionally) all circuit means."""
    vals = {e: as_fraction(phi[e]) for e in g.arrows}
    dec = decompose(g)
    best = None
    for comp in dec.transitive:
        arr = [(a, b, vals[(a, b)]) for a, b in comp.arrows]
        lam = _karp_max_mean(g.n, comp.vertices, arr)
        if lam is not None and (best is None or lam > best):
            best = lam
    if best is None:
        raise NoCircuit("graph has no circuit: no invariant measure exists")
    phi_bar = best
    norm = {e: x - phi_bar for e, x in vals.items()}
    D = max_plus_closure(g.n, norm)
    tight = set()
    for (a, b), w in norm.items():
        back = Fraction(0) if a == b else D[b][a]
        if back is not None and w + back == 0:
            tight.add((a, b))
    verts = tuple(sorted({v for e in tight for v in e}))
    xbar = Digraph(g.names, frozenset(tight))

    E_phi = phi_g = None
    if enumerate_circuits:
        means = {path_sum(vals, c) / c.length for c in elementary_circuits(g)}
        E_phi = tuple(sorted(means, reverse=True))
        phi_g = E_phi[1] if len(E_phi) > 1 else None

    witnesses = []
    for comp in decompose(xbar).transitive:
        witnesses.append(_some_circuit(xbar, comp))
    return MaximizationReport(phi_bar, E_phi, phi_g, frozenset(tight), xbar, verts, tuple(witnesses))


def _some_circuit(g: Digraph, comp: Component) -> PathRec:
    start = comp.vertices[0]
    inside = set(comp.vertices)
    parent = {start: None}
    frontier = [start]
    while frontier:
        nxt = []
        for a in frontier:
            for b in g.successors[a]:
                if b not in inside:
                    continue
                if b == start:
                    path = [a]
                    while parent[path[-1]] is not None:
                        path.append(parent[path[-1]])
                    path.reverse()
                    return PathRec(tuple(path) + (start,), True)
                if b not in parent:
                    parent[b] = a
                    nxt.append(b)
        frontier = nxt
    raise AssertionError("transitive component without circuit")


@dataclass(frozen=True)
class XbarComponent:
    """Transitive component of the maximizing subshift with its psi-pressure data."""

    vertices: tuple[int, ...]
    arrows: frozenset[Arrow]
    period: int
    pressure: float  # log rho of psi restricted, before normalization of psi


@dataclass(frozen=True)
class NormalizedSystem:
    graph: Digraph
    phi: Potential
    psi: Potential
    report: MaximizationReport
    psi_pressure_on_xbar: float
    components: tuple[XbarComponent, ...]
    eps_rho: float = EPS_RHO
    warnings: tuple[str, ...] = field(default=())

    def component_pressures(self) -> list[float]:
        """Normalized pressures ``log rho_{psi,J}`` (max is 0)."""
        return [c.pressure - self.psi_pressure_on_xbar for c in self.components]


def xbar_components(g: Digraph, psi: Mapping[Arrow, float], report: MaximizationReport,
                    tol: float = DEFAULT_TOL) -> list[XbarComponent]:
    out = []
    for comp in decompose(report.maximizing_subgraph).transitive:
        sub, keep = g.subgraph(comp.vertices, comp.arrows)
        sub_psi = {(a, b): float(psi[(keep[a], keep[b])]) for a, b in sub.arrows}
        P = eigensystem(transfer_matrix(sub, None, sub_psi), tol).log_rho
        out.append(XbarComponent(comp.vertices, comp.arrows, comp.period, P))
    return out


def normalize(g: Digraph, phi: Potential | Mapping[Arrow, object], psi: Potential | Mapping[Arrow, float] | None = None,
              eps_rho: float = EPS_RHO, tol: float = DEFAULT_TOL, enumerate_circuits: bool = True) -> NormalizedSystem:
    """Shift ``phi`` by its maximal mean and ``psi`` by its pressure on the maximizing subshift."""
    if not isinstance(phi, Potential):
        phi = Potential.rational(g, phi)
    if psi is None:
        psi = Potential.real(g)
    elif not isinstance(psi, Potential):
        psi = Potential.real(g, psi)
    report = maximize(g, phi, enumerate_circuits)
    comps = xbar_components(g, psi, report, tol)
    P = max(c.pressure for c in comps)
    warnings = []
    for i, j in itertools.combinations(range(len(comps)), 2):
        gap = abs(comps[i].pressure - comps[j].pressure)
        if eps_rho < gap <= 10 * eps_rho:
            msg = (f"pressures of components {comps[i].vertices} and {comps[j].vertices} "
                   f"differ by {gap:.3g}, close to the heavy tolerance {eps_rho:g}")
            log.warning(msg)
            warnings.append(msg)
    phi_n = Potential(g, {e: as_fraction(x) - report.phi_bar for e, x in phi.items()})
    psi_n = Potential(g, {e: float(x) - P for e, x in psi.items()})
    report_n = MaximizationReport(
        Fraction(0),
        None if report.E_phi is None else tuple(m - report.phi_bar for m in report.E_phi),
        None if report.phi_g is None else report.phi_g - report.phi_bar,
        report.maximizing_arrows,
        report.maximizing_subgraph,
        report.maximizing_vertices,
        report.witnesses,
    )
    return NormalizedSystem(g, phi_n, psi_n, report_n, P, tuple(comps), eps_rho, tuple(warnings))
