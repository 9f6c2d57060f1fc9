"""Directed graphs presenting topological Markov chains.

Vertices are integer indices ``0..n-1`` with display names; arrows are
``(source, target)`` index pairs. Everything here is immutable and pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import gcd
from typing import Iterable, Iterator, Sequence

import networkx as nx

Arrow = tuple[int, int]


class SFTError(ValueError):
    """Base class for malformed graph input."""


class EmptyAlphabet(SFTError):
    pass


class DuplicateSymbol(SFTError):
    pass


class DanglingArrowEndpoint(SFTError):
    pass


@dataclass(frozen=True)
class Digraph:
    """Finite digraph ``(A, E)`` without parallel arrows."""

    names: tuple[str, ...]
    arrows: frozenset[Arrow]

    def __post_init__(self):
        n = len(self.names)
        for a, b in self.arrows:
            if not (0 <= a < n and 0 <= b < n):
                raise DanglingArrowEndpoint(f"arrow {(a, b)} outside alphabet of size {n}")

    @classmethod
    def from_names(cls, alphabet: Sequence[str], arrows: Iterable[tuple[str, str]]) -> "Digraph":
        return validate(alphabet, arrows)

    def __len__(self) -> int:
        return len(self.names)

    @property
    def n(self) -> int:
        return len(self.names)

    @cached_property
    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.names]
        for a, b in self.arrows:
            out[a].append(b)
        return tuple(tuple(sorted(s)) for s in out)

    @cached_property
    def predecessors(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in self.names]
        for a, b in self.arrows:
            inc[b].append(a)
        return tuple(tuple(sorted(s)) for s in inc)

    @cached_property
    def sorted_arrows(self) -> tuple[Arrow, ...]:
        return tuple(sorted(self.arrows))

    def has_arrow(self, a: int, b: int) -> bool:
        return (a, b) in self.arrows

    def symbol(self, name_or_index) -> int:
        if isinstance(name_or_index, str):
            try:
                return self.index[name_or_index]
            except KeyError:
                raise KeyError(f"unknown symbol {name_or_index!r}") from None
        i = int(name_or_index)
        if not 0 <= i < self.n:
            raise KeyError(f"symbol index {i} out of range")
        return i

    def subgraph(self, vertices: Iterable[int], arrows: Iterable[Arrow] | None = None) -> tuple["Digraph", list[int]]:
        """Induced (or arrow-restricted) subgraph, plus the map new index -> old index."""
        keep = sorted(set(vertices))
        pos = {v: i for i, v in enumerate(keep)}
        src = self.arrows if arrows is None else arrows
        sub = frozenset((pos[a], pos[b]) for a, b in src if a in pos and b in pos)
        return Digraph(tuple(self.names[v] for v in keep), sub), keep

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.arrows)
        return g

    def word_names(self, word: Sequence[int]) -> str:
        sep = "" if all(len(s) == 1 for s in self.names) else " "
        return sep.join(self.names[i] for i in word)


def validate(alphabet: Sequence[str], arrows: Iterable[tuple[str, str]]) -> Digraph:
    names = tuple(str(s) for s in alphabet)
    if not names:
        raise EmptyAlphabet("alphabet is empty")
    seen: set[str] = set()
    for s in names:
        if s in seen:
            raise DuplicateSymbol(f"symbol {s!r} declared twice")
        seen.add(s)
    index = {s: i for i, s in enumerate(names)}
    out = set()
    for a, b in arrows:
        for end in (a, b):
            if end not in index:
                raise DanglingArrowEndpoint(f"arrow {(a, b)} uses undeclared symbol {end!r}")
        out.add((index[a], index[b]))
    return Digraph(names, frozenset(out))


@dataclass(frozen=True)
class PathRec:
    """A path ``b_0 ... b_m`` in a host graph; ``length`` counts arrows."""

    vertices: tuple[int, ...]
    elementary: bool = True

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    @property
    def is_circuit(self) -> bool:
        return self.length >= 1 and self.vertices[0] == self.vertices[-1]

    @property
    def interior(self) -> tuple[int, ...]:
        return self.vertices[1:-1]

    def arrows(self) -> list[Arrow]:
        v = self.vertices
        return [(v[i], v[i + 1]) for i in range(len(v) - 1)]


@dataclass(frozen=True)
class Component:
    vertices: tuple[int, ...]
    arrows: frozenset[Arrow]
    kind: str  # "transitive" or "trivial"
    period: int | None = None
    cyclic_classes: tuple[tuple[int, ...], ...] = ()

    @property
    def transitive(self) -> bool:
        return self.kind == "transitive"


@dataclass(frozen=True)
class ComponentDecomposition:
    components: tuple[Component, ...]
    owner: dict[int, int] = field(default_factory=dict)  # vertex -> component position

    @property
    def transitive(self) -> list[Component]:
        return [c for c in self.components if c.transitive]


def _period_and_classes(vertices: Sequence[int], arrows: Iterable[Arrow]) -> tuple[int, tuple[tuple[int, ...], ...]]:
    succ: dict[int, list[int]] = {v: [] for v in vertices}
    arrows = list(arrows)
    for a, b in arrows:
        succ[a].append(b)
    root = min(vertices)
    level = {root: 0}
    frontier = [root]
    while frontier:
        nxt = []
        for a in frontier:
            for b in sorted(succ[a]):
                if b not in level:
                    level[b] = level[a] + 1
                    nxt.append(b)
        frontier = nxt
    p = 0
    for a, b in arrows:
        p = gcd(p, abs(level[a] + 1 - level[b]))
    p = p or 1
    classes = tuple(tuple(sorted(v for v in vertices if level[v] % p == i)) for i in range(p))
    return p, classes


def decompose(g: Digraph) -> ComponentDecomposition:
    """Strongly connected components with periods and cyclic partitions.

    Components are ordered by their smallest vertex index.
    """
    sccs = sorted((tuple(sorted(c)) for c in nx.strongly_connected_components(g.to_networkx())), key=lambda c: c[0])
    comps = []
    owner = {}
    for pos, verts in enumerate(sccs):
        vs = set(verts)
        arr = frozenset((a, b) for a, b in g.arrows if a in vs and b in vs)
        for v in verts:
            owner[v] = pos
        if not arr:
            comps.append(Component(verts, arr, "trivial"))
            continue
        p, classes = _period_and_classes(verts, arr)
        comps.append(Component(verts, arr, "transitive", p, classes))
    return ComponentDecomposition(tuple(comps), owner)


def is_irreducible(g: Digraph) -> bool:
    """True iff ``g`` is strongly connected and carries at least one arrow."""
    if not g.arrows:
        return False
    return nx.is_strongly_connected(g.to_networkx())


def _canonical_rotation(cycle: Sequence[int]) -> tuple[int, ...]:
    k = cycle.index(min(cycle))
    rot = tuple(cycle[k:]) + tuple(cycle[:k])
    return rot + (rot[0],)


def elementary_circuits(g: Digraph) -> Iterator[PathRec]:
    """Every elementary circuit once, rotated to start at its smallest vertex.

    Circuits are emitted in lexicographic order of their vertex tuples.
    """
    found = sorted(_canonical_rotation(c) for c in nx.simple_cycles(g.to_networkx()))
    for c in found:
        yield PathRec(c, True)


def elementary_paths(
    g: Digraph,
    a: int,
    c: int,
    forbidden_arrows: Iterable[Arrow] = (),
    forbidden_interior: Iterable[int] = (),
) -> list[PathRec]:
    """All elementary paths ``a -> c`` avoiding the given arrows and interior vertices.

    Returns ``[]`` when ``a == c``; circuits come from :func:`elementary_circuits`.
    """
    if a == c:
        return []
    bad_arrows = set(forbidden_arrows)
    bad_inner = set(forbidden_interior)
    out: list[PathRec] = []
    stack = [a]
    on_path = {a}

    def dfs(x: int) -> None:
        for y in g.successors[x]:
            if (x, y) in bad_arrows:
                continue
            if y == c:
                out.append(PathRec(tuple(stack) + (c,), True))
                continue
            if y in on_path or y in bad_inner or y == a:
                continue
            stack.append(y)
            on_path.add(y)
            dfs(y)
            stack.pop()
            on_path.discard(y)

    dfs(a)
    out.sort(key=lambda p: p.vertices)
    return out
