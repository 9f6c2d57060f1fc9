"""Transfer matrices, Perron-Frobenius eigensystems and Markov (Gibbs) measures.

Matrices are stored as log-weights (``-inf`` off the arrow set). The Perron
pair of each primitive cyclic block is obtained by repeated squaring in the
log domain, which keeps every entry representable at large ``beta``.
Squaring stops once the Hilbert projective diameter of the columns (resp.
rows) of the iterate drops below the requested tolerance; that diameter bounds
the projective distance of any iterate ``B^m x`` from the Perron vector, which
is the error control of the Birkhoff contraction theorem.

Rounding in the ``k``-th square acts like a perturbation amplified by about
``2^k``, so when many squarings are needed (a spectral gap far below machine
precision, typical of nearly periodic or nearly decoupled matrices at large
``beta``) the squaring is redone in multiprecision with about ``k log10 2``
extra digits.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import mpmath
import numpy as np
from scipy.special import logsumexp

from .sft import Arrow, Digraph, decompose, is_irreducible

DEFAULT_TOL = 1e-12


class NotIrreducible(ValueError):
    pass


class DivergentSeries(ArithmeticError):
    pass


class SymbolNotInAlphabet(KeyError):
    pass


@dataclass(frozen=True)
class TransferMatrix:
    graph: Digraph
    log_entries: np.ndarray

    @classmethod
    def from_log_weights(cls, graph: Digraph, weights: Mapping[Arrow, float]) -> "TransferMatrix":
        L = np.full((graph.n, graph.n), -np.inf)
        for (a, b) in graph.arrows:
            L[a, b] = float(weights[(a, b)])
        L.setflags(write=False)
        return cls(graph, L)

    @property
    def entries(self) -> np.ndarray:
        return np.exp(self.log_entries)

    def restrict(self, vertices: Sequence[int], arrows=None) -> tuple["TransferMatrix", list[int]]:
        sub, keep = self.graph.subgraph(vertices, arrows)
        L = np.full((sub.n, sub.n), -np.inf)
        for a, b in sub.arrows:
            L[a, b] = self.log_entries[keep[a], keep[b]]
        L.setflags(write=False)
        return TransferMatrix(sub, L), keep


def transfer_matrix(graph: Digraph, phi: Mapping[Arrow, object] | None, psi: Mapping[Arrow, float] | None,
                    beta: float = 0.0) -> TransferMatrix:
    """``M(a, a') = exp(beta * phi(a, a') + psi(a, a'))`` on arrows, kept as logs."""
    weights = {}
    for e in graph.arrows:
        x = 0.0
        if phi is not None and beta != 0:
            f = phi[e]
            # one rounding from the exact product keeps exact ties tied
            x += float(Fraction(beta) * f) if isinstance(f, Fraction) else beta * float(f)
        if psi is not None:
            x += float(psi[e])
        weights[e] = x
    return TransferMatrix.from_log_weights(graph, weights)


def log_matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        out = logsumexp(A[:, :, None] + B[None, :, :], axis=1)
    return np.where(np.isnan(out), -np.inf, out)


def log_matvec(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    return logsumexp(A + x[None, :], axis=1)


def log_matpow(A: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    """``A^k`` as ``(scaled log matrix, log scale)`` via binary exponentiation."""
    n = A.shape[0]
    result = np.full((n, n), -np.inf)
    np.fill_diagonal(result, 0.0)
    scale = 0.0
    base, base_scale = A.copy(), 0.0
    while k:
        if k & 1:
            result = log_matmul(result, base)
            s = result.max()
            result -= s
            scale += s + base_scale
        k >>= 1
        if k:
            base = log_matmul(base, base)
            s = base.max()
            base -= s
            base_scale = 2 * base_scale + s
    return result, scale


def hilbert_distance(log_x: np.ndarray, log_y: np.ndarray) -> float:
    """Projective (Hilbert) distance between two positive vectors given by logs."""
    d = np.asarray(log_x) - np.asarray(log_y)
    return float(d.max() - d.min())


def _column_diameter(P: np.ndarray) -> float:
    # max over column pairs of the Hilbert distance; equals max over row pairs of (row spread)
    if not np.isfinite(P).all():
        return math.inf
    spread = P - P[:, :1]
    return float((spread.max(axis=0) - spread.min(axis=0)).max())


def primitivity_index(pattern: np.ndarray) -> int | None:
    """Smallest ``l`` with ``pattern**l > 0`` (None if not primitive within Wielandt's bound)."""
    n = pattern.shape[0]
    P = pattern.astype(bool)
    cur = P.copy()
    for ell in range(1, (n - 1) ** 2 + 2):
        if cur.all():
            return ell
        cur = (cur.astype(np.int64) @ P.astype(np.int64)) > 0
    return None


def birkhoff_tau(log_B: np.ndarray) -> float:
    """Birkhoff contraction coefficient ``(1 - Gamma) / (1 + Gamma)`` of a positive matrix."""
    if not np.isfinite(log_B).all():
        return 1.0
    n = log_B.shape[0]
    # log of min over (a,b,c,d) of B(a,b)B(c,d) / (B(a,d)B(c,b))
    best = math.inf
    for a in range(n):
        for c in range(n):
            r = log_B[a] - log_B[c]  # r[b] = log B(a,b) - log B(c,b)
            best = min(best, float(r.min() - r.max()))
    gamma = math.exp(best / 2)
    return (1 - gamma) / (1 + gamma)


def birkhoff_bound(tau: float, ell: int, m: int, d0: float) -> float:
    """A-priori projective error ``tau^floor(m/l) * l * d0 / (1 - tau)`` after ``m`` steps."""
    if tau >= 1:
        return math.inf
    return tau ** (m // ell) * ell * d0 / (1 - tau)


@dataclass(frozen=True)
class Eigensystem:
    log_rho: float
    log_v: np.ndarray  # right eigenvector
    log_w: np.ndarray  # left eigenvector
    period: int
    cyclic_blocks: tuple[tuple[int, ...], ...]
    primitivity_index: int
    birkhoff_tau: float
    certified_error: float  # Hilbert diameter of the final iterate
    certified_residual: float
    squarings: int

    @property
    def rho(self) -> float:
        return math.exp(self.log_rho)

    @property
    def v(self) -> np.ndarray:
        return np.exp(self.log_v)

    @property
    def w(self) -> np.ndarray:
        return np.exp(self.log_w)


def _perron_block(log_B: np.ndarray, tol: float, max_squarings: int) -> tuple[np.ndarray, np.ndarray, float, int]:
    """Perron data of a primitive block: (log v, log w, log rho_block, squarings)."""
    m = log_B.shape[0]
    if m == 1:
        return np.zeros(1), np.zeros(1), float(log_B[0, 0]), 0
    P = log_B - log_B[np.isfinite(log_B)].max()
    k = 0
    # floor set by the relative accuracy of the log-entries themselves
    floor = 64 * np.finfo(float).eps * max(1.0, float(np.abs(log_B[np.isfinite(log_B)]).max()))
    # converging past the floor costs at most a squaring or two
    target = max(min(tol, floor), 1e-15)
    while True:
        diam_c = _column_diameter(P)
        diam_r = _column_diameter(P.T)
        if max(diam_c, diam_r) < target or k >= max_squarings:
            break
        P = log_matmul(P, P)
        P -= P.max()
        k += 1
    if not np.isfinite(P).all():
        raise NotIrreducible("block is not primitive")
    # the columns of B^N are all proportional to v, the rows to w
    log_v = logsumexp(P, axis=1)
    log_w = logsumexp(P, axis=0)
    # one polishing step each
    log_v = log_matvec(log_B, log_v)
    log_v -= log_v.max()
    log_w = log_matvec(log_B.T, log_w)
    log_w -= log_w.max()
    Bv = log_matvec(log_B, log_v) - log_v
    log_rho = float(np.median(Bv))
    return log_v, log_w, log_rho, k


# squarings beyond which float rounding (amplified ~2^k) may exceed the tolerance
FLOAT_SQUARINGS = 24


def _perron_block_mp(L: np.ndarray, p: int, block: list[int], tol: float,
                     k_float: int) -> tuple[np.ndarray, np.ndarray, float, int]:
    """Multiprecision Perron data of the block ``M^p`` on ``block``.

    Everything is recomputed from the log-weights of ``M`` so that exactly
    tied weights stay tied. A run is trusted only if its working precision
    exceeds the ``k log10 2`` digits its own squaring count can destroy;
    otherwise it is repeated with more digits (a low-precision run can settle
    early on a wrong vector).
    """
    k = k_float
    dps = 30 + int(math.ceil((k + 8) * math.log10(2)))
    while True:
        out = _squaring_mp(L, p, block, tol, dps, 4 * k + 200)
        k = out[3]
        if (k + 8) * math.log10(2) + 20 <= dps:
            return out
        if dps > 20000:
            raise ArithmeticError("multiprecision Perron iteration did not settle")
        dps = 30 + int(math.ceil(2 * (k + 8) * math.log10(2)))


def _squaring_mp(L: np.ndarray, p: int, block: list[int], tol: float, dps: int,
                 limit: int) -> tuple[np.ndarray, np.ndarray, float, int]:
    ctx = mpmath.mp.clone()
    ctx.dps = dps
    top = float(L[np.isfinite(L)].max())
    scale = ctx.exp(ctx.mpf(top))
    M = [[ctx.exp(ctx.mpf(float(x))) / scale if np.isfinite(x) else ctx.mpf(0) for x in row] for row in L]

    def mul(X, Y):
        r, c, q = len(X), len(Y[0]), len(Y)
        return [[ctx.fsum(X[i][l] * Y[l][j] for l in range(q)) for j in range(c)] for i in range(r)]

    Mp = M
    for _ in range(p - 1):
        Mp = mul(Mp, M)
    B = [[Mp[i][j] for j in block] for i in block]
    m = len(block)
    log_tol = ctx.mpf(min(tol, 1e-20))
    P = B
    k = 0
    while True:
        if all(P[i][j] > 0 for i in range(m) for j in range(m)):
            lg = [[ctx.log(P[i][j]) for j in range(m)] for i in range(m)]
            spread = [[lg[i][j] - lg[i][0] for j in range(m)] for i in range(m)]
            diam = max(max(spread[i][j] for i in range(m)) - min(spread[i][j] for i in range(m)) for j in range(m))
            if diam < log_tol or k >= limit:
                break
        elif k >= limit:
            raise NotIrreducible("block is not primitive")
        Q = mul(P, P)
        big = max(max(r) for r in Q)
        P = [[x / big for x in r] for r in Q]
        k += 1
    v = [ctx.fsum(P[i]) for i in range(m)]
    w = [ctx.fsum(P[i][j] for i in range(m)) for j in range(m)]
    # one polishing step each, then the Perron root from the largest component
    v = [ctx.fsum(B[i][j] * v[j] for j in range(m)) for i in range(m)]
    w = [ctx.fsum(w[i] * B[i][j] for i in range(m)) for j in range(m)]
    i0 = max(range(m), key=lambda i: v[i])
    rho = ctx.fsum(B[i0][j] * v[j] for j in range(m)) / v[i0]
    log_rho = float(ctx.log(rho)) + p * top
    vmax, wmax = max(v), max(w)
    log_v = np.array([float(ctx.log(x / vmax)) for x in v])
    log_w = np.array([float(ctx.log(x / wmax)) for x in w])
    return log_v, log_w, log_rho, k


def _assemble(L: np.ndarray, classes, c0: list[int], lv0: np.ndarray, lw0: np.ndarray,
              log_rho_p: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Spread block-0 eigenvectors over the cyclic classes and normalize ``w . v = 1``."""
    p = len(classes)
    log_rho = log_rho_p / p
    n = L.shape[0]
    log_v = np.full(n, -np.inf)
    log_w = np.full(n, -np.inf)
    log_v[c0] = lv0
    log_w[c0] = lw0
    # right vector backwards through the cycle of classes, left vector forwards
    for i in range(p - 1, 0, -1):
        src, dst = list(classes[i]), list(classes[(i + 1) % p])
        log_v[src] = log_matvec(L[np.ix_(src, dst)], log_v[dst]) - log_rho
    for i in range(1, p):
        prev, cur = list(classes[i - 1]), list(classes[i])
        log_w[cur] = log_matvec(L[np.ix_(prev, cur)].T, log_w[prev]) - log_rho
    # v with unit Euclidean norm, then w scaled so that w.v = 1
    log_v -= 0.5 * logsumexp(2 * log_v)
    log_w -= logsumexp(log_w + log_v)
    return log_v, log_w, log_rho


def eigensystem(M: TransferMatrix, tol: float = DEFAULT_TOL) -> Eigensystem:
    """Perron root and normalized eigenvectors (``w . v = 1``) of an irreducible matrix."""
    g = M.graph
    if not is_irreducible(g):
        raise NotIrreducible(f"pattern on {g.n} vertices is not irreducible")
    comp = decompose(g).components[0]
    p, classes = comp.period, comp.cyclic_classes
    L = M.log_entries
    c0 = list(classes[0])
    if p == 1:
        log_B = np.array(L)
    else:
        Lp, s = log_matpow(np.array(L), p)
        log_B = Lp[np.ix_(c0, c0)] + s
    pattern = np.isfinite(log_B)
    ell = primitivity_index(pattern) or 1
    if len(c0) > 1:
        Bl, sl = log_matpow(log_B, ell)
        tau = birkhoff_tau(Bl)
    else:
        tau = 0.0
    finite = L[np.isfinite(L)]
    span = float(finite.max() - finite.min()) if finite.size else 0.0
    max_sq = 80 + int(math.ceil(g.n * p * span / math.log(2)))
    lv0, lw0, log_rho_p, k = _perron_block(log_B, tol, max_sq)
    log_v, log_w, log_rho = _assemble(L, classes, c0, lv0, lw0, log_rho_p)
    resid = _residual(L, log_v, log_w, log_rho)
    if k > FLOAT_SQUARINGS or resid >= tol:
        lv0, lw0, log_rho_p, k = _perron_block_mp(L, p, c0, tol, k)
        log_v, log_w, log_rho = _assemble(L, classes, c0, lv0, lw0, log_rho_p)
        resid = _residual(L, log_v, log_w, log_rho)
    diam = hilbert_distance(log_matvec(L, log_v) - log_rho, log_v)
    return Eigensystem(
        log_rho=log_rho,
        log_v=log_v,
        log_w=log_w,
        period=p,
        cyclic_blocks=classes,
        primitivity_index=ell,
        birkhoff_tau=tau,
        certified_error=diam,
        certified_residual=resid,
        squarings=k,
    )


def _residual(L: np.ndarray, log_v: np.ndarray, log_w: np.ndarray, log_rho: float) -> float:
    rho = math.exp(log_rho)
    v, w = np.exp(log_v), np.exp(log_w)
    Mv = np.exp(log_matvec(L, log_v))
    wM = np.exp(log_matvec(L.T, log_w))
    r1 = np.abs(Mv - rho * v).max() / np.abs(v).max()
    r2 = np.abs(wM - rho * w).max() / np.abs(w).max()
    return float(max(r1, r2) / max(rho, 1e-300))


@dataclass(frozen=True)
class MarkovGibbsMeasure:
    """Shift-invariant Markov measure ``mu[b_0..b_n] = w(b_0) prod M v(b_n) / rho^n``."""

    matrix: TransferMatrix
    eig: Eigensystem

    @property
    def graph(self) -> Digraph:
        return self.matrix.graph

    def _indices(self, word) -> list[int]:
        g = self.graph
        if isinstance(word, str):
            if all(len(s) == 1 for s in g.names):
                word = list(word)
            else:
                word = word.split()
        out = []
        for s in word:
            try:
                out.append(g.symbol(s))
            except KeyError:
                raise SymbolNotInAlphabet(f"symbol {s!r} not in alphabet") from None
        return out

    def log_cylinder(self, word) -> float:
        idx = self._indices(word)
        if not idx:
            raise ValueError("empty word")
        L = self.matrix.log_entries
        total = self.eig.log_w[idx[0]] + self.eig.log_v[idx[-1]]
        for a, b in zip(idx, idx[1:]):
            total += L[a, b]
        total -= (len(idx) - 1) * self.eig.log_rho
        return float(total)

    def cylinder(self, word) -> float:
        return math.exp(self.log_cylinder(word))

    @cached_property
    def marginals(self) -> np.ndarray:
        return np.exp(self.eig.log_w + self.eig.log_v)

    @cached_property
    def transition_probabilities(self) -> np.ndarray:
        L = self.matrix.log_entries
        lv = self.eig.log_v
        return np.exp(L + lv[None, :] - lv[:, None] - self.eig.log_rho)


def markov_measure(M: TransferMatrix, tol: float = DEFAULT_TOL) -> MarkovGibbsMeasure:
    return MarkovGibbsMeasure(M, eigensystem(M, tol))


def pressure(graph: Digraph, psi: Mapping[Arrow, float] | None, tol: float = DEFAULT_TOL) -> float:
    """Topological pressure ``log rho`` of ``psi`` on an irreducible graph."""
    return eigensystem(transfer_matrix(graph, None, psi), tol).log_rho


def spectral_radius(A: np.ndarray) -> float:
    if A.size == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvals(A)).max())


def return_series(M: TransferMatrix, b: int, eps_rho: float = 1e-9) -> float:
    """``sum_k M^k(b, b)`` via a dense solve on the communicating class of ``b``."""
    dec = decompose(M.graph)
    comp = dec.components[dec.owner[b]]
    if not comp.transitive:
        return 1.0
    verts = list(comp.vertices)
    A = np.exp(M.log_entries[np.ix_(verts, verts)])
    if spectral_radius(A) >= 1 - eps_rho:
        raise DivergentSeries(f"spectral radius of the class of vertex {b} is not below 1")
    e = np.zeros(len(verts))
    e[verts.index(b)] = 1.0
    x = np.linalg.solve(np.eye(len(verts)) - A, e)
    return float(x[verts.index(b)])
