"""Finite-temperature measures and empirical checks against the zero-temperature limit."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .perron import (DEFAULT_TOL, DivergentSeries, MarkovGibbsMeasure, eigensystem, log_matpow,
                     markov_measure, spectral_radius, transfer_matrix)
from .potentials import NormalizedSystem
from .renorm import ZeroTemperatureLimit, limit_cylinder, _word_indices
from .sft import Digraph, decompose

ERROR_FLOOR = 1e-14


class BadPeriodMultiple(ValueError):
    pass


class DegenerateWindow(ValueError):
    pass


def equilibrium_state(g: Digraph, phi, psi, beta: float, tol: float = DEFAULT_TOL) -> MarkovGibbsMeasure:
    return markov_measure(transfer_matrix(g, phi, psi, beta), tol)


def periodic_approximation(g: Digraph, phi, psi, beta: float, p: int, word) -> float:
    """Mass of ``word`` under the uniform measure on period-``p`` orbits weighted by ``M``."""
    M = transfer_matrix(g, phi, psi, beta)
    period = decompose(g).components[0].period or 1
    idx = _word_indices(g, word)
    n = len(idx) - 1
    if p % period or p <= n:
        raise BadPeriodMultiple(f"p={p} must be a multiple of the period {period} and exceed {n}")
    L = M.log_entries
    head = sum(L[a, b] for a, b in zip(idx, idx[1:]))
    if not np.isfinite(head):
        return 0.0
    tail, s_tail = log_matpow(L, p - n)
    full, s_full = log_matpow(L, p)
    log_trace = np.logaddexp.reduce(np.diag(full)) + s_full
    return float(math.exp(head + tail[idx[-1], idx[0]] + s_tail - log_trace))


@dataclass(frozen=True)
class BetaSweep:
    betas: tuple[float, ...]
    cylinders: tuple[str, ...]
    values: np.ndarray  # shape (len(betas), len(cylinders))
    limit_row: np.ndarray

    def rows(self):
        for b, row in zip(self.betas, self.values):
            yield b, row
        yield "limit", self.limit_row

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["beta", *self.cylinders])
        for b, row in self.rows():
            w.writerow([b if isinstance(b, str) else repr(float(b)), *(repr(float(x)) for x in row)])
        return buf.getvalue()


def beta_sweep(g: Digraph, phi, psi, betas: Sequence[float], cylinders: Sequence[str],
               limit: ZeroTemperatureLimit, tol: float = DEFAULT_TOL) -> BetaSweep:
    betas = tuple(sorted(float(b) for b in betas))
    vals = np.empty((len(betas), len(cylinders)))
    for i, b in enumerate(betas):
        mu = equilibrium_state(g, phi, psi, b, tol)
        vals[i] = [mu.cylinder(c) for c in cylinders]
    lim = np.array([limit_cylinder(limit, c) for c in cylinders])
    return BetaSweep(betas, tuple(cylinders), vals, lim)


@dataclass(frozen=True)
class DecayFit:
    slope: float | None  # None when the error never exceeds the floor
    intercept: float | None
    points: int
    first_error: float
    last_error: float


@dataclass(frozen=True)
class DecayReport:
    window: tuple[float, float]
    fits: Mapping[str, DecayFit]

    def all_decaying(self) -> bool:
        return all(f.slope is None or f.slope < 0 for f in self.fits.values())


def decay_report(g: Digraph, phi, psi, limit: ZeroTemperatureLimit, window: tuple[float, float],
                 cylinders: Sequence[str] | None = None, samples: int = 26) -> DecayReport:
    """Least-squares slope of ``log|mu_beta[w] - limit[w]|`` against ``beta``."""
    lo, hi = window
    if not lo < hi:
        raise DegenerateWindow(f"empty window {window}")
    if cylinders is None:
        cylinders = list(g.names)
    betas = np.linspace(lo, hi, samples)
    lim = {c: limit_cylinder(limit, c) for c in cylinders}
    errs = {c: [] for c in cylinders}
    for b in betas:
        mu = equilibrium_state(g, phi, psi, float(b))
        for c in cylinders:
            errs[c].append(abs(mu.cylinder(c) - lim[c]))
    fits = {}
    for c in cylinders:
        e = np.array(errs[c])
        keep = e > ERROR_FLOOR
        if not keep.any():
            fits[c] = DecayFit(None, None, 0, float(e[0]), float(e[-1]))
            continue
        if keep.sum() < 3:
            raise DegenerateWindow(f"cylinder {c!r}: only {int(keep.sum())} points above the numerical floor")
        slope, intercept = np.polyfit(betas[keep], np.log(e[keep]), 1)
        fits[c] = DecayFit(float(slope), float(intercept), int(keep.sum()), float(e[0]), float(e[-1]))
    return DecayReport((lo, hi), fits)


def concentration_check(g: Digraph, phi, psi, heavy_vertices, betas: Sequence[float]) -> np.ndarray:
    """Mass of the symbols outside the heavy components, per ``beta``."""
    outside = [v for v in range(g.n) if v not in set(heavy_vertices)]
    out = []
    for b in betas:
        m = equilibrium_state(g, phi, psi, b).marginals
        out.append(float(sum(m[v] for v in outside)))
    return np.array(out)


@dataclass(frozen=True)
class SpectralCheck:
    betas: tuple[float, ...]
    excess: tuple[float, ...]  # rho_beta - 1
    bound: tuple[float, ...]  # exp(beta phi_g / 2)
    threshold: float | None  # smallest tested beta from which the sandwich holds onwards

    def holds_from(self, beta0: float) -> bool:
        return all(0 < x <= y for b, x, y in zip(self.betas, self.excess, self.bound) if b >= beta0)


def spectral_radius_check(sys: NormalizedSystem, betas: Sequence[float]) -> SpectralCheck:
    """``rho_beta - 1`` of the normalized system against ``exp(beta phi_g / 2)``."""
    g = sys.graph
    phi_g = sys.report.phi_g
    betas = tuple(float(b) for b in betas)
    excess, bound = [], []
    for b in betas:
        eig = eigensystem(transfer_matrix(g, sys.phi, sys.psi, b))
        excess.append(math.expm1(eig.log_rho))
        bound.append(math.exp(b * float(phi_g) / 2) if phi_g is not None else 0.0)
    threshold = None
    for i in range(len(betas) - 1, -1, -1):
        if 0 < excess[i] <= bound[i]:
            threshold = betas[i]
        else:
            break
    return SpectralCheck(betas, tuple(excess), tuple(bound), threshold)


def _resolvent_diagonal(A: np.ndarray, eps_rho: float) -> np.ndarray:
    n = A.shape[0]
    if n == 0:
        return np.zeros(0)
    if spectral_radius(A) >= 1 - eps_rho:
        raise DivergentSeries("series diverges: spectral radius is not below 1")
    return np.diag(np.linalg.inv(np.eye(n) - A)).copy()


def excursion_series_check(sys: NormalizedSystem, heavy_vertices, heavy_arrows, beta: float) -> dict[int, tuple[float, float]]:
    """Per non-heavy vertex: excursion return series at ``beta`` and its limit on the maximizing subshift.

    The first series sums ``Mtilde^k(a, a) / rho^k`` where ``Mtilde`` drops the
    heavy arrows from the transfer matrix; the second sums
    ``Mbar_psi^k(a, a)`` over the maximizing arrows.
    """
    g = sys.graph
    H = set(heavy_vertices)
    dropped = set(heavy_arrows)
    M = transfer_matrix(g, sys.phi, sys.psi, beta)
    log_rho = eigensystem(M).log_rho
    Mt = np.where(np.isfinite(M.log_entries), np.exp(M.log_entries - log_rho), 0.0)
    for a, b in dropped:
        Mt[a, b] = 0.0
    Mbar = np.zeros((g.n, g.n))
    for e in sys.report.maximizing_arrows:
        if e not in dropped:
            Mbar[e] = math.exp(float(sys.psi[e]))
    out = {}
    d_t = _resolvent_diagonal(Mt, sys.eps_rho)
    d_b = _resolvent_diagonal(Mbar, sys.eps_rho)
    for a in range(g.n):
        if a not in H:
            out[a] = (float(d_t[a]), float(d_b[a]))
    return out
