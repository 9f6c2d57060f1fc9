import math
from fractions import Fraction as F

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from zerotemp.perron import (DivergentSeries, NotIrreducible, SymbolNotInAlphabet, TransferMatrix, eigensystem,
                             markov_measure, pressure, return_series, transfer_matrix)
from zerotemp.sft import Digraph, is_irreducible, validate

from conftest import example

FULL2 = validate("ab", [(x, y) for x in "ab" for y in "ab"])
TWO_CYCLE = validate("ab", [("a", "b"), ("b", "a")])


@st.composite
def weighted_graphs(draw, max_n=5, spread=30.0):
    """Irreducible digraph with log-weights in [-spread, 0]."""
    n = draw(st.integers(1, max_n))
    pairs = [(a, b) for a in range(n) for b in range(n)]
    arrows = frozenset(draw(st.sets(st.sampled_from(pairs), min_size=1)))
    g = Digraph(tuple("abcde"[:n]), arrows)
    assume(is_irreducible(g))
    logs = {e: draw(st.floats(-spread, 0.0)) for e in sorted(arrows)}
    return g, logs


def mp_perron(g, logs, dps=60):
    """Reference Perron data from a dense high-precision eigensolve."""
    with mpmath.workdps(dps):
        A = mpmath.zeros(g.n, g.n)
        for (a, b), x in logs.items():
            A[a, b] = mpmath.exp(mpmath.mpf(x))
        ev, right = mpmath.eig(A)
        k = max(range(g.n), key=lambda i: (mpmath.re(ev[i]), -abs(mpmath.im(ev[i]))))
        rho = mpmath.re(ev[k])
        ev_t, left = mpmath.eig(A.T)
        j = min(range(g.n), key=lambda i: abs(ev_t[i] - rho))
        v = np.array([float(abs(right[i, k])) for i in range(g.n)])
        w = np.array([float(abs(left[i, j])) for i in range(g.n)])
        return float(mpmath.log(rho)), v, w


def test_transfer_matrix_examples():
    M = transfer_matrix(FULL2, None, None, 0.0)
    assert np.array_equal(M.entries, np.ones((2, 2)))
    g, phi, _, _ = example("example1")
    M = transfer_matrix(g, phi, None, math.log(2))
    assert M.entries[0, 1] == pytest.approx(0.5, rel=1e-15)
    assert M.entries[0, 2] == pytest.approx(0.25, rel=1e-15)
    M = transfer_matrix(g, phi, None, 60.0)
    assert M.log_entries[0, 1] == -60.0
    assert math.exp(M.log_entries[0, 1]) == pytest.approx(8.757e-27, rel=1e-3)


def test_beta_times_rational_is_rounded_once():
    g = validate("ab", [("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")])
    phi = {e: F(-1, 3) for e in g.arrows}
    M = transfer_matrix(g, phi, None, 3.0)
    assert M.log_entries[0, 0] == -1.0


def test_eigensystem_examples():
    eig = eigensystem(transfer_matrix(TWO_CYCLE, None, None))
    assert eig.rho == pytest.approx(1, abs=1e-15)
    assert eig.period == 2
    assert np.allclose(eig.v, 1 / math.sqrt(2), atol=1e-15)
    assert np.allclose(eig.w, 1 / math.sqrt(2), atol=1e-15)
    mu = markov_measure(transfer_matrix(FULL2, None, None))
    assert mu.eig.rho == pytest.approx(2, abs=1e-14)
    assert np.allclose(mu.marginals, 0.5, atol=1e-15)


def test_renormalized_example2_root_solves_quartic():
    _, _, _, limit = example("example2")
    top = limit.levels[1].system
    g = top.report.maximizing_subgraph
    rho = eigensystem(transfer_matrix(g, None, None)).rho
    assert abs(rho**4 - 4 * rho**2 - 2 * rho + 1) < 1e-12
    assert rho == pytest.approx(2.170086, abs=5e-7)


def test_cylinder_examples():
    mu = markov_measure(transfer_matrix(FULL2, None, None))
    assert mu.cylinder("a") == pytest.approx(0.5, abs=1e-15)
    assert mu.cylinder("ab") == pytest.approx(0.25, abs=1e-15)
    g, phi, psi, _ = example("example2")
    mu = markov_measure(transfer_matrix(g, phi, psi, math.log(2)))
    assert mu.cylinder("a") == pytest.approx(0.253298, abs=5e-7)
    with pytest.raises(SymbolNotInAlphabet):
        mu.cylinder("z")
    assert markov_measure(transfer_matrix(TWO_CYCLE, None, None)).cylinder("aa") == 0.0


def test_pressure_examples():
    assert pressure(FULL2, None) == pytest.approx(math.log(2), abs=1e-14)
    assert pressure(validate("a", [("a", "a")]), None) == 0.0
    golden = validate("01", [("0", "0"), ("0", "1"), ("1", "0")])
    assert pressure(golden, None) == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-14)
    with pytest.raises(NotIrreducible):
        pressure(validate("ab", [("a", "a"), ("b", "b")]), None)


def test_return_series_examples():
    dag = validate("ab", [("a", "b")])
    assert return_series(TransferMatrix.from_log_weights(dag, {(0, 1): 0.0}), 0) == 1.0
    loop = validate("a", [("a", "a")])
    assert return_series(TransferMatrix.from_log_weights(loop, {(0, 0): math.log(0.5)}), 0) == pytest.approx(2)
    M = TransferMatrix.from_log_weights(TWO_CYCLE, {e: math.log(0.5) for e in TWO_CYCLE.arrows})
    assert return_series(M, 0) == pytest.approx(4 / 3, abs=1e-15)
    with pytest.raises(DivergentSeries):
        return_series(TransferMatrix.from_log_weights(loop, {(0, 0): 0.0}), 0)


@settings(max_examples=150, deadline=None)
@given(weighted_graphs())
def test_residual_and_pairing(system):
    g, logs = system
    eig = eigensystem(TransferMatrix.from_log_weights(g, logs))
    assert eig.certified_residual < 1e-12
    assert float(np.dot(eig.w, eig.v)) == pytest.approx(1, abs=1e-12)
    assert (eig.v > 0).all() and (eig.w > 0).all()


@settings(max_examples=60, deadline=None)
@given(weighted_graphs(max_n=4, spread=40.0))
def test_matches_high_precision_reference(system):
    g, logs = system
    eig = eigensystem(TransferMatrix.from_log_weights(g, logs))
    log_rho, v, w = mp_perron(g, logs)
    assert eig.log_rho == pytest.approx(log_rho, abs=1e-12)
    pi_ref = v * w / np.dot(v, w)
    assert np.allclose(np.exp(eig.log_v + eig.log_w), pi_ref, atol=1e-12)


def test_nearly_decoupled_cycle_at_large_beta():
    # two fixed points joined by weak arrows; marginals are exactly 1/2 each by symmetry
    g = validate("ab", [("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")])
    logs = {(0, 0): 0.0, (1, 1): 0.0, (0, 1): -60.0, (1, 0): -60.0}
    mu = markov_measure(TransferMatrix.from_log_weights(g, logs))
    assert np.allclose(mu.marginals, 0.5, atol=1e-13)


@settings(max_examples=100, deadline=None)
@given(weighted_graphs(max_n=4, spread=10.0), st.data())
def test_cylinder_consistency(system, data):
    g, logs = system
    mu = markov_measure(TransferMatrix.from_log_weights(g, logs))
    assert sum(mu.cylinder([s]) for s in g.names) == pytest.approx(1, abs=1e-10)
    length = data.draw(st.integers(1, 4))
    word = data.draw(st.lists(st.sampled_from(g.names), min_size=length, max_size=length))
    base = mu.cylinder(word)
    assert sum(mu.cylinder(word + [s]) for s in g.names) == pytest.approx(base, abs=1e-10)
    assert sum(mu.cylinder([s] + word) for s in g.names) == pytest.approx(base, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(weighted_graphs(max_n=4, spread=10.0), st.data())
def test_coboundary_invariance(system, data):
    g, logs = system
    h = data.draw(st.lists(st.floats(-3, 3), min_size=g.n, max_size=g.n))
    shifted = {(a, b): x + h[b] - h[a] for (a, b), x in logs.items()}
    mu = markov_measure(TransferMatrix.from_log_weights(g, logs))
    nu = markov_measure(TransferMatrix.from_log_weights(g, shifted))
    for word in ([s] for s in g.names):
        assert nu.cylinder(word) == pytest.approx(mu.cylinder(word), abs=1e-9)
    for a, b in g.arrows:
        w = [g.names[a], g.names[b]]
        assert nu.cylinder(w) == pytest.approx(mu.cylinder(w), abs=1e-9)


def stability_violation(g, logs, noise, eta):
    """Worst excess of the projective-stability bounds for a perturbation pair."""
    M = eigensystem(TransferMatrix.from_log_weights(g, logs))
    N = eigensystem(TransferMatrix.from_log_weights(g, {e: x + noise[e] for e, x in logs.items()}))
    ratio_rho = abs(N.log_rho - M.log_rho)
    vec_bound = 2 * (g.n - 1) * eta
    dv = (N.log_v - N.log_v[0]) - (M.log_v - M.log_v[0])
    dw = (N.log_w - N.log_w[0]) - (M.log_w - M.log_w[0])
    return max(ratio_rho - eta, float(np.abs(dv).max()) - vec_bound, float(np.abs(dw).max()) - vec_bound)


def random_stability_pairs(count, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(2, 6))
        mask = rng.random((n, n)) < 0.6
        g = Digraph(tuple("abcde"[:n]), frozenset(zip(*np.nonzero(mask))))
        if not is_irreducible(g):
            continue
        g = Digraph(g.names, frozenset((int(a), int(b)) for a, b in g.arrows))
        eta = float(rng.uniform(1e-4, 0.01))
        logs = {e: float(rng.uniform(-5, 0)) for e in g.sorted_arrows}
        noise = {e: float(rng.uniform(-eta, eta)) for e in g.sorted_arrows}
        out.append((g, logs, noise, eta))
    return out


def test_projective_stability_on_random_pairs():
    worst = max(stability_violation(*pair) for pair in random_stability_pairs(100))
    assert worst <= 1e-12
