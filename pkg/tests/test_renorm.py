import math
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from zerotemp.perron import NotIrreducible, SymbolNotInAlphabet
from zerotemp.potentials import normalize
from zerotemp.random_systems import random_system
from zerotemp.renorm import (IterationCap, RenormalizedNotIrreducible, central_terms, heavy_components,
                             renormalized_sft, transition_data, transition_pressure,
                             zero_temperature_limit)
from zerotemp.sft import Digraph, PathRec, is_irreducible, validate

from conftest import example

EXAMPLE2_RHO = 2.1700864866260857  # largest root of x^4 - 4x^2 - 2x + 1


def build(names, phi, psi=None):
    g = validate(names, [(a, b) for a, b in phi])
    ix = g.index
    phi_i = {(ix[a], ix[b]): F(x) for (a, b), x in phi.items()}
    psi_i = None if psi is None else {(ix[a], ix[b]): float(psi.get((a, b), 0.0)) for a, b in phi}
    return g, phi_i, psi_i


def systems():
    return st.integers(0, 2**32 - 1).map(lambda s: random_system(random.Random(s)))


# -- heavy components ---------------------------------------------------------

def test_heavy_components_examples():
    for name, n in (("example1", 3), ("example3", 5)):
        g, phi, psi, _ = example(name)
        heavy = heavy_components(normalize(g, phi, psi))
        assert heavy.n_heavy == heavy.N == n
        assert all(len(c.vertices) == 1 for c in heavy.heavy)


def test_fixed_point_and_two_cycle_are_both_heavy():
    g, phi, psi = build("abc", {("a", "a"): 0, ("a", "b"): -1, ("b", "c"): 0, ("c", "b"): 0, ("c", "a"): -2})
    heavy = heavy_components(normalize(g, phi, psi))
    assert heavy.n_heavy == 2
    assert [c.vertices for c in heavy.heavy] == [(0,), (1, 2)]


# -- central terms ------------------------------------------------------------

def test_central_terms_on_two_cycle():
    q = F(3, 2)
    g, phi, psi = build("xde", {("d", "e"): q, ("e", "d"): -q, ("x", "x"): 0, ("x", "d"): -5, ("e", "x"): -5})
    sys = normalize(g, phi, psi)
    heavy = heavy_components(sys)
    ct = central_terms(sys, heavy)
    d, e = g.index["d"], g.index["e"]
    assert ct.phi_ell[d] == 0 and ct.phi_ell[e] == q
    other = central_terms(sys, heavy, rule="largest")
    assert other.phi_ell[e] == 0 and other.phi_ell[d] == -q
    assert ct.phi_ell[g.index["x"]] == 0


# -- renormalized graph -------------------------------------------------------

def test_renormalized_graph_example1():
    g, phi, psi, limit = example("example1")
    gp = limit.levels[0].renormalized.graph
    assert gp.arrows == {(J, K) for J in range(3) for K in range(3) if J != K}


def test_renormalized_graph_example2_maximizing_part():
    _, _, _, limit = example("example2")
    rs = limit.levels[0].renormalized
    best = {e for e, x in rs.phi.items() if x == -1}
    assert best == {(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1), (2, 3), (3, 2)}
    # the direct arrows between {a, b} and d are excursions as well, one unit worse
    assert {e: x for e, x in rs.phi.items() if e not in best} == {(0, 3): -2, (3, 0): -2, (1, 3): -2, (3, 1): -2}
    assert set(rs.psi.values.values()) == {0.0}
    top = limit.levels[1].system
    assert top.report.maximizing_arrows == best


def test_single_component_renormalizes_to_nothing():
    g, phi, psi = build("ab", {("a", "b"): 0, ("b", "a"): 0})
    sys = normalize(g, phi, psi)
    gp = renormalized_sft(sys, heavy_components(sys))
    assert gp.n == 1 and not gp.arrows


# -- renormalized potentials --------------------------------------------------

def test_example1_renormalized_potentials():
    _, _, _, limit = example("example1")
    rs = limit.levels[0].renormalized
    expected = {(0, 1): -1, (1, 0): -1, (0, 2): -2, (2, 0): -2, (1, 2): -2, (2, 1): -2}
    assert dict(rs.phi.items()) == expected
    assert all(x == 0.0 for x in rs.psi.values.values())


def test_transition_pressure_conventions():
    g, phi, psi = build("abxy", {("a", "a"): 0, ("b", "b"): 0, ("a", "x"): -1, ("x", "y"): -1, ("y", "b"): -1,
                                 ("b", "a"): -1, ("a", "b"): -4})
    sys = normalize(g, phi, psi)
    heavy = heavy_components(sys)
    a, b, x, y = (g.index[s] for s in "abxy")
    assert transition_pressure(sys, heavy, PathRec((a, b))) == 0.0
    assert transition_pressure(sys, heavy, PathRec((a, x, b))) == pytest.approx(0.0)
    assert transition_pressure(sys, heavy, PathRec((a, x, y, b))) == pytest.approx(math.log(2))


def test_transition_terms_are_exact_maxima():
    g, phi, psi, _ = example("example2")
    sys = normalize(g, phi, psi)
    trans = transition_data(sys, heavy_components(sys))
    assert trans.phi_r[(0, 3)] == -2
    assert [p.vertices for p in trans.paths[(0, 3)]] == [(0, 3)]
    assert trans.phi_r[(3, 0)] == -2
    assert [p.vertices for p in trans.paths[(3, 0)]] == [(3, 0)]


# -- ladder -------------------------------------------------------------------

def test_ladder_shapes():
    _, _, _, l1 = example("example1")
    top = l1.levels[1].system
    assert top.report.maximizing_arrows == {(0, 1), (1, 0)}
    _, _, _, l2 = example("example2")
    assert len(l2.levels) == 2 and l2.levels[1].heavy.n_heavy == 1
    _, _, _, l3 = example("example3")
    assert [lv.heavy.n_heavy for lv in l3.levels] == [5, 2, 1]
    assert [c.vertices for c in l3.levels[1].heavy.heavy] == [(0, 1, 2), (3, 4)]


def test_alpha_on_examples():
    _, _, _, l1 = example("example1")
    assert l1.alpha_exact == (F(1, 2), F(1, 2), F(0))
    assert l1.eliminated == {2}
    _, _, _, l2 = example("example2")
    rho = EXAMPLE2_RHO
    expected = [1 / (2 * (4 - rho))] * 2 + [(rho - 1)**2 / (2 * (4 - rho)), (rho - 1)**2 / (2 * rho**2 * (4 - rho))]
    assert np.allclose(l2.alpha, expected, atol=1e-12)
    _, _, _, l3 = example("example3")
    assert l3.alpha_exact == (F(1, 6),) * 3 + (F(1, 4),) * 2


def test_limit_cylinder_examples():
    _, _, _, l1 = example("example1")
    assert l1.limit_cylinder("a") == 0.5
    assert l1.limit_cylinder("ab") == 0.0
    assert l1.limit_cylinder("aa") == 0.5
    with pytest.raises(SymbolNotInAlphabet):
        l1.limit_cylinder("q")
    _, _, _, l2 = example("example2")
    rho = EXAMPLE2_RHO
    assert l2.limit_cylinder("d") == pytest.approx((rho - 1)**2 / (2 * rho**2 * (4 - rho)), abs=1e-12)


def test_reducible_input_is_rejected():
    g, phi, psi = build("ab", {("a", "a"): 0, ("b", "b"): 0, ("a", "b"): -1})
    with pytest.raises(NotIrreducible):
        zero_temperature_limit(g, phi, psi)


def test_split_renormalized_graph_reports_ladder(monkeypatch):
    import zerotemp.renorm as renorm
    g, phi, psi, _ = example("example1")

    def split_step(sys, heavy, central_rule="smallest"):
        gp = Digraph(("1", "2", "3"), frozenset({(0, 1), (1, 0), (2, 2)}))
        return renorm.RenormalizedSystem(gp, renorm.Potential(gp, {e: F(-1) for e in gp.arrows}),
                                         renorm.Potential(gp, {e: 0.0 for e in gp.arrows}), {}, None, None)

    monkeypatch.setattr(renorm, "renormalize_step", split_step)
    with pytest.raises(RenormalizedNotIrreducible) as exc:
        zero_temperature_limit(g, phi, psi)
    assert len(exc.value.ladder) == 1


@settings(max_examples=80, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(systems())
def test_renormalized_graphs_stay_irreducible(system):
    g, phi, psi = system
    L = zero_temperature_limit(g, phi, psi)
    for lv in L.levels[:-1]:
        assert is_irreducible(lv.renormalized.graph)


# -- invariants ---------------------------------------------------------------

@settings(max_examples=80, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(systems())
def test_weight_simplex_and_support(system):
    g, phi, psi = system
    L = zero_temperature_limit(g, phi, psi)
    assert min(L.alpha) >= 0
    assert sum(L.alpha) == pytest.approx(1, abs=1e-10)
    assert len(L.levels) <= 2 * g.n
    heavy_arrows = L.heavy.heavy_arrow_union
    for a, b in g.arrows:
        if (a, b) not in heavy_arrows:
            assert L.limit_cylinder([g.names[a], g.names[b]]) == 0.0
    assert L.symbol_masses().sum() == pytest.approx(1, abs=1e-10)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(systems())
def test_central_vertex_rule_is_irrelevant(system):
    g, phi, psi = system
    a = zero_temperature_limit(g, phi, psi)
    b = zero_temperature_limit(g, phi, psi, central_rule="largest")
    assert np.allclose(a.alpha, b.alpha, atol=1e-9)
    for x in g.names:
        for y in g.names:
            assert a.limit_cylinder([x, y]) == pytest.approx(b.limit_cylinder([x, y]), abs=1e-9)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(systems(), st.builds(F, st.integers(-9, 9), st.integers(1, 4)), st.floats(-5, 5))
def test_constant_shift_invariance(system, c, d):
    g, phi, psi = system
    a = zero_temperature_limit(g, phi, psi)
    b = zero_temperature_limit(g, {e: x + c for e, x in phi.items()}, {e: x + d for e, x in psi.items()})
    assert np.allclose(a.alpha, b.alpha, atol=1e-9)
    assert np.allclose(a.symbol_masses(), b.symbol_masses(), atol=1e-9)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(systems(), st.data())
def test_coboundary_invariance(system, data):
    g, phi, psi = system
    h = data.draw(st.lists(st.builds(F, st.integers(-4, 4), st.integers(1, 3)), min_size=g.n, max_size=g.n))
    k = data.draw(st.lists(st.floats(-2, 2), min_size=g.n, max_size=g.n))
    phi2 = {(x, y): v + h[y] - h[x] for (x, y), v in phi.items()}
    psi2 = {(x, y): v + k[y] - k[x] for (x, y), v in psi.items()}
    a = zero_temperature_limit(g, phi, psi)
    b = zero_temperature_limit(g, phi2, psi2)
    assert np.allclose(a.symbol_masses(), b.symbol_masses(), atol=1e-9)


def test_single_heavy_component_shortcut():
    g, phi, psi = build("abc", {("a", "b"): 0, ("b", "a"): 0, ("a", "c"): -1, ("c", "a"): -1, ("c", "c"): -1})
    L = zero_temperature_limit(g, phi, psi)
    assert L.alpha == (1.0,) and len(L.levels) == 1
    nu = L.measures[0]
    assert L.limit_cylinder("a") == pytest.approx(nu.cylinder([0]))
    assert L.limit_cylinder("c") == 0.0


def test_iteration_cap_is_an_error_type():
    assert issubclass(IterationCap, RuntimeError)
