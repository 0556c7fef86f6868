from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from crnreduce.network import (DSLSyntaxError, NetworkError, RateLaw, build_network,
                               derive_beta, make_scaling, parse_network, serialize_network)
from crnreduce.scenarios import scenario_text
from crnreduce.tropical import N, RationalN, ScaledQuantity, rational_from_expr

MM = """\
species: E S ES P
intermediates: ES
alpha:
  S = 1/2
reactions:
  E + S -> ES @ k1 N^0   # binding
  ES -> E + S @ k2 N^2
  ES -> E + P @ k3 N^1
"""


def cycle_network():
    return build_network(
        ["E", "S", "H1", "H2", "P"],
        [({"E": 1, "S": 1}, {"H1": 1}, "k1", 0),
         ({"H1": 1}, {"H2": 1}, "k2", 3),
         ({"H2": 1}, {"H1": 1}, "k3", 4),
         ({"H1": 1}, {"E": 1, "P": 1}, "k4", 2)],
        intermediates=["H1", "H2"],
        parameters={"k1": 1.0, "k2": 1.0, "k3": 1.0, "k4": 10.0})


class TestParse:
    def test_michaelis_menten_shape(self):
        net, spec = parse_network(MM)
        assert net.species == ("E", "S", "ES", "P")
        assert len(net.reactions) == 3
        assert net.intermediates == ("ES",)
        assert spec.alpha_of("S") == Fraction(1, 2)
        assert spec.alpha_of("E") == 0

    def test_beta_is_alpha_s(self):
        net, spec = parse_network(MM)
        idx = next(i for i, r in enumerate(net.reactions) if net.reaction_label(i) == "E + S -> ES")
        assert spec.betas == {idx: Fraction(1, 2)}

    def test_cycle_beta(self):
        net = cycle_network()
        spec = make_scaling(net, {"S": Fraction(3, 2)})
        (b,) = spec.betas.values()
        assert b == Fraction(3, 2)

    @pytest.mark.parametrize("text, match", [
        ("species: A\nreactions:\n", "no reactions"),
        ("species: A A\nreactions:\n A -> 0 @ 1 N^0\n", "duplicate species"),
        ("species: A B\nreactions:\n A -> -1 B @ 1 N^0\n", "cannot parse|negative"),
        ("species: A\nreactions:\n A -> A @ 1 N^0\n", "not allowed"),
        ("species: A\nalpha:\n Z = 1\nreactions:\n A -> 0 @ 1 N^0\n", "unknown species"),
        ("species: A\nreactions:\n A -> 0\n", "missing '@ rate'"),
        ("species: A\nreactions:\n A -> 0 @ -2 N^0\n", "positive"),
        ("species: A\nreactions:\n A -> 0 @ 1 N^0\n A -> 0 @ 2 N^0\n", "duplicate reaction"),
    ])
    def test_errors(self, text, match):
        with pytest.raises(DSLSyntaxError, match=match):
            parse_network(text)

    def test_error_carries_line_number(self):
        with pytest.raises(DSLSyntaxError) as info:
            parse_network("species: A B\nreactions:\n  A -> B @ 1 N^0\n  B -> Q @ 1 N^0\n")
        assert "line 4" in str(info.value)

    def test_rational_eta_and_float_kappa(self):
        net, _ = parse_network("species: A\nreactions:\n  A -> 0 @ 0.25 N^(-3/2)\n")
        law = net.reactions[0].law
        assert law.eta == Fraction(-3, 2)
        assert law.value(4.0) == pytest.approx(0.25 / 8)

    def test_missing_alpha_entry(self):
        net = cycle_network()
        with pytest.raises(NetworkError, match="missing alpha"):
            derive_beta(net, {"E": 0})


class TestSerialize:
    @pytest.mark.parametrize("name", ["mm", "example2", "example4", "sec9-1", "sec9-2",
                                      "empty-intermediates"])
    def test_bundled_round_trip(self, name):
        text = scenario_text(name)
        net, spec = parse_network(text)
        assert serialize_network(net, spec) == text
        net2, spec2 = parse_network(serialize_network(net, spec))
        assert net2 == net and dict(spec2.alpha) == dict(spec.alpha)

    def test_programmatic_cycle_matches_bundled(self):
        net = cycle_network()
        assert serialize_network(net) == scenario_text("example2")

    def test_reactions_sorted_by_source_then_target(self):
        net = cycle_network()
        keys = [(net.complex_index(r.source), net.complex_index(r.target)) for r in net.reactions]
        assert keys == sorted(keys)


# -- property tests ------------------------------------------------------------------------

NAMES = ["A", "B", "C", "D"]


@st.composite
def networks(draw):
    n = draw(st.integers(1, 4))
    species = NAMES[:n]
    cx = st.dictionaries(st.sampled_from(species), st.integers(1, 3), max_size=n)
    rx = draw(st.lists(st.tuples(cx, cx, st.integers(1, 9),
                                 st.fractions(-3, 3, max_denominator=4)),
                       min_size=1, max_size=6))
    seen, out = set(), []
    for src, tgt, k, eta in rx:
        key = (tuple(sorted(src.items())), tuple(sorted(tgt.items())))
        if src != tgt and key not in seen:
            seen.add(key)
            out.append((src, tgt, sp.Integer(k), eta))
    if not out:
        out = [({species[0]: 1}, {}, sp.Integer(1), Fraction(0))]
    alpha = draw(st.fixed_dictionaries(
        {s: st.fractions(-2, 2, max_denominator=3) for s in species}))
    return build_network(species, out), alpha


@settings(max_examples=150, deadline=None)
@given(networks())
def test_parse_serialize_round_trip(drawn):
    net, alpha = drawn
    spec = make_scaling(net, alpha)
    net2, spec2 = parse_network(serialize_network(net, spec))
    assert net2 == net
    assert spec2.betas == spec.betas


@settings(max_examples=100, deadline=None)
@given(networks(), st.data())
def test_beta_linear_in_alpha(drawn, data):
    net, a1 = drawn
    net = build_network(net.species, [
        ({net.species[k]: v for k, v in r.source.stoich.items()},
         {net.species[k]: v for k, v in r.target.stoich.items()}, r.law.kappa, 0)
        for r in net.reactions])
    a2 = data.draw(st.fixed_dictionaries(
        {s: st.fractions(-2, 2, max_denominator=3) for s in net.species}))
    b1, b2 = derive_beta(net, a1), derive_beta(net, a2)
    b12 = derive_beta(net, {s: a1[s] + a2[s] for s in net.species})
    assert b12 == {k: b1[k] + b2[k] for k in b12}


@settings(max_examples=100, deadline=None)
@given(networks(), st.floats(0.5, 1e3), st.integers(0, 3))
def test_rate_positivity(drawn, n, zero_at):
    net, _ = drawn
    x = np.linspace(0.5, 2.0, net.n_species)
    assert np.all(net.rates(x, n) > 0)
    if zero_at < net.n_species:
        x[zero_at] = 0.0
        r = net.rates(x, n)
        for rate, rx in zip(r, net.reactions):
            if rx.source.coeffs[zero_at]:
                assert rate == 0.0
            else:
                assert rate > 0


def test_all_zero_alpha_and_eta_give_zero_beta():
    net = build_network(["A", "B"], [({"A": 1}, {"B": 2}, 1), ({"B": 2}, {"A": 1}, 2)])
    assert set(make_scaling(net).betas.values()) == {0}


def test_rate_law_rejects_nonpositive():
    with pytest.raises(NetworkError):
        RateLaw(sp.Integer(0))


class TestTropical:
    def test_sum_keeps_leading(self):
        q = ScaledQuantity.of(2, 1) + ScaledQuantity.of(5, Fraction(1, 2))
        assert (q.coefficient, q.exponent) == (2, 1)
        q = ScaledQuantity.of(2, 1) + ScaledQuantity.of(3, 1)
        assert (q.coefficient, q.exponent) == (5, 1)

    def test_product_and_quotient(self):
        a, b = ScaledQuantity.of(3, Fraction(1, 3)), ScaledQuantity.of(2, -1)
        assert (a * b).exponent == Fraction(-2, 3)
        assert (a / b).coefficient == sp.Rational(3, 2)

    def test_rational_leading_of_mm_rate(self):
        k1, k2, k3 = sp.symbols("k1 k2 k3", positive=True)
        r = rational_from_expr(k1 * k3 * N / (k2 * N**2 + k3 * N))
        lead = r.leading()
        assert lead.exponent == -1
        assert sp.simplify(lead.coefficient - k1 * k3 / k2) == 0

    def test_rational_arithmetic_matches_sympy(self):
        k = sp.Symbol("k", positive=True)
        a = rational_from_expr(N**2 * k + N)
        b = rational_from_expr(1 / (N + k))
        got = (a * b + b).to_expr()
        want = (N**2 * k + N) / (N + k) + 1 / (N + k)
        assert sp.simplify(got - want) == 0
        assert isinstance(a / b, RationalN)
