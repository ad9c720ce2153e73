import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from kvnlab.algebra import (
    NonSelfAdjointWarning,
    OperatorExpr,
    boost_coupling,
    commutator,
    coupled_targets,
    eom_compare,
    full_generator,
    heisenberg_rhs,
    isolation_check,
    monomial,
    normal_order,
    observable_coupling,
    parameter,
    parse,
    random_observable_polynomial,
)
from kvnlab.algebra.oracle import GridOracle, commutator_discrepancy
from kvnlab.errors import ParseError, ResourceError, UnknownSymbolError

c = parameter("c")
q, p, x, k, px, pk = (OperatorExpr.generator(n) for n in ("q", "p", "x", "k", "p_x", "p_k"))


class TestCanonicalRelations:
    def test_pairs(self):
        assert commutator(q, p) == OperatorExpr.scalar(sp.I)
        assert commutator(x, px) == OperatorExpr.scalar(sp.I)
        assert commutator(k, pk) == OperatorExpr.scalar(sp.I)

    def test_cross_sector_commute(self):
        for a in (q, p):
            for b in (x, k, px, pk):
                assert commutator(a, b).is_zero()
        assert commutator(x, k).is_zero()
        assert commutator(px, pk).is_zero()

    def test_hbar_enters_quantum_pair_only(self):
        h = sp.Symbol("hbar", positive=True)
        qh, ph = OperatorExpr.generator("q", h), OperatorExpr.generator("p", h)
        xh, pxh = OperatorExpr.generator("x", h), OperatorExpr.generator("p_x", h)
        assert commutator(qh, ph).scalar_value() == sp.I * h
        assert commutator(xh, pxh).scalar_value() == sp.I

    def test_reordering(self):
        assert p * q == q * p - OperatorExpr.scalar(sp.I)
        assert (p * q).coefficient("q*p") == 1
        assert (p * q * p).coefficient("p") == -sp.I


class TestParser:
    def test_examples(self):
        assert parse("q*p - p*q") == OperatorExpr.scalar(sp.I)
        assert parse("(q^2 + p^2)/2") == (q * q + p * p) * sp.Rational(1, 2)
        assert parse("-c*q*pk") == boost_coupling()
        assert parse("c*q*x") == observable_coupling()
        assert parse("0.1*x") == x * sp.Rational(1, 10)
        assert parse("2i*q") == q * (2 * sp.I)
        assert parse("k*p_x - x*p_k") == k * px - x * pk

    @pytest.mark.parametrize(
        "text, offset",
        [("q +* p", 3), ("q p", 2), ("(q + p", 6), ("q $ p", 2), ("q/p", 1), ("q/0", 1)],
    )
    def test_error_offsets(self, text, offset):
        with pytest.raises(ParseError) as info:
            parse(text)
        assert info.value.offset == offset

    def test_unknown_symbol(self):
        with pytest.raises(UnknownSymbolError) as info:
            parse("q*y")
        assert info.value.offset == 2

    def test_degree_bound(self):
        with pytest.raises(ResourceError):
            parse("q^13")
        with pytest.raises(ResourceError):
            parse("(q*p)^7")

    def test_parameter_clash(self):
        with pytest.raises(ValueError):
            parse("q", params=("q",))

    @given(st.integers(0, 2**31))
    def test_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        e = random_observable_polynomial(rng) * c + random_observable_polynomial(rng) * sp.I
        assert parse(str(e)) == e


@given(st.integers(0, 2**31))
@settings(max_examples=25)
def test_algebraic_identities(seed):
    rng = np.random.default_rng(seed)
    a, b, d = (random_observable_polynomial(rng, max_degree=3) for _ in range(3))
    assert (a * b) * d == a * (b * d)
    assert commutator(a, b) == -commutator(b, a)
    jacobi = commutator(a, commutator(b, d)) + commutator(b, commutator(d, a)) + commutator(d, commutator(a, b))
    assert jacobi.is_zero()
    assert (a * b).adjoint() == b.adjoint() * a.adjoint()
    assert normal_order(a) == a


@given(st.integers(0, 2**31))
@settings(max_examples=25)
def test_observable_polynomials_isolate(seed):
    e = random_observable_polynomial(np.random.default_rng(seed))
    assert isolation_check(e).isolating
    assert not e.contains_unobservable()


def test_boost_coupling_is_not_isolating():
    v = isolation_check(boost_coupling())
    assert v.verdict == "non-isolating"
    assert v.witness_x.is_zero()


def test_boost_witness_exact():
    v = isolation_check(boost_coupling())
    assert v.witness_k == commutator(k, boost_coupling())
    assert v.witness_k == q * c * (-sp.I)
    assert isolation_check(observable_coupling()).verdict == "isolating"


class TestHeisenberg:
    def test_boost_equations_match_coupled_oscillators(self):
        rep = eom_compare(full_generator(boost_coupling()), coupled_targets())
        assert rep.generator_self_adjoint
        for name in ("q", "x", "k"):
            assert rep[name].residual.is_zero()
        assert rep["p"].derived == -q + pk * c
        assert rep["p"].unobservable
        assert not rep.correspondence_holds

    def test_observable_equations(self):
        rep = eom_compare(full_generator(observable_coupling()), coupled_targets())
        assert rep["k"].derived == -x
        assert rep["p"].derived == -q - x * c
        assert rep["x"].residual.is_zero()

    def test_non_self_adjoint_warning(self):
        with pytest.warns(NonSelfAdjointWarning):
            heisenberg_rhs(q * p, q)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            heisenberg_rhs(full_generator(), q)

    def test_monomial_helper(self):
        assert monomial("q*p_k") == (1, 0, 0, 0, 0, 1)
        assert monomial("x^2*pk") == (0, 0, 2, 0, 0, 1)
        assert monomial("1") == (0,) * 6


class TestGridOracle:
    @pytest.fixture(scope="class")
    @classmethod
    def oracle(cls):
        return GridOracle(64, 10.0)

    def test_canonical_commutators_on_grid(self, oracle):
        states = [oracle.test_state(np.random.default_rng(s)) for s in range(2)]
        for a, b in ((q, p), (x, px), (k, pk), (q, x), (p, pk)):
            assert commutator_discrepancy(a, b, oracle, states) < 1e-8

    def test_quadratic_pair(self, oracle):
        psi = oracle.test_state(np.random.default_rng(5))
        a = parse("q^2 + p*x")
        b = parse("p^2 - 2*k*p_x")
        assert commutator_discrepancy(a, b, oracle, [psi]) < 1e-7
