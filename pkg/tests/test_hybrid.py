import numpy as np
import pytest
from scipy.linalg import expm

from kvnlab.algebra import OperatorExpr, observable_coupling, parse
from kvnlab.errors import ConfigurationError, ParameterError
from kvnlab.hilbert import Grid1D
from kvnlab.hybrid import (
    HybridGenerator,
    InteractionTerm,
    classical_reference,
    coupled_matrix,
    energy_rates_check,
    eom_deviation,
    evolve_hybrid,
    hybrid_grids,
    product_state,
    symbolic_numeric_check,
)
from kvnlab.koopman import gaussian_classical
from kvnlab.quantum import coherent_state

MEANS = (2.0, 0.0, -1.0, 0.0)


def initial_state(n=32, half=8.0):
    grids = hybrid_grids(n, q=(-10.0, 10.0), x=(-half, half), k=(-half, half))
    return product_state(coherent_state(grids[0], 2.0), gaussian_classical(grids[1:], (-1.0, 0.0), (0.5, 0.5)))


@pytest.fixture(scope="module")
def observable_run():
    K = HybridGenerator(interactions=(InteractionTerm.observable(0.2),))
    return evolve_hybrid(initial_state(), K, 1.0, 2e-3, 5, observables=["q*x"])


class TestInteractionTerm:
    def test_canonical_terms(self):
        assert InteractionTerm.boost(0.2).as_expr() == parse("-0.2*q*p_k")
        assert InteractionTerm.observable(0.2).as_expr() == parse("0.2*q*x")
        assert not InteractionTerm.boost(0.2).observable_only

    def test_rejects_conjugate_pair(self):
        with pytest.raises(ConfigurationError):
            InteractionTerm(1.0, (0, 0, 1, 0, 1, 0))

    def test_rejects_bad_coefficients(self):
        with pytest.raises(ConfigurationError):
            InteractionTerm(float("nan"), (1, 0, 1, 0, 0, 0))
        with pytest.raises(ConfigurationError):
            InteractionTerm.from_expr(parse("i*q*x"))
        with pytest.raises(ConfigurationError):
            InteractionTerm.from_expr(observable_coupling())

    def test_from_expr(self):
        (t,) = InteractionTerm.from_expr(parse("3/4*q*x"))
        assert t.coefficient == 0.75 and t.exponents == (1, 0, 1, 0, 0, 0)

    def test_generator_expression(self):
        K = HybridGenerator(interactions=(InteractionTerm.boost(0.5),))
        assert K.as_expr() == parse("(q^2 + p^2)/2 + k*p_x - x*p_k - 0.5*q*p_k")


@pytest.mark.parametrize("c, key", [(0.2, "coupled_flow_c0.2"), (0.7, "coupled_flow_c0.7")])
def test_classical_reference_matches_exact_flow(frozen, c, key):
    start = MEANS if c == 0.2 else (1.0, 0.5, 0.0, -1.0)
    flow = frozen[key]
    T = max(float(t) for t in flow)
    ref = classical_reference(c, start, T, 1e-2, 1, substeps=4)
    for t, expected in flow.items():
        i = int(round(float(t) / 1e-2))
        got = [ref.q[i], ref.p[i], ref.x[i], ref.k[i]]
        np.testing.assert_allclose(got, expected, atol=1e-10)


def test_classical_reference_energy_conserved():
    ref = classical_reference(0.3, MEANS, 10.0, 1e-2, 10)
    assert np.max(np.abs(ref.energy - ref.energy[0])) < 1e-10


def test_unstable_coupling_warns():
    with pytest.warns(RuntimeWarning):
        classical_reference(1.5, MEANS, 0.1, 1e-2)


class TestObservableRun:
    def test_norm_and_ordering(self, observable_run):
        assert np.max(np.abs(observable_run.trajectory.norm - 1)) < 1e-10
        assert len(observable_run.ordering) == 3
        assert observable_run.ordering[0] == observable_run.ordering[-1]

    def test_classical_sector_is_isolated(self, observable_run):
        traj = observable_run.trajectory
        t = traj.times
        assert np.max(np.abs(traj.mean("x") + np.cos(t))) < 1e-5
        assert np.max(np.abs(traj.mean("k") - np.sin(t))) < 1e-5

    def test_quantum_means_are_driven(self, observable_run):
        # q'' + q = -c x(t) with x free; the classical row of A ignores q
        A = coupled_matrix(0.2)
        A[3, 0] = 0.0
        traj = observable_run.trajectory
        for i in (10, 50, 100):
            z = expm(A * traj.times[i]) @ np.array(MEANS)
            assert traj.mean("q")[i] == pytest.approx(z[0], abs=1e-5)
            assert traj.mean("p")[i] == pytest.approx(z[1], abs=1e-5)

    def test_equation_residuals(self, observable_run):
        ref = classical_reference(0.2, MEANS, 1.0, 2e-3, 5)
        dev = eom_deviation(observable_run.trajectory, ref, 0.2)
        for name in ("q", "p", "x"):
            assert np.nanmax(np.abs(dev.residuals[name])) < 1e-4
        # the missing back-action shows up in k only
        q = observable_run.trajectory.mean("q")
        np.testing.assert_allclose(dev.residuals["k"][2:-2], 0.2 * q[2:-2], atol=1e-4)

    def test_symbolic_numeric_agreement(self, observable_run):
        K = observable_run.generator.as_expr()
        out = symbolic_numeric_check(observable_run.trajectory, K)
        for name in ("x", "k", "q", "p"):
            assert out[name]["max"] < 1e-4
            assert out[name]["imag"] < 1e-12

    def test_energy_rates(self, observable_run):
        rep = energy_rates_check(observable_run.trajectory, 0.2, "observable")
        assert rep.max_residual_c < 1e-4
        assert rep.max_residual_q < 1e-4

    def test_unsupported_kind(self, observable_run):
        with pytest.raises(ParameterError):
            energy_rates_check(observable_run.trajectory, 0.2, "other")

    def test_reference_time_mismatch(self, observable_run):
        ref = classical_reference(0.2, MEANS, 1.0, 2e-3, 10)
        with pytest.raises(ParameterError):
            eom_deviation(observable_run.trajectory, ref, 0.2)


def test_boost_back_action_breaks_quantum_correspondence():
    K = HybridGenerator(interactions=(InteractionTerm.boost(0.2),))
    run = evolve_hybrid(initial_state((64, 32, 32)), K, 1.0, 2e-3, 5)
    traj = run.trajectory
    rep = energy_rates_check(traj, 0.2, "boost")
    assert rep.max_residual < 1e-4
    # the classical means obey the coupled equations, the quantum momentum does not
    ref = classical_reference(0.2, MEANS, 1.0, 2e-3, 5)
    dev = eom_deviation(traj, ref, 0.2)
    for name in ("x", "k", "q"):
        assert np.nanmax(np.abs(dev.residuals[name])) < 1e-4
    assert np.nanmax(np.abs(dev.residuals["p"])) > 1e-2


def test_uncoupled_energy_conserved():
    run = evolve_hybrid(initial_state(), HybridGenerator(), 0.5, 2e-3, 5)
    drift = run.ledger.drift()
    assert np.max(np.abs(drift)) < 1e-5
    assert np.max(np.abs(run.trajectory.energy_q - 2.5)) < 1e-5


def test_rejects_wrong_axes():
    g = Grid1D.centered(8, 1.0, "a")
    from kvnlab.hilbert import StateVector

    s = StateVector((g, Grid1D.centered(8, 1.0, "b"), Grid1D.centered(8, 1.0, "c")), np.ones((8, 8, 8)))
    with pytest.raises(ParameterError):
        evolve_hybrid(s, HybridGenerator(), 0.1, 1e-2)


def test_expectation_of_unrecorded_monomial(observable_run):
    with pytest.raises(ParameterError):
        observable_run.trajectory.evaluate(OperatorExpr.generator("q") ** 5)
