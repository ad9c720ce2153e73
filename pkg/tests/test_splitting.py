import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kvnlab.errors import ConfigurationError, ParameterError
from kvnlab.hilbert import Grid1D, gaussian_state
from kvnlab.splitting import MOMENTUM, POSITION, StrangPropagator, SubGenerator, plan_stages, step_count


def gen(name, rep, fn=lambda c: 0.0):
    return SubGenerator(name, rep, fn)


def test_compatible_generators_share_a_stage():
    a = gen("a", {"x": POSITION})
    b = gen("b", {"k": POSITION})
    c = gen("c", {"x": MOMENTUM})
    assert plan_stages([a, b, c]) == [[0, 1], [2]]
    assert plan_stages([]) == []


def test_kick_drift_needs_two_stages():
    kick = gen("kick", {"x": POSITION, "k": MOMENTUM})
    drift = gen("drift", {"x": MOMENTUM, "k": POSITION})
    V = gen("V", {"q": POSITION})
    T = gen("T", {"q": MOMENTUM})
    stages = plan_stages([V, kick, T, drift])
    assert len(stages) == 2
    assert stages[0] == [0, 1]


def test_ordering_is_symmetric():
    grids = [Grid1D.centered(8, 1.0, "q")]
    prop = StrangPropagator(grids, [gen("V", {"q": POSITION}), gen("T", {"q": MOMENTUM})], 0.1)
    assert prop.ordering() == ["[V](dt/2)", "[T](dt)", "[V](dt/2)"]


def test_unknown_axis_rejected():
    with pytest.raises(ConfigurationError):
        StrangPropagator([Grid1D.centered(8, 1.0, "q")], [gen("V", {"z": POSITION})], 0.1)


def test_bad_representation_rejected():
    with pytest.raises(ConfigurationError):
        StrangPropagator([Grid1D.centered(8, 1.0, "q")], [gen("V", {"q": "diagonal"})], 0.1)


def test_step_count():
    assert step_count(10.0, 1e-3) == 10000
    with pytest.raises(ParameterError):
        step_count(1.0, 0.3)
    with pytest.raises(ParameterError):
        step_count(1.0, 0.0)


@given(st.floats(0.01, 0.2), st.integers(1, 40), st.integers(1, 7))
def test_norm_conserved(dt, nsteps, save_every):
    g = Grid1D.centered(64, 8.0, "q")
    psi = gaussian_state([g], [1.0], [0.5])
    prop = StrangPropagator([g], [gen("V", {"q": POSITION}, lambda c: c["q"] ** 4 / 4),
                                  gen("T", {"q": MOMENTUM}, lambda c: c["q"] ** 2 / 2)], dt)
    seen = []
    final = prop.run(psi.amplitudes, nsteps, save_every, lambda s, a: seen.append((s, np.sum(np.abs(a) ** 2))))
    assert seen[0][0] == 0
    assert [s for s, _ in seen] == list(range(0, nsteps + 1, save_every))
    norm0 = seen[0][1]
    for _, n in seen:
        assert n == pytest.approx(norm0, rel=1e-12)
    assert np.sum(np.abs(final) ** 2) == pytest.approx(norm0, rel=1e-12)


def test_observation_does_not_change_result():
    g = Grid1D.centered(64, 8.0, "q")
    psi = gaussian_state([g], [1.0], [0.5])
    gens = [gen("V", {"q": POSITION}, lambda c: c["q"] ** 2 / 2), gen("T", {"q": MOMENTUM}, lambda c: c["q"] ** 2 / 2)]
    a = StrangPropagator([g], gens, 0.05).run(psi.amplitudes, 20, 1, lambda s, x: None)
    b = StrangPropagator([g], gens, 0.05).run(psi.amplitudes, 20, 20, lambda s, x: None)
    np.testing.assert_allclose(a, b, atol=1e-13)


def test_second_order_convergence():
    # anharmonic oscillator; error against a fine-step reference shrinks ~dt^2
    g = Grid1D.centered(128, 8.0, "q")
    psi = gaussian_state([g], [1.0], [0.5])
    gens = [gen("V", {"q": POSITION}, lambda c: c["q"] ** 4 / 4), gen("T", {"q": MOMENTUM}, lambda c: c["q"] ** 2 / 2)]

    def final(dt):
        return StrangPropagator([g], gens, dt).run(psi.amplitudes, int(round(1.0 / dt)), 10**6, lambda s, x: None)

    ref = final(1e-4)
    e1 = np.max(np.abs(final(0.02) - ref))
    e2 = np.max(np.abs(final(0.01) - ref))
    assert np.log2(e1 / e2) > 1.8
