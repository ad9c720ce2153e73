import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kvnlab.errors import BoundaryGuardError, DomainError, ParameterError
from kvnlab.hilbert import Grid1D, StateVector
from kvnlab.koopman import (
    HamiltonianSpec,
    apply_liouvillian,
    central_difference,
    classical_grids,
    evolve_classical,
    from_density,
    gaussian_classical,
    hamilton_check,
    phase_field,
)


def small_grids(n=64, half=8.0):
    return classical_grids(n, half)


class TestHamiltonianSpec:
    def test_derivatives(self):
        H = HamiltonianSpec.quartic()
        assert H.dV(2.0) == pytest.approx(8.0)
        assert H.dT(3.0) == pytest.approx(3.0)
        assert H.energy(2.0, 1.0) == pytest.approx(4.5)

    def test_rejects_high_degree(self):
        with pytest.raises(ParameterError):
            HamiltonianSpec((0, 0, 0.5), (0, 0, 0, 0, 0, 1.0))

    def test_rejects_non_finite(self):
        with pytest.raises(ParameterError):
            HamiltonianSpec((0, 0, np.inf), (0,))


class TestFromDensity:
    def test_normalizes(self):
        g = small_grids(16, 4.0)
        psi = from_density(np.ones((16, 16)) * 3.0, g)
        assert psi.norm() == pytest.approx(1.0)
        assert np.all(psi.amplitudes.imag == 0)

    def test_negative_density(self):
        g = small_grids(16, 4.0)
        f = np.ones((16, 16))
        f[2, 2] = -0.1
        with pytest.raises(DomainError):
            from_density(f, g)

    def test_zero_density(self):
        with pytest.raises(DomainError):
            from_density(np.zeros((16, 16)), small_grids(16, 4.0))


class TestDynamics:
    def test_free_particle_drift(self):
        g = classical_grids(256, 32.0, 128, 8.0)
        psi = gaussian_classical(g, (-1.0, 0.8), (0.5, 0.3))
        rec, _ = evolve_classical(psi, HamiltonianSpec.free(), 5.0, 1e-2, 10)
        assert np.max(np.abs(rec.mean_x - (-1.0 + 0.8 * rec.times))) < 1e-8
        assert np.max(np.abs(rec.mean_k - 0.8)) < 1e-10
        assert np.max(np.abs(rec.var_x - (0.5 + 0.3 * rec.times**2))) < 1e-8

    def test_harmonic_rotation_and_norm(self):
        g = small_grids(128)
        psi = gaussian_classical(g, (1.0, 0.5), (0.5, 0.5))
        rec, final = evolve_classical(psi, HamiltonianSpec.harmonic(), 2.0, 1e-3, 20)
        t = rec.times
        assert np.max(np.abs(rec.mean_x - (np.cos(t) + 0.5 * np.sin(t)))) < 1e-6
        assert np.max(np.abs(rec.norm - 1)) < 1e-10
        assert final.norm() == pytest.approx(1.0, abs=1e-12)

    def test_density_stays_nonnegative_and_normalized(self):
        g = small_grids(64)
        psi = gaussian_classical(g, (1.0, 0.0), (0.4, 0.4))
        _, final = evolve_classical(psi, HamiltonianSpec.harmonic(), 1.0, 1e-2, 100)
        f = final.density()
        assert f.min() >= 0
        assert f.sum() * final.cell_volume == pytest.approx(1.0, abs=1e-9)

    def test_rejects_wrong_axes(self):
        s = StateVector((Grid1D.centered(8, 1.0, "q"), Grid1D.centered(8, 1.0, "p")), np.ones((8, 8)))
        with pytest.raises(ParameterError):
            evolve_classical(s, HamiltonianSpec.harmonic(), 0.1, 0.01)

    def test_boundary_guard_fires(self):
        g = small_grids(64, 4.0)
        psi = gaussian_classical(g, (0.0, 2.5), (0.3, 0.3))
        with pytest.raises(BoundaryGuardError):
            evolve_classical(psi, HamiltonianSpec.free(), 3.0, 1e-2, 5)

    def test_liouvillian_on_stationary_density_vanishes(self):
        # any function of H is stationary
        g = small_grids(128, 10.0)
        x = g[0].points[:, None]
        k = g[1].points[None, :]
        psi = from_density(np.exp(-(x**2 + k**2) / 2.0), g)
        out = apply_liouvillian(HamiltonianSpec.harmonic(), psi)
        assert np.max(np.abs(out.amplitudes)) < 1e-10


class TestHamiltonCheck:
    def test_quartic_residuals(self):
        g = classical_grids(128, 6.0, 128, 16.0)
        psi = gaussian_classical(g, (1.0, 0.0), (0.25, 0.25))
        rec, _ = evolve_classical(psi, HamiltonianSpec.quartic(), 1.0, 1e-3, 2)
        assert hamilton_check(rec).worst < 1e-4

    def test_states_path_agrees(self):
        g = small_grids(64)
        psi = gaussian_classical(g, (1.0, 0.0), (0.5, 0.5))
        H = HamiltonianSpec.harmonic()
        rec, _ = evolve_classical(psi, H, 0.1, 1e-2, 1, keep_states=True)
        a = hamilton_check(rec)
        b = hamilton_check(rec, H, rec.states)
        assert a.worst == pytest.approx(b.worst, abs=1e-14)

    def test_too_few_points(self):
        g = small_grids(32)
        rec, _ = evolve_classical(gaussian_classical(g), HamiltonianSpec.harmonic(), 0.01, 1e-2, 1)
        with pytest.raises(ParameterError):
            hamilton_check(rec)


class TestCentralDifference:
    @given(st.floats(0.1, 3.0))
    def test_orders(self, w):
        h = 0.01
        t = np.arange(0, 2, h)
        d2 = central_difference(np.sin(w * t), h, 2)
        d4 = central_difference(np.sin(w * t), h, 4)
        exact = w * np.cos(w * t)
        assert np.isnan(d2[0]) and np.isnan(d4[1])
        assert np.nanmax(np.abs(d2 - exact)) < w**3 * h**2 / 5 + 1e-12
        assert np.nanmax(np.abs(d4 - exact)) < w**5 * h**4 / 20 + 1e-12

    def test_bad_order(self):
        with pytest.raises(ParameterError):
            central_difference([1, 2, 3], 1.0, 3)


@given(st.integers(0, 2**31))
def test_phase_field_is_invisible_to_density(seed):
    g = small_grids(32, 6.0)
    psi = gaussian_classical(g)
    phi = phase_field(g, np.random.default_rng(seed))
    dressed = psi.with_amplitudes(psi.amplitudes * np.exp(1j * phi))
    np.testing.assert_allclose(dressed.density(), psi.density(), rtol=1e-13, atol=1e-300)
