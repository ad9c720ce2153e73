import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kvnlab.errors import BoundaryGuardError, DomainError, ParameterError, SelfAdjointnessError, ShapeError
from kvnlab.hilbert import (
    Coordinate,
    Derivative,
    DensityMatrix,
    Grid1D,
    Product,
    StateVector,
    apply_operator,
    axis_transform,
    boundary_mass,
    check_boundary,
    classical_marginal,
    exp_operator,
    expectation,
    fourier_density,
    gaussian_state,
    gram_schmidt,
    harmonic_basis,
    inner_product,
    marginal,
    momentum,
    partial_trace_quantum,
    position,
    tensor_product,
)


def packet(n=128, half=10.0, center=0.5, variance=0.7, p=0.3, label="q"):
    return gaussian_state([Grid1D.centered(n, half, label)], [center], [variance], [p])


class TestGrid:
    def test_points_and_spacing(self):
        g = Grid1D.centered(8, 2.0)
        assert g.spacing == 0.5
        np.testing.assert_allclose(g.points, [-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5])

    def test_frequencies_are_fft_ordered(self):
        g = Grid1D.centered(8, math.pi)
        np.testing.assert_allclose(g.frequencies, np.fft.fftfreq(8, g.spacing) * 2 * np.pi)

    @pytest.mark.parametrize("n", [0, 1, 3, 12, 100])
    def test_rejects_non_power_of_two(self, n):
        with pytest.raises(ParameterError):
            Grid1D(n, 0.0, 1.0)

    def test_rejects_bad_length(self):
        with pytest.raises(ParameterError):
            Grid1D(8, 0.0, -1.0)

    def test_points_read_only(self):
        with pytest.raises(ValueError):
            Grid1D.centered(8, 1.0).points[0] = 3.0


class TestStateVector:
    def test_immutable(self):
        s = packet()
        with pytest.raises(AttributeError):
            s.grids = ()
        with pytest.raises(ValueError):
            s.amplitudes[0] = 1

    def test_copy_isolates_input(self):
        g = Grid1D.centered(8, 1.0)
        a = np.ones(8, dtype=complex)
        s = StateVector(g, a)
        a[0] = 5
        assert s.amplitudes[0] == 1

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            StateVector(Grid1D.centered(8, 1.0), np.ones(7))

    def test_duplicate_labels(self):
        g = Grid1D.centered(8, 1.0, "x")
        with pytest.raises(ShapeError):
            StateVector((g, g), np.ones((8, 8)))

    def test_non_finite(self):
        a = np.ones(8)
        a[3] = np.nan
        with pytest.raises(DomainError):
            StateVector(Grid1D.centered(8, 1.0), a)

    def test_gaussian_moments(self):
        s = packet(256, 12.0, 0.5, 0.7, 0.3)
        assert s.norm() == pytest.approx(1.0, abs=1e-12)
        assert expectation(position("q"), s) == pytest.approx(0.5, abs=1e-12)
        assert expectation(momentum("q"), s) == pytest.approx(0.3, abs=1e-12)
        q2 = expectation(Coordinate("q", (0, 0, 1)), s)
        assert q2 - 0.25 == pytest.approx(0.7, abs=1e-12)


class TestOperators:
    def test_derivative_of_plane_wave(self):
        g = Grid1D.centered(64, math.pi)
        s = StateVector(g, np.exp(3j * g.points))
        out = apply_operator(momentum("q"), StateVector(Grid1D.centered(64, math.pi, "q"), s.amplitudes))
        np.testing.assert_allclose(out.amplitudes, 3 * s.amplitudes, atol=1e-12)

    def test_product_requires_distinct_axes(self):
        with pytest.raises(ParameterError):
            Product(Coordinate("x"), Derivative("x"))

    @given(st.floats(-2, 2), st.floats(-1.5, 1.5))
    def test_exp_of_momentum_translates(self, shift, p0):
        s = packet(128, 12.0, 0.0, 0.5, p0)
        moved = exp_operator(momentum("q"), s, shift)
        assert moved.norm() == pytest.approx(1.0, abs=1e-12)
        assert expectation(position("q"), moved) == pytest.approx(shift, abs=1e-9)

    def test_expectation_rejects_non_hermitian(self):
        s = packet()
        with pytest.raises(SelfAdjointnessError):
            expectation(Coordinate("q", (1j,)), s)

    def test_inner_product_grid_mismatch(self):
        with pytest.raises(ShapeError):
            inner_product(packet(64), packet(128))


class TestFourier:
    @given(st.floats(-2, 2), st.floats(0.3, 2.0), st.floats(-2, 2))
    def test_parseval(self, c, v, p):
        s = packet(128, 12.0, c, v, p)
        w, coords = fourier_density(s, ["q"])
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert (w * coords["p"]).sum() == pytest.approx(p, abs=1e-9)

    def test_axis_transform_is_unitary(self):
        s = packet(128, 10.0)
        t = axis_transform(s, "q")
        assert t.norm() == pytest.approx(1.0, abs=1e-12)
        mean_p = (np.abs(t.amplitudes) ** 2 * t.grids[0].points).sum() * t.cell_volume
        assert mean_p == pytest.approx(0.3, abs=1e-9)


class TestComposite:
    def test_tensor_and_marginals(self):
        q = packet(32, 8.0, label="q")
        c = gaussian_state([Grid1D.centered(16, 6.0, "x"), Grid1D.centered(16, 6.0, "k")], [1, 0], [0.5, 0.5])
        h = tensor_product(q, c)
        assert h.labels == ("q", "x", "k")
        f = classical_marginal(h)
        np.testing.assert_allclose(f, c.density(), atol=1e-14)
        assert marginal(h, ("k", "x")).shape == (16, 16)

    def test_partial_trace_of_product(self):
        gq = Grid1D.centered(64, 8.0, "q")
        basis = harmonic_basis(gq, 3)
        psi_q = StateVector(gq, (0.6 * basis[0] + 0.8j * basis[1]))
        c = gaussian_state([Grid1D.centered(16, 6.0, "x")], [0.0], [0.5])
        rho = partial_trace_quantum(tensor_product(psi_q, c), basis, 2)
        np.testing.assert_allclose(rho.matrix, [[0.36, -0.48j], [0.48j, 0.64]], atol=1e-12)
        assert rho.purity == pytest.approx(1.0, abs=1e-12)
        rho.validate(unit_trace=True)

    def test_partial_trace_truncation_too_large(self):
        gq = Grid1D.centered(32, 8.0, "q")
        h = tensor_product(packet(32, 8.0), gaussian_state([Grid1D.centered(8, 4.0, "x")], [0], [0.5]))
        with pytest.raises(ParameterError):
            partial_trace_quantum(h, harmonic_basis(gq, 2), 3)

    def test_density_matrix_validation(self):
        with pytest.raises(DomainError):
            DensityMatrix(np.array([[1.0, 0.0], [0.0, -0.5]])).validate()
        with pytest.raises(DomainError):
            DensityMatrix(np.array([[0.5, 1.0], [0.0, 0.5]])).validate()


class TestBases:
    @given(st.integers(1, 8))
    def test_harmonic_basis_orthonormal(self, dim):
        g = Grid1D.centered(128, 10.0, "q")
        b = harmonic_basis(g, dim)
        np.testing.assert_allclose(b.conj() @ b.T * g.spacing, np.eye(dim), atol=1e-12)

    def test_gram_schmidt_dependent(self):
        v = np.array([[1.0, 0, 0], [2.0, 0, 0]])
        with pytest.raises(DomainError):
            gram_schmidt(v, 1.0)


class TestBoundary:
    def test_guard(self):
        centred = packet(64, 10.0, 0.0, 0.5)
        assert boundary_mass(centred)["q"] < 1e-20
        check_boundary(centred)
        edge = packet(64, 10.0, 9.0, 0.5)
        with pytest.raises(BoundaryGuardError) as err:
            check_boundary(edge, time=1.5)
        assert err.value.axis == "q" and err.value.time == 1.5
