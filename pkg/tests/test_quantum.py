import math
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kvnlab.errors import ParameterError
from kvnlab.hilbert import DensityMatrix, Grid1D, harmonic_basis
from kvnlab.koopman import HamiltonianSpec, classical_grids, evolve_classical, gaussian_classical
from kvnlab.quantum import (
    QuantumHamiltonianSpec,
    coherent_state,
    correspondence_compare,
    evolve_quantum,
    husimi,
    sharpness_report,
    smoothed_liouville,
)


def test_coherent_state_moments():
    g = Grid1D.centered(256, 10.0, "q")
    rec, _ = evolve_quantum(coherent_state(g, 1.5, -0.5, 1.3), QuantumHamiltonianSpec.free(), 0.0, 1e-3)
    assert rec.mean_q[0] == pytest.approx(1.5, abs=1e-12)
    assert rec.mean_p[0] == pytest.approx(-0.5, abs=1e-12)
    assert rec.var_q[0] == pytest.approx(1.3**2 / 2, abs=1e-12)
    assert rec.var_p[0] == pytest.approx(1 / (2 * 1.3**2), abs=1e-12)


def test_harmonic_coherent_state_follows_classical_orbit():
    g = Grid1D.centered(256, 10.0, "q")
    rec, _ = evolve_quantum(coherent_state(g, 2.0), QuantumHamiltonianSpec.harmonic(), 3.0, 1e-3, 10)
    assert np.max(np.abs(rec.mean_q - 2 * np.cos(rec.times))) < 1e-6
    assert np.max(np.abs(rec.norm - 1)) < 1e-10
    assert np.max(np.abs(rec.energy - rec.energy[0])) < 1e-6


@given(st.floats(0.5, 2.0))
def test_free_spreading_law(s):
    g = Grid1D.centered(512, 40.0, "q")
    rec, _ = evolve_quantum(coherent_state(g, 0.0, 0.0, s), QuantumHamiltonianSpec.free(), 4.0, 1e-2, 50)
    expected = s * s / 2 + rec.times**2 / (2 * s * s)
    assert np.max(np.abs(rec.var_q - expected)) < 1e-9


def test_ground_state_husimi(frozen):
    g = Grid1D.centered(128, 10.0, "q")
    hus = husimi(coherent_state(g))
    assert hus.warnings == []
    assert hus.total() == pytest.approx(1.0, abs=1e-6)
    vq, vp = hus.variances()
    assert vq == pytest.approx(1.0, abs=1e-6) and vp == pytest.approx(1.0, abs=1e-6)
    with pytest.warns(RuntimeWarning):
        point = husimi(coherent_state(g), q=np.array([0.0, 1.0]), p=np.array([0.0, 1.0]))
    assert point.values[0, 0] == pytest.approx(frozen["husimi_ground"]["Q00"], abs=1e-12)
    assert point.values[1, 1] == pytest.approx(frozen["husimi_ground"]["Q11"], abs=1e-12)


def test_husimi_density_matrix_paths_agree():
    g = Grid1D.centered(128, 10.0, "q")
    basis = harmonic_basis(g, 3)
    rho = np.diag([0.5, 0.3, 0.2]).astype(complex)
    a = husimi(DensityMatrix(rho, basis), grid=g)
    b = husimi(basis.T @ rho @ basis.conj(), grid=g)
    np.testing.assert_allclose(a.values, b.values, atol=1e-14)
    assert a.total() == pytest.approx(1.0, abs=1e-6)


def test_husimi_coverage_warning():
    g = Grid1D.centered(128, 10.0, "q")
    with pytest.warns(RuntimeWarning):
        hus = husimi(coherent_state(g, 4.0), q=np.linspace(-2, 2, 21), p=np.linspace(-2, 2, 21))
    assert hus.warnings


def test_husimi_parameter_errors():
    g = Grid1D.centered(32, 5.0, "q")
    with pytest.raises(ParameterError):
        husimi(coherent_state(g), s=0.0)
    with pytest.raises(ParameterError):
        husimi(np.eye(32))


def test_smoothed_liouville_variances():
    g = classical_grids(128, 8.0)
    psi = gaussian_classical(g, (0.5, -0.5), (0.3, 0.7))
    q = np.linspace(-8, 8, 161)
    vals = smoothed_liouville(psi.density(), g, q, q)
    cell = (q[1] - q[0]) ** 2
    w = vals * cell
    mq = (w * q[:, None]).sum()
    assert w.sum() == pytest.approx(1.0, abs=1e-8)
    assert mq == pytest.approx(0.5, abs=1e-8)
    assert (w * (q[:, None] - mq) ** 2).sum() == pytest.approx(0.3 + 0.5, abs=1e-6)


def test_harmonic_correspondence_is_exact_for_matched_gaussians():
    gq = Grid1D.centered(128, 10.0, "q")
    gc = classical_grids(128, 10.0)
    qrec, _ = evolve_quantum(coherent_state(gq, 1.5), QuantumHamiltonianSpec.harmonic(), 1.0, 1e-2, 25,
                             keep_states=True)
    crec, _ = evolve_classical(gaussian_classical(gc, (1.5, 0.0), (0.5, 0.5)), HamiltonianSpec.harmonic(),
                               1.0, 1e-2, 25, keep_states=True)
    rep = correspondence_compare(qrec, crec)
    assert rep.max("mean_q") < 1e-10
    assert rep.max("mean_p") < 1e-10
    assert rep.max("husimi_l1") < 1e-8


def test_correspondence_time_mismatch():
    gq = Grid1D.centered(64, 8.0, "q")
    gc = classical_grids(64, 8.0)
    qrec, _ = evolve_quantum(coherent_state(gq), QuantumHamiltonianSpec.harmonic(), 0.1, 1e-2, 1)
    crec, _ = evolve_classical(gaussian_classical(gc), HamiltonianSpec.harmonic(), 0.2, 1e-2, 1)
    with pytest.raises(ParameterError):
        correspondence_compare(qrec, crec)


def test_sharpness_report_marks_undefined_ratios():
    g = Grid1D.centered(128, 10.0, "q")
    rec, _ = evolve_quantum(coherent_state(g, 0.0), QuantumHamiltonianSpec.harmonic(), 0.1, 1e-2, 5)
    rep = sharpness_report(rec)
    assert np.all(rep.undefined_q)
    assert rep.product[0] == pytest.approx(0.5, abs=1e-10)
    assert math.isnan(rep.rel_p[0])
