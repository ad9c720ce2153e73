"""One quantum degree of freedom: split-step evolution, Husimi densities and
correspondence diagnostics against Liouville evolution."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import fft as sfft

from .errors import ParameterError
from .hilbert import (
    BOUNDARY_TOLERANCE,
    DensityMatrix,
    Grid1D,
    StateVector,
    check_boundary,
    gaussian_state,
    psum,
)
from .koopman import HamiltonianSpec, TrajectoryRecord, _poly
from .splitting import MOMENTUM, POSITION, StrangPropagator, SubGenerator, step_count

COVERAGE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class QuantumHamiltonianSpec:
    """``H_q = T(p) + V(q)`` with ascending polynomial coefficients."""

    kinetic: tuple = (0.0, 0.0, 0.5)
    potential: tuple = (0.0, 0.0, 0.5)

    def __post_init__(self):
        object.__setattr__(self, "kinetic", _poly(self.kinetic))
        object.__setattr__(self, "potential", _poly(self.potential))

    @classmethod
    def harmonic(cls, omega: float = 1.0) -> "QuantumHamiltonianSpec":
        return cls((0.0, 0.0, 0.5), (0.0, 0.0, 0.5 * omega**2))

    @classmethod
    def free(cls) -> "QuantumHamiltonianSpec":
        return cls((0.0, 0.0, 0.5), (0.0,))

    def T(self, p):
        return npoly.polyval(p, self.kinetic)

    def V(self, q):
        return npoly.polyval(q, self.potential)

    def as_classical(self) -> HamiltonianSpec:
        return HamiltonianSpec(self.kinetic, self.potential)


def quantum_generators(H: QuantumHamiltonianSpec, q="q") -> list[SubGenerator]:
    """Potential first, so the split step is V/2, T, V/2."""
    return [
        SubGenerator("V(q)", {q: POSITION}, lambda c: H.V(c[q])),
        SubGenerator("T(p)", {q: MOMENTUM}, lambda c: H.T(c[q])),
    ]


@dataclass
class QuantumRecord:
    times: np.ndarray
    mean_q: np.ndarray
    mean_p: np.ndarray
    second_q: np.ndarray
    second_p: np.ndarray
    norm: np.ndarray
    energy: np.ndarray
    states: list = field(default_factory=list, repr=False)

    @property
    def var_q(self):
        return self.second_q - self.mean_q**2

    @property
    def var_p(self):
        return self.second_p - self.mean_p**2


def evolve_quantum(psi0: StateVector, H: QuantumHamiltonianSpec, T: float, dt: float = 1e-3,
                   save_every: int = 1, *, keep_states: bool = False,
                   guard: float | None = BOUNDARY_TOLERANCE) -> tuple[QuantumRecord, StateVector]:
    if len(psi0.grids) != 1:
        raise ParameterError("quantum state must live on a single grid")
    grid = psi0.grids[0]
    nsteps = step_count(T, dt)
    prop = StrangPropagator(psi0.grids, quantum_generators(H, grid.label), dt)
    q = grid.points
    kappa = grid.frequencies
    rows, states = [], []

    def observe(step, psi):
        t = step * dt
        if guard is not None:
            check_boundary(StateVector(psi0.grids, psi, copy=False), guard, time=t)
        w = np.abs(psi) ** 2 * grid.spacing
        wp = np.abs(sfft.fft(psi, norm="ortho")) ** 2 * grid.spacing
        n2 = psum(w)
        energy = psum(w * H.V(q)) + psum(wp * H.T(kappa))
        rows.append((t, psum(w * q), psum(wp * kappa), psum(w * q**2), psum(wp * kappa**2),
                     math.sqrt(n2), energy))
        if keep_states:
            states.append(StateVector(psi0.grids, psi))

    final = prop.run(psi0.amplitudes, nsteps, save_every, observe)
    cols = np.array(rows).T
    return QuantumRecord(*cols, states=states), StateVector(psi0.grids, final, copy=False)


def coherent_state(grid: Grid1D, q0: float = 0.0, p0: float = 0.0, s: float = 1.0) -> StateVector:
    """Gaussian packet with position variance ``s**2/2`` and momentum ``p0``."""
    return gaussian_state([grid], [q0], [s * s / 2], [p0])


@dataclass
class HusimiDistribution:
    q: np.ndarray
    p: np.ndarray
    values: np.ndarray
    s: float
    warnings: list = field(default_factory=list)

    @property
    def cell(self) -> float:
        return float((self.q[1] - self.q[0]) * (self.p[1] - self.p[0]))

    def total(self) -> float:
        return float(psum(self.values) * self.cell)

    def means(self) -> tuple:
        w = self.values * self.cell
        return float(psum(w * self.q[:, None])), float(psum(w * self.p[None, :]))

    def variances(self) -> tuple:
        w = self.values * self.cell
        mq, mp = self.means()
        return (float(psum(w * (self.q[:, None] - mq) ** 2)),
                float(psum(w * (self.p[None, :] - mp) ** 2)))


def diagnostic_axis(center: float, half_width: float, n: int) -> np.ndarray:
    return center + np.linspace(-half_width, half_width, n)


def _coherent_overlaps(grid: Grid1D, qd: np.ndarray, pd: np.ndarray, s: float) -> tuple:
    x = grid.points
    envelope = (math.pi * s * s) ** -0.25 * np.exp(-((qd[:, None] - x[None, :]) ** 2) / (2 * s * s))
    modulation = np.exp(-1j * pd[:, None] * x[None, :])
    return envelope * grid.spacing, modulation


def husimi(state, grid: Grid1D | None = None, q: np.ndarray | None = None,
           p: np.ndarray | None = None, s: float = 1.0) -> HusimiDistribution:
    """``|<coherent(q, p, s)|psi>|^2 / 2pi`` on the diagnostic ``(q, p)`` lattice.

    ``state`` is a quantum StateVector, or a density matrix given either as an
    ``n x n`` array on ``grid`` or as a DensityMatrix over a basis on ``grid``.
    """
    if not s > 0:
        raise ParameterError("coherent width s must be positive")
    if isinstance(state, StateVector):
        grid = state.grids[0]
        vectors, weights = state.amplitudes[None, :], np.ones(1)
    else:
        if grid is None:
            raise ParameterError("a grid is required for density-matrix input")
        rho = state
        if isinstance(state, DensityMatrix):
            b = np.asarray(state.basis)
            rho = b.T @ state.matrix @ b.conj()
        rho = np.asarray(rho, dtype=complex)
        evals, evecs = np.linalg.eigh(rho)
        keep = evals > 1e-14
        # grid-matrix eigenvectors are unit in l2; rescale to unit continuum norm
        vectors = evecs[:, keep].T / math.sqrt(grid.spacing)
        weights = evals[keep] * grid.spacing
    if q is None:
        q = diagnostic_axis(0.0, 6.0, 97)
    if p is None:
        p = diagnostic_axis(0.0, 6.0, 97)
    env, mod = _coherent_overlaps(grid, np.asarray(q, float), np.asarray(p, float), s)
    values = np.zeros((len(q), len(p)))
    for w, v in zip(weights, vectors):
        values += w * np.abs(env @ (mod * v[None, :]).T) ** 2
    values /= 2 * math.pi
    dist = HusimiDistribution(np.asarray(q, float), np.asarray(p, float), values, s)
    missing = 1.0 - dist.total()
    if abs(missing) > COVERAGE_TOLERANCE:
        msg = f"diagnostic grid misses {missing:.3e} of the Husimi mass"
        dist.warnings.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return dist


def smoothed_liouville(f: np.ndarray, grids: Sequence[Grid1D], q: np.ndarray, p: np.ndarray,
                       s: float = 1.0) -> np.ndarray:
    """Liouville density convolved with the coherent-state kernel, sampled on (q, p)."""
    gx, gk = grids
    vx, vk = s * s / 2, 1.0 / (2 * s * s)
    kx = np.exp(-((q[:, None] - gx.points[None, :]) ** 2) / (2 * vx)) / math.sqrt(2 * math.pi * vx)
    kk = np.exp(-((p[:, None] - gk.points[None, :]) ** 2) / (2 * vk)) / math.sqrt(2 * math.pi * vk)
    return (kx * gx.spacing) @ f @ (kk * gk.spacing).T


@dataclass
class SharpnessReport:
    times: np.ndarray
    rel_q: np.ndarray
    rel_p: np.ndarray
    product: np.ndarray

    @property
    def undefined_q(self):
        return np.isnan(self.rel_q)

    @property
    def undefined_p(self):
        return np.isnan(self.rel_p)


def _ratio(num, den, eps=1e-12):
    out = np.full_like(num, np.nan, dtype=float)
    ok = np.abs(den) > eps
    out[ok] = num[ok] / np.abs(den[ok])
    return out


def sharpness_report(record: QuantumRecord) -> SharpnessReport:
    dq = np.sqrt(np.clip(record.var_q, 0, None))
    dp = np.sqrt(np.clip(record.var_p, 0, None))
    return SharpnessReport(record.times, _ratio(dq, record.mean_q), _ratio(dp, record.mean_p), dq * dp)


@dataclass
class DeviationReport:
    times: np.ndarray
    residuals: dict
    definitions: dict

    def max(self, name: str) -> float:
        return float(np.nanmax(np.abs(self.residuals[name])))

    def summary(self) -> dict:
        return {name: self.max(name) for name in self.residuals}


def correspondence_compare(quantum: QuantumRecord, classical: TrajectoryRecord, s: float = 1.0,
                           q: np.ndarray | None = None, p: np.ndarray | None = None) -> DeviationReport:
    """Mean deviations, plus Husimi versus smoothed-Liouville L1 distance when
    both records kept their states."""
    tq, tc = np.asarray(quantum.times), np.asarray(classical.times)
    if tq.shape != tc.shape or np.max(np.abs(tq - tc), initial=0.0) > 1e-12:
        raise ParameterError("quantum and classical time stamps differ")
    res = {"mean_q": np.abs(quantum.mean_q - classical.mean_x),
           "mean_p": np.abs(quantum.mean_p - classical.mean_k)}
    defs = {"mean_q": "|<q>_quantum - <x>_classical|", "mean_p": "|<p>_quantum - <k>_classical|"}
    if quantum.states and classical.states:
        if len(quantum.states) != len(tq) or len(classical.states) != len(tc):
            raise ParameterError("state histories must match the saved times")
        q = diagnostic_axis(0.0, 6.0, 97) if q is None else np.asarray(q, float)
        p = diagnostic_axis(0.0, 6.0, 97) if p is None else np.asarray(p, float)
        cell = (q[1] - q[0]) * (p[1] - p[0])
        l1 = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for psi, phi in zip(quantum.states, classical.states):
                hq = husimi(psi, q=q, p=p, s=s).values
                hc = smoothed_liouville(phi.density(), phi.grids, q, p, s)
                l1.append(psum(np.abs(hq - hc)) * cell)
        res["husimi_l1"] = np.array(l1)
        defs["husimi_l1"] = "integral |Husimi - Liouville * coherent kernel| dq dp"
    return DeviationReport(tq, res, defs)
