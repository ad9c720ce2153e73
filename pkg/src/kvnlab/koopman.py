"""Koopman-von Neumann mechanics of one classical degree of freedom.

The classical wave function lives on an ``(x, k)`` grid and evolves under
the Liouvillian ``L = H_k p_x - H_x p_k`` where ``p_x = -i d/dx`` and
``p_k = -i d/dk``.  For separable ``H = T(k) + V(x)`` both terms are
shears (translations along x at fixed k, and along k at fixed x), which the
split-step propagator applies exactly in Fourier space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DomainError, ParameterError
from .hilbert import (
    BOUNDARY_TOLERANCE,
    Derivative,
    Grid1D,
    StateVector,
    apply_operator,
    check_boundary,
    gaussian_state,
    psum,
)
from .splitting import MOMENTUM, POSITION, StrangPropagator, SubGenerator, step_count

MAX_DEGREE = 4


def _poly(coefficients) -> tuple:
    coeffs = tuple(float(c) for c in coefficients)
    if len(coeffs) > MAX_DEGREE + 1:
        raise ParameterError(f"polynomial degree exceeds {MAX_DEGREE}")
    if not all(math.isfinite(c) for c in coeffs):
        raise ParameterError("polynomial coefficients must be finite")
    return coeffs or (0.0,)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Separable ``H = T(k) + V(x)``; coefficients are in ascending powers."""

    kinetic: tuple = (0.0, 0.0, 0.5)
    potential: tuple = (0.0, 0.0, 0.5)

    def __post_init__(self):
        object.__setattr__(self, "kinetic", _poly(self.kinetic))
        object.__setattr__(self, "potential", _poly(self.potential))

    @classmethod
    def harmonic(cls, omega: float = 1.0) -> "HamiltonianSpec":
        return cls((0.0, 0.0, 0.5), (0.0, 0.0, 0.5 * omega**2))

    @classmethod
    def free(cls) -> "HamiltonianSpec":
        return cls((0.0, 0.0, 0.5), (0.0,))

    @classmethod
    def quartic(cls) -> "HamiltonianSpec":
        return cls((0.0, 0.0, 0.5), (0.0, 0.0, 0.0, 0.0, 0.25))

    def T(self, k):
        return npoly.polyval(k, self.kinetic)

    def V(self, x):
        return npoly.polyval(x, self.potential)

    def dT(self, k):
        return npoly.polyval(k, npoly.polyder(self.kinetic))

    def dV(self, x):
        return npoly.polyval(x, npoly.polyder(self.potential))

    def energy(self, x, k):
        return self.T(k) + self.V(x)


def from_density(f, grids: Sequence[Grid1D]) -> StateVector:
    """Classical wave function ``sqrt(f / int f)`` (real, non-negative branch)."""
    f = np.asarray(f, dtype=float)
    if np.any(~np.isfinite(f)):
        raise DomainError("density must be finite")
    if f.min() < -1e-14:
        raise DomainError(f"density has a negative value {f.min():.3e}")
    f = np.clip(f, 0.0, None)
    cell = math.prod(g.spacing for g in grids)
    total = psum(f) * cell
    if not total > 0:
        raise DomainError("density integrates to zero")
    return StateVector(grids, np.sqrt(f / total), copy=False)


def classical_grids(n: int = 256, half_width: float = 8.0, n_k: int | None = None,
                    half_width_k: float | None = None) -> tuple:
    return (Grid1D.centered(n, half_width, "x"),
            Grid1D.centered(n_k or n, half_width_k or half_width, "k"))


def gaussian_classical(grids, center=(1.0, 0.0), variance=(0.5, 0.5)) -> StateVector:
    """``sqrt`` of a product normal density with the given means and variances."""
    return gaussian_state(grids, center, variance)


def apply_liouvillian(H: HamiltonianSpec, psi: StateVector) -> StateVector:
    """``(dH/dk)(-i d psi/dx) - (dH/dx)(-i d psi/dk)`` computed spectrally."""
    x = psi.coordinates("x")
    k = psi.coordinates("k")
    drift = apply_operator(Derivative("x"), psi).amplitudes * H.dT(k)
    kick = apply_operator(Derivative("k"), psi).amplitudes * H.dV(x)
    return psi.with_amplitudes(drift - kick)


def liouvillian_generators(H: HamiltonianSpec, x="x", k="k") -> list[SubGenerator]:
    """The two shear generators, kick first so the split step is kick-drift-kick."""
    kick = SubGenerator(
        "-dH/dx*p_k", {x: POSITION, k: MOMENTUM},
        lambda c: -H.dV(c[x]) * c[k])
    drift = SubGenerator(
        "dH/dk*p_x", {x: MOMENTUM, k: POSITION},
        lambda c: H.dT(c[k]) * c[x])
    return [kick, drift]


@dataclass
class TrajectoryRecord:
    """Expectation values of a classical run, one row per saved step."""

    times: np.ndarray
    mean_x: np.ndarray
    mean_k: np.ndarray
    second_x: np.ndarray
    second_k: np.ndarray
    norm: np.ndarray
    energy: np.ndarray
    mean_dHdk: np.ndarray
    mean_dHdx: np.ndarray
    states: list = field(default_factory=list, repr=False)

    CSV_HEADER = ("t", "mean_x", "mean_k", "var_x", "var_k", "norm", "energy_c")

    @property
    def var_x(self):
        return self.second_x - self.mean_x**2

    @property
    def var_k(self):
        return self.second_k - self.mean_k**2

    def columns(self) -> dict:
        return {"t": self.times, "mean_x": self.mean_x, "mean_k": self.mean_k,
                "var_x": self.var_x, "var_k": self.var_k, "norm": self.norm,
                "energy_c": self.energy}


def _classical_moments(psi: np.ndarray, grids, H: HamiltonianSpec) -> tuple:
    x = grids[0].points[:, None]
    k = grids[1].points[None, :]
    w = np.abs(psi) ** 2 * (grids[0].spacing * grids[1].spacing)
    return (psum(w), psum(w * x), psum(w * k), psum(w * x**2), psum(w * k**2),
            psum(w * H.energy(x, k)), psum(w * H.dT(k)), psum(w * H.dV(x)))


def evolve_classical(psi0: StateVector, H: HamiltonianSpec, T: float, dt: float = 1e-3,
                     save_every: int = 1, *, keep_states: bool = False,
                     guard: float | None = BOUNDARY_TOLERANCE) -> tuple[TrajectoryRecord, StateVector]:
    """Evolve ``i d psi/dt = L psi`` with kick-drift-kick Strang splitting."""
    if psi0.labels != ("x", "k"):
        raise ParameterError(f"classical state must have axes (x, k), got {psi0.labels}")
    nsteps = step_count(T, dt)
    prop = StrangPropagator(psi0.grids, liouvillian_generators(H), dt)
    rows, states = [], []

    def observe(step, psi):
        t = step * dt
        if guard is not None:
            check_boundary(StateVector(psi0.grids, psi, copy=False), guard, time=t)
        n2, mx, mk, sx, sk, e, dhk, dhx = _classical_moments(psi, psi0.grids, H)
        rows.append((t, mx, mk, sx, sk, math.sqrt(n2), e, dhk, dhx))
        if keep_states:
            states.append(StateVector(psi0.grids, psi))

    final = prop.run(psi0.amplitudes, nsteps, save_every, observe)
    cols = np.array(rows).T
    record = TrajectoryRecord(*cols, states=states)
    return record, StateVector(psi0.grids, final, copy=False)


def central_difference(values, spacing: float, order: int = 2) -> np.ndarray:
    """Derivative at interior samples; endpoints (1 for order 2, 2 for order 4) are NaN."""
    v = np.asarray(values, dtype=float)
    out = np.full_like(v, np.nan)
    if order == 2:
        out[1:-1] = (v[2:] - v[:-2]) / (2 * spacing)
    elif order == 4:
        out[2:-2] = (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * spacing)
    else:
        raise ParameterError("central difference order must be 2 or 4")
    return out


@dataclass(frozen=True)
class HamiltonResiduals:
    max_x: float
    max_k: float
    residual_x: np.ndarray
    residual_k: np.ndarray

    @property
    def worst(self) -> float:
        return max(self.max_x, self.max_k)


def hamilton_check(record: TrajectoryRecord, H: HamiltonianSpec | None = None,
                   states: Sequence[StateVector] | None = None) -> HamiltonResiduals:
    """Compare central differences of <x>, <k> with <dH/dk>, -<dH/dx>.

    Instantaneous expectations come from ``states`` when given (requires
    ``H``), otherwise from the values recorded during the run.
    """
    t = np.asarray(record.times)
    if len(t) < 3:
        raise ParameterError("need at least 3 saved points")
    h = t[1] - t[0]
    if np.max(np.abs(np.diff(t) - h)) > 1e-9 * max(1.0, abs(h)):
        raise ParameterError("saved times must be uniformly spaced")
    if states is not None:
        if H is None:
            raise ParameterError("H is required to evaluate states")
        moments = [_classical_moments(s.amplitudes, s.grids, H) for s in states]
        dhk = np.array([m[6] for m in moments])
        dhx = np.array([m[7] for m in moments])
    else:
        dhk, dhx = record.mean_dHdk, record.mean_dHdx
    rx = central_difference(record.mean_x, h) - dhk
    rk = central_difference(record.mean_k, h) + dhx
    return HamiltonResiduals(float(np.nanmax(np.abs(rx))), float(np.nanmax(np.abs(rk))), rx, rk)


def phase_field(grids, rng: np.random.Generator, modes: int = 2, amplitude: float = 1.0) -> np.ndarray:
    """Smooth random real field made of a few low periodic Fourier modes."""
    shape = tuple(g.n for g in grids)
    field_ = np.zeros(shape)
    coords = np.meshgrid(*[2 * np.pi * (g.points - g.origin) / g.length for g in grids], indexing="ij")
    for _ in range(modes):
        m = rng.integers(-2, 3, size=len(grids))
        field_ += amplitude * rng.normal() * np.cos(sum(mi * c for mi, c in zip(m, coords)) + rng.uniform(0, 2 * np.pi))
    return field_


__all__ = [
    "HamiltonianSpec", "from_density", "classical_grids", "gaussian_classical", "apply_liouvillian",
    "liouvillian_generators", "TrajectoryRecord", "evolve_classical", "central_difference",
    "HamiltonResiduals", "hamilton_check", "phase_field",
]
