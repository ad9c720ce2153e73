"""Unitary dynamics on the joint quantum-classical space ``H_q (x) H_c``.

The generator is ``K = H_q + L_c + K_i`` on a ``(q, x, k)`` grid.  Every
term is a real function that becomes diagonal after Fourier transforming a
subset of axes, so the whole evolution is a Strang composition of exact
phase multiplications.  Expectations of any normal-ordered monomial in
``q, p, x, k, p_x, p_k`` can be recorded along the way, which lets the
symbolic Heisenberg equations be checked against the simulation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import sympy as sp
from numpy.polynomial import polynomial as npoly
from scipy import fft as sfft

from .algebra.checks import heisenberg_rhs
from .algebra.expr import GENERATORS, OperatorExpr, monomial, monomial_name
from .errors import ConfigurationError, ParameterError, SelfAdjointnessError
from .hilbert import (
    BOUNDARY_TOLERANCE,
    Grid1D,
    StateVector,
    along,
    check_boundary,
    psum,
    tensor_product,
)
from .koopman import HamiltonianSpec, central_difference, liouvillian_generators
from .quantum import DeviationReport, QuantumHamiltonianSpec, quantum_generators
from .splitting import MOMENTUM, POSITION, StrangPropagator, SubGenerator, step_count

HYBRID_AXES = ("q", "x", "k")
# generator index -> (axis position in the hybrid grid, representation)
_GEN_AXIS = {0: (0, POSITION), 1: (0, MOMENTUM), 2: (1, POSITION), 3: (2, POSITION),
             4: (1, MOMENTUM), 5: (2, MOMENTUM)}

DEFAULT_MONOMIALS = (
    "q", "p", "x", "k", "p_x", "p_k",
    "q^2", "p^2", "x^2", "k^2",
    "q*k", "p*x", "p*p_k",
)


def hybrid_grids(n: int = 64, q=(-10.0, 10.0), x=(-8.0, 8.0), k=(-8.0, 8.0)) -> tuple:
    """Grids for the three hybrid axes; ``n`` may be an int or a triple."""
    ns = (n, n, n) if isinstance(n, int) else tuple(n)
    return tuple(Grid1D(m, lo, hi - lo, lab) for m, (lo, hi), lab in zip(ns, (q, x, k), HYBRID_AXES))


def product_state(psi_q: StateVector, psi_c: StateVector) -> StateVector:
    return tensor_product(psi_q, psi_c)


# -- interaction terms


def _exact(value):
    return sp.Rational(Fraction(repr(float(value))))


@dataclass(frozen=True)
class InteractionTerm:
    """``coefficient * q^a p^b x^c k^d p_x^e p_k^f`` (real coefficient).

    Exactly exponentiable when no canonical pair appears together, so each
    axis has a single diagonalizing representation.
    """

    coefficient: float
    exponents: tuple

    def __post_init__(self):
        exps = tuple(int(e) for e in self.exponents)
        if len(exps) != 6 or min(exps) < 0:
            raise ConfigurationError(f"bad exponent vector {self.exponents}")
        for pos, mom in ((0, 1), (2, 4), (3, 5)):
            if exps[pos] and exps[mom]:
                raise ConfigurationError(
                    f"term {monomial_name(exps)} mixes {GENERATORS[pos]} and {GENERATORS[mom]}, "
                    "which is not exactly exponentiable")
        if not isinstance(self.coefficient, (int, float)) or not math.isfinite(self.coefficient):
            raise ConfigurationError("interaction coefficient must be a finite real number")
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @classmethod
    def observable(cls, c: float) -> "InteractionTerm":
        """``c q x``."""
        return cls(c, monomial("q*x"))

    @classmethod
    def boost(cls, c: float) -> "InteractionTerm":
        """``-c q p_k``."""
        return cls(-c, monomial("q*p_k"))

    @classmethod
    def from_expr(cls, expr: OperatorExpr) -> list["InteractionTerm"]:
        terms = []
        for exps, coef in expr.sorted_terms():
            if coef.free_symbols:
                raise ConfigurationError(f"coefficient {coef} is not numeric")
            value = complex(coef)
            if abs(value.imag) > 0:
                raise ConfigurationError(f"coefficient {coef} is not real")
            terms.append(cls(value.real, exps))
        return terms

    @property
    def name(self) -> str:
        return f"{self.coefficient!r}*{monomial_name(self.exponents)}"

    @property
    def observable_only(self) -> bool:
        return self.exponents[4] == 0 and self.exponents[5] == 0

    def as_expr(self, hbar=1) -> OperatorExpr:
        return OperatorExpr({self.exponents: _exact(self.coefficient)}, hbar)

    def sub_generator(self) -> SubGenerator:
        rep, factors = {}, []
        for g, e in enumerate(self.exponents):
            if e:
                ax, r = _GEN_AXIS[g]
                rep[HYBRID_AXES[ax]] = r
                factors.append((HYBRID_AXES[ax], e))
        c = self.coefficient

        def values(coords, factors=tuple(factors)):
            out = c
            for lab, e in factors:
                out = out * coords[lab] ** e
            return out

        return SubGenerator(self.name, rep, values)


@dataclass(frozen=True)
class HybridGenerator:
    quantum: QuantumHamiltonianSpec = field(default_factory=QuantumHamiltonianSpec)
    classical: HamiltonianSpec = field(default_factory=HamiltonianSpec)
    interactions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "interactions", tuple(self.interactions))

    @property
    def observable_only(self) -> bool:
        return all(t.observable_only for t in self.interactions)

    def sub_generators(self) -> list[SubGenerator]:
        """Quantum potential, classical kick, kinetic, drift, then interactions."""
        v, t = quantum_generators(self.quantum, "q")
        kick, drift = liouvillian_generators(self.classical, "x", "k")
        return [v, kick, t, drift] + [term.sub_generator() for term in self.interactions]

    def as_expr(self, hbar=1) -> OperatorExpr:
        q, p, x, k, px, pk = (OperatorExpr.generator(g, hbar) for g in GENERATORS)

        def poly(coeffs, var):
            out = OperatorExpr({}, hbar)
            for n, a in enumerate(coeffs):
                if a:
                    out = out + (var ** n) * _exact(a)
            return out

        dT = npoly.polyder(self.classical.kinetic)
        dV = npoly.polyder(self.classical.potential)
        K = poly(self.quantum.kinetic, p) + poly(self.quantum.potential, q)
        K = K + poly(dT, k) * px - poly(dV, x) * pk
        for term in self.interactions:
            K = K + term.as_expr(hbar)
        return K

    def check_self_adjoint(self, grids: Sequence[Grid1D], rng: np.random.Generator | None = None,
                           tol: float = 1e-10):
        """``<a|G b> = conj(<b|G a>)`` for every sub-generator on random states."""
        rng = rng or np.random.default_rng(0)
        shape = tuple(g.n for g in grids)
        cell = math.prod(g.spacing for g in grids)
        a = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        b = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        a /= math.sqrt(np.sum(np.abs(a) ** 2) * cell)
        b /= math.sqrt(np.sum(np.abs(b) ** 2) * cell)
        for gen in self.sub_generators():
            ga, gb = _apply_diagonal(gen, grids, a), _apply_diagonal(gen, grids, b)
            lhs = np.vdot(a, gb) * cell
            rhs = np.conj(np.vdot(b, ga) * cell)
            scale = max(1.0, abs(lhs))
            if abs(lhs - rhs) > tol * scale or abs(np.vdot(a, ga).imag * cell) > tol * scale:
                raise SelfAdjointnessError(f"sub-generator {gen.name!r} is not self-adjoint")


def _apply_diagonal(gen: SubGenerator, grids, psi):
    nd = len(grids)
    coords, axes = {}, []
    for i, g in enumerate(grids):
        if gen.representation.get(g.label) == MOMENTUM:
            coords[g.label] = along(g.frequencies, i, nd)
            axes.append(i)
        else:
            coords[g.label] = along(g.points, i, nd)
    vals = np.asarray(gen.values(coords))
    out = sfft.fftn(psi, axes=axes) if axes else psi.copy()
    out = out * vals
    return sfft.ifftn(out, axes=axes) if axes else out


# -- records


class _MomentEvaluator:
    """Expectations of normal-ordered monomials on the hybrid grid.

    When no axis carries both a position power and a derivative, the
    expectation is a Parseval sum over the density transformed along the
    derivative axes.  Other monomials fall back to explicit derivatives.
    """

    def __init__(self, grids: Sequence[Grid1D], monomials: Iterable[tuple]):
        self.grids = tuple(grids)
        self.cell = math.prod(g.spacing for g in grids)
        self.monomials = tuple(dict.fromkeys(monomials))
        self.points = [g.points for g in grids]
        self.kappa = [g.frequencies for g in grids]
        self.freq = [along(g.frequencies, i, 3) for i, g in enumerate(grids)]

    def _derivative(self, psi, pattern, cache):
        if pattern in cache:
            return cache[pattern]
        # peel one derivative off the last axis that carries one
        ax = max(i for i in range(3) if pattern[i])
        prev = list(pattern)
        prev[ax] -= 1
        base = self._derivative(psi, tuple(prev), cache)
        out = sfft.ifft(sfft.fft(base, axis=ax) * self.freq[ax], axis=ax)
        cache[pattern] = out
        return out

    @staticmethod
    def _transformed(axes, amps):
        if axes not in amps:
            base = _MomentEvaluator._transformed(axes[:-1], amps)
            amps[axes] = sfft.fft(base, axis=axes[-1], norm="ortho")
        return amps[axes]

    def _density(self, axes, amps, dens):
        if axes not in dens:
            a = self._transformed(axes, amps)
            dens[axes] = a.real**2 + a.imag**2
        return dens[axes]

    def __call__(self, psi: np.ndarray) -> dict:
        cache = {(0, 0, 0): psi}
        amps, dens = {(): psi}, {}
        conj = None
        out = {}
        for exps in self.monomials:
            pattern = (exps[1], exps[4], exps[5])
            powers = (exps[0], exps[2], exps[3])
            if not any(d and m for d, m in zip(pattern, powers)):
                val = self._density(tuple(i for i in range(3) if pattern[i]), amps, dens)
                for ax in (2, 1, 0):
                    val = val @ (self.kappa[ax] ** pattern[ax] if pattern[ax] else self.points[ax] ** powers[ax])
                out[exps] = complex(val) * self.cell
                continue
            if conj is None:
                conj = psi.conj()
            val = conj * self._derivative(psi, pattern, cache)
            for ax in (2, 1, 0):
                val = val @ (self.points[ax] ** powers[ax]).astype(complex)
            out[exps] = complex(val) * self.cell
        return out


@dataclass
class HybridTrajectory:
    times: np.ndarray
    moments: dict
    norm: np.ndarray
    energy_q: np.ndarray
    energy_c: np.ndarray
    marginals: list = field(default_factory=list, repr=False)
    states: list = field(default_factory=list, repr=False)

    def expectation(self, name) -> np.ndarray:
        exps = monomial(name) if isinstance(name, str) else tuple(name)
        return self.moments[exps].real

    def mean(self, name) -> np.ndarray:
        return self.expectation(name)

    def moments_at(self, index: int) -> dict:
        return {e: v[index] for e, v in self.moments.items()}

    def evaluate(self, expr: OperatorExpr) -> np.ndarray:
        out = np.zeros(len(self.times), dtype=complex)
        for e, c in expr.terms.items():
            if e == (0,) * 6:
                out += complex(c)
                continue
            if e not in self.moments:
                raise ParameterError(f"no expectation recorded for {monomial_name(e)}")
            out += complex(c) * self.moments[e]
        return out

    @property
    def ledger(self) -> "EnergyLedger":
        return EnergyLedger(self.times, self.energy_q, self.energy_c)


@dataclass
class EnergyLedger:
    times: np.ndarray
    energy_q: np.ndarray
    energy_c: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.energy_q + self.energy_c

    @property
    def spacing(self) -> float:
        return float(self.times[1] - self.times[0])

    def rates(self, order: int = 4) -> tuple:
        h = self.spacing
        return (central_difference(self.energy_q, h, order),
                central_difference(self.energy_c, h, order),
                central_difference(self.total, h, order))

    def drift(self) -> np.ndarray:
        return self.total - self.total[0]


@dataclass
class HybridRun:
    trajectory: HybridTrajectory
    final: StateVector
    ordering: list
    generator: HybridGenerator
    dt: float

    @property
    def ledger(self) -> EnergyLedger:
        return self.trajectory.ledger


def evolve_hybrid(psi0: StateVector, K: HybridGenerator, T: float, dt: float = 1e-3,
                  save_every: int = 1, *, observables: Iterable = (),
                  keep_marginals: bool = False, keep_states: bool = False,
                  guard: float | None = BOUNDARY_TOLERANCE, check_generators: bool = True) -> HybridRun:
    """Strang-split evolution under ``K``; records monomial expectations per save."""
    if psi0.labels != HYBRID_AXES:
        raise ParameterError(f"hybrid state must have axes {HYBRID_AXES}, got {psi0.labels}")
    grids = psi0.grids
    nsteps = step_count(T, dt)
    if check_generators:
        K.check_self_adjoint(tuple(Grid1D(8, g.origin, g.length, g.label) for g in grids))
    prop = StrangPropagator(grids, K.sub_generators(), dt)
    mons = [monomial(m) for m in DEFAULT_MONOMIALS]
    for obs in observables:
        if isinstance(obs, OperatorExpr):
            mons.extend(e for e in obs.terms if any(e))
        else:
            mons.append(monomial(obs) if isinstance(obs, str) else tuple(obs))
    evaluator = _MomentEvaluator(grids, mons)
    qg, xg, kg = grids
    q, x, k = (along(g.points, i, 3) for i, g in enumerate(grids))
    kappa_q = qg.frequencies
    hq, hc = K.quantum, K.classical
    times, rows, norms, eq, ec, marginals, states = [], [], [], [], [], [], []

    def observe(step, psi):
        t = step * dt
        if guard is not None:
            check_boundary(StateVector(grids, psi, copy=False), guard, time=t)
        dens = np.abs(psi) ** 2 * psum_cell
        spec = np.abs(sfft.fft(psi, axis=0, norm="ortho")) ** 2 * psum_cell
        times.append(t)
        norms.append(math.sqrt(psum(dens)))
        eq.append(psum(dens * hq.V(q)) + psum(spec * along(hq.T(kappa_q), 0, 3)))
        ec.append(psum(dens * hc.V(x)) + psum(dens * hc.T(k)))
        rows.append(evaluator(psi))
        if keep_marginals:
            marginals.append(psum(dens, axes=0) / xg.spacing / kg.spacing)
        if keep_states:
            states.append(StateVector(grids, psi))

    psum_cell = math.prod(g.spacing for g in grids)
    final = prop.run(psi0.amplitudes, nsteps, save_every, observe)
    moments = {e: np.array([r[e] for r in rows]) for e in evaluator.monomials}
    traj = HybridTrajectory(np.array(times), moments, np.array(norms), np.array(eq), np.array(ec),
                            marginals, states)
    return HybridRun(traj, StateVector(grids, final, copy=False), prop.ordering(), K, dt)


# -- diagnostics


COUPLING_KINDS = ("observable", "boost")


@dataclass
class EnergyRateReport:
    kind: str
    c: float
    times: np.ndarray
    residual_c: np.ndarray
    residual_q: np.ndarray
    drift: np.ndarray
    definitions: dict

    @property
    def max_residual_c(self) -> float:
        return float(np.nanmax(np.abs(self.residual_c)))

    @property
    def max_residual_q(self) -> float:
        return float(np.nanmax(np.abs(self.residual_q)))

    @property
    def max_residual(self) -> float:
        return max(self.max_residual_c, self.max_residual_q)

    @property
    def total_drift(self) -> float:
        return float(np.max(np.abs(self.drift)))

    @property
    def monotone(self) -> bool:
        """Whether the running drift envelope only grows (sampled at saves)."""
        env = np.abs(self.drift)
        return bool(np.all(np.diff(env) >= -1e-12))


def energy_rates_check(traj: HybridTrajectory, c: float, kind: str, order: int = 4) -> EnergyRateReport:
    """Sector energy rates against the Heisenberg rate identities of the coupling."""
    if kind not in COUPLING_KINDS:
        raise ParameterError(f"unsupported coupling kind {kind!r}; expected one of {COUPLING_KINDS}")
    ledger = traj.ledger
    rq, rc, _ = ledger.rates(order)
    if kind == "boost":
        res_c = rc + c * traj.expectation("q*k")
        res_q = rq - c * traj.expectation("p*p_k")
        defs = {"residual_c": "dHc/dt + c<q k>", "residual_q": "dHq/dt - c<p p_k>"}
    else:
        res_c = rc
        res_q = rq + c * traj.expectation("p*x")
        defs = {"residual_c": "dHc/dt", "residual_q": "dHq/dt + c<x p>"}
    return EnergyRateReport(kind, c, traj.times, res_c, res_q, ledger.drift(), defs)


@dataclass
class ReferenceTrajectory:
    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    x: np.ndarray
    k: np.ndarray
    c: float

    @property
    def energy(self) -> np.ndarray:
        return 0.5 * (self.q**2 + self.p**2 + self.x**2 + self.k**2) + self.c * self.q * self.x


def coupled_matrix(c: float) -> np.ndarray:
    """``d/dt (q, p, x, k)`` for two unit oscillators coupled by ``c q x``."""
    return np.array([[0, 1, 0, 0], [-1, 0, -c, 0], [0, 0, 0, 1], [-c, 0, -1, 0]], dtype=float)


def classical_reference(c: float, initial, T: float, dt: float = 1e-3, save_every: int = 1,
                        substeps: int = 10) -> ReferenceTrajectory:
    """Classic fourth-order Runge-Kutta at ``dt / substeps``, sampled like a hybrid run."""
    if abs(c) >= 1:
        warnings.warn(f"|c| = {abs(c)} >= 1: the coupled system has no stable normal modes",
                      RuntimeWarning, stacklevel=2)
    nsteps = step_count(T, dt)
    A = coupled_matrix(c)
    h = dt / substeps

    def f(z):
        return A @ z

    z = np.asarray(initial, dtype=float).copy()
    out = [z.copy()]
    for step in range(1, nsteps + 1):
        for _ in range(substeps):
            k1 = f(z)
            k2 = f(z + 0.5 * h * k1)
            k3 = f(z + 0.5 * h * k2)
            k4 = f(z + h * k3)
            z = z + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if step % save_every == 0:
            out.append(z.copy())
    arr = np.array(out)
    times = np.arange(len(arr)) * dt * save_every
    return ReferenceTrajectory(times, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], c)


def eom_deviation(traj: HybridTrajectory, reference: ReferenceTrajectory, c: float,
                  order: int = 4) -> DeviationReport:
    """Coupled-oscillator equations evaluated on hybrid expectations."""
    t = traj.times
    if len(t) != len(reference.times) or np.max(np.abs(t - reference.times)) > 1e-9:
        raise ParameterError("hybrid and reference time grids differ")
    h = float(t[1] - t[0])
    q, p, x, k = (traj.expectation(n) for n in ("q", "p", "x", "k"))
    d = {n: central_difference(v, h, order) for n, v in (("q", q), ("p", p), ("x", x), ("k", k))}
    res = {
        "x": d["x"] - k,
        "k": d["k"] + x + c * q,
        "q": d["q"] - p,
        "p": d["p"] + q + c * x,
        "ref_q": q - reference.q,
        "ref_p": p - reference.p,
        "ref_x": x - reference.x,
        "ref_k": k - reference.k,
    }
    defs = {
        "x": "d<x>/dt - <k>", "k": "d<k>/dt + <x> + c<q>", "q": "d<q>/dt - <p>",
        "p": "d<p>/dt + <q> + c<x>", "ref_q": "<q> - q_ref", "ref_p": "<p> - p_ref",
        "ref_x": "<x> - x_ref", "ref_k": "<k> - k_ref",
    }
    return DeviationReport(t, res, defs)


def symbolic_numeric_check(traj: HybridTrajectory, K: OperatorExpr,
                           variables: Sequence[str] = ("x", "k", "q", "p"), order: int = 4) -> dict:
    """Finite-difference ``d<O>/dt`` minus the expectation of ``-i[O, K]``."""
    h = float(traj.times[1] - traj.times[0])
    out = {}
    for name in variables:
        rhs = heisenberg_rhs(K, OperatorExpr.generator(name, K.hbar))
        predicted = traj.evaluate(rhs)
        fd = central_difference(traj.expectation(name), h, order)
        out[name] = {"rhs": str(rhs), "residual": fd - predicted.real,
                     "max": float(np.nanmax(np.abs(fd - predicted.real))),
                     "imag": float(np.max(np.abs(predicted.imag)))}
    return out


__all__ = [
    "HYBRID_AXES", "DEFAULT_MONOMIALS", "hybrid_grids", "product_state", "InteractionTerm",
    "HybridGenerator", "HybridTrajectory", "EnergyLedger", "HybridRun", "evolve_hybrid",
    "EnergyRateReport", "energy_rates_check", "ReferenceTrajectory", "coupled_matrix",
    "classical_reference", "eom_deviation", "symbolic_numeric_check",
]
