"""Heisenberg equations and the isolation / correspondence checks built on them."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import sympy as sp

from .expr import OperatorExpr, commutator, monomial_name, parameter, word_of

DYNAMICAL = ("q", "p", "x", "k")


class NonSelfAdjointWarning(UserWarning):
    """The generator handed to a Heisenberg computation is not formally self-adjoint."""


def heisenberg_rhs(K: OperatorExpr, O: OperatorExpr, *, check: bool = True) -> OperatorExpr:
    """``dO/dt = -i [O, K]``."""
    if check and not K.is_self_adjoint():
        warnings.warn(f"generator is not self-adjoint: {K}", NonSelfAdjointWarning, stacklevel=2)
    return commutator(O, K) * (-sp.I)


@dataclass(frozen=True)
class IsolationVerdict:
    isolating: bool
    witness_x: OperatorExpr
    witness_k: OperatorExpr

    @property
    def verdict(self) -> str:
        return "isolating" if self.isolating else "non-isolating"


def isolation_check(Ki: OperatorExpr) -> IsolationVerdict:
    """``Ki`` isolates the classical sector iff it commutes with both x and k."""
    x = OperatorExpr.generator("x", Ki.hbar)
    k = OperatorExpr.generator("k", Ki.hbar)
    wx, wk = commutator(x, Ki), commutator(k, Ki)
    return IsolationVerdict(wx.is_zero() and wk.is_zero(), wx, wk)


@dataclass(frozen=True)
class EomEntry:
    variable: str
    derived: OperatorExpr
    target: OperatorExpr
    residual: OperatorExpr
    unobservable: bool


@dataclass
class EomReport:
    entries: dict = field(default_factory=dict)
    generator_self_adjoint: bool = True

    @property
    def correspondence_holds(self) -> bool:
        return all(e.residual.is_zero() for e in self.entries.values())

    def __getitem__(self, name) -> EomEntry:
        return self.entries[name]

    def as_dict(self) -> dict:
        return {name: {"derived": str(e.derived), "target": str(e.target),
                       "residual": str(e.residual), "unobservable": e.unobservable}
                for name, e in self.entries.items()}


def eom_compare(K: OperatorExpr, targets: Mapping[str, OperatorExpr]) -> EomReport:
    report = EomReport(generator_self_adjoint=K.is_self_adjoint())
    for name, target in targets.items():
        O = OperatorExpr.generator(name, K.hbar)
        derived = heisenberg_rhs(K, O, check=False)
        residual = derived - target
        report.entries[name] = EomEntry(name, derived, target, residual, derived.contains_unobservable())
    return report


# -- canonical expressions of the coupled-oscillator model


def _g(name, hbar=1):
    return OperatorExpr.generator(name, hbar)


def quantum_oscillator(hbar=1) -> OperatorExpr:
    return (_g("q", hbar) ** 2 + _g("p", hbar) ** 2) * sp.Rational(1, 2)


def classical_oscillator_liouvillian(hbar=1) -> OperatorExpr:
    """``L = k p_x - x p_k`` for ``H = (x^2 + k^2) / 2``."""
    return _g("k", hbar) * _g("p_x", hbar) - _g("x", hbar) * _g("p_k", hbar)


def boost_coupling(c=None, hbar=1) -> OperatorExpr:
    c = parameter("c") if c is None else c
    return _g("q", hbar) * _g("p_k", hbar) * (-c)


def observable_coupling(c=None, hbar=1) -> OperatorExpr:
    c = parameter("c") if c is None else c
    return _g("q", hbar) * _g("x", hbar) * c


def full_generator(coupling: OperatorExpr | None = None, hbar=1) -> OperatorExpr:
    K = quantum_oscillator(hbar) + classical_oscillator_liouvillian(hbar)
    return K if coupling is None else K + coupling


def coupled_targets(c=None, hbar=1) -> dict:
    """Equations of motion of two bilinearly coupled classical oscillators."""
    c = parameter("c") if c is None else c
    q, p, x, k = (_g(n, hbar) for n in DYNAMICAL)
    return {"x": k, "k": -x - q * c, "q": p, "p": -q - x * c}


# -- random observable polynomials


def random_observable_polynomial(rng: np.random.Generator, max_degree: int = 4,
                                 max_terms: int = 4, hbar=1) -> OperatorExpr:
    """Random real-coefficient polynomial in q, p, x, k with words in random order."""
    out = OperatorExpr({}, hbar)
    while out.is_zero():
        for _ in range(int(rng.integers(1, max_terms + 1))):
            deg = int(rng.integers(1, max_degree + 1))
            word = tuple(int(g) for g in rng.choice([0, 1, 2, 3], size=deg))
            coef = sp.Rational(int(rng.integers(-9, 10)), int(rng.integers(1, 5)))
            out = out + OperatorExpr.from_word(word, coef, hbar)
    return out


def describe(expr: OperatorExpr) -> list[str]:
    return [f"{c} {monomial_name(e)}" for e, c in expr.sorted_terms()]


__all__ = [
    "NonSelfAdjointWarning", "heisenberg_rhs", "IsolationVerdict", "isolation_check", "EomEntry",
    "EomReport", "eom_compare", "quantum_oscillator", "classical_oscillator_liouvillian",
    "boost_coupling", "observable_coupling", "full_generator", "coupled_targets",
    "random_observable_polynomial", "describe", "word_of",
]
