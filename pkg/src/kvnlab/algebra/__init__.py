"""Symbolic calculus over normal-ordered polynomials in q, p, x, k, p_x, p_k."""

from .checks import (
    EomReport,
    IsolationVerdict,
    NonSelfAdjointWarning,
    boost_coupling,
    classical_oscillator_liouvillian,
    coupled_targets,
    eom_compare,
    full_generator,
    heisenberg_rhs,
    isolation_check,
    observable_coupling,
    quantum_oscillator,
    random_observable_polynomial,
)
from .expr import GENERATORS, OperatorExpr, commutator, monomial, monomial_name, normal_order, parameter
from .parser import parse

__all__ = [
    "GENERATORS", "OperatorExpr", "commutator", "monomial", "monomial_name", "normal_order",
    "parameter", "parse", "EomReport", "IsolationVerdict", "NonSelfAdjointWarning",
    "boost_coupling", "classical_oscillator_liouvillian", "coupled_targets", "eom_compare",
    "full_generator", "heisenberg_rhs", "isolation_check", "observable_coupling",
    "quantum_oscillator", "random_observable_polynomial",
]
