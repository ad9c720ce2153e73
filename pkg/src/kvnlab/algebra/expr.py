"""Normal-ordered noncommutative polynomials in q, p, x, k, p_x, p_k.

Monomials are exponent vectors in the canonical order (q, p, x, k, p_x, p_k),
read left to right as an operator product.  Products are normal-ordered by
adjacent-swap rewriting ``a b = b a + [a, b]`` using the canonical
commutation table, memoized on words so that ``hbar`` only enters when the
result is assembled.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Mapping

import sympy as sp

from ..errors import ParameterError, ResourceError

GENERATORS = ("q", "p", "x", "k", "p_x", "p_k")
INDEX = {name: i for i, name in enumerate(GENERATORS)}
# position index -> conjugate momentum index; the q/p pair carries hbar
CONJUGATE = {0: 1, 2: 4, 3: 5}
MOMENTUM_OF = {v: k for k, v in CONJUGATE.items()}
QUANTUM = (0, 1)
CLASSICAL = (2, 3, 4, 5)
UNOBSERVABLE = (4, 5)
MAX_DEGREE = 12
ZERO_EXPS = (0,) * 6


def word_of(exps: tuple) -> tuple:
    return tuple(i for i, e in enumerate(exps) for _ in range(e))


def exps_of(word: Iterable[int]) -> tuple:
    out = [0] * 6
    for g in word:
        out[g] += 1
    return tuple(out)


@lru_cache(maxsize=None)
def _order_word(word: tuple) -> tuple:
    """Normal form of a word as ``((exps, ((n_hbar, n_one), count), ...), ...)``.

    Each entry contributes ``count * (-i hbar)^n_hbar * (-i)^n_one`` times the
    monomial ``exps``.
    """
    for pos in range(len(word) - 1):
        a, b = word[pos], word[pos + 1]
        if a > b:
            break
    else:
        return ((exps_of(word), (((0, 0), 1),)),)
    acc: dict = {}
    swapped = word[:pos] + (b, a) + word[pos + 2:]
    _accumulate(acc, _order_word(swapped), (0, 0))
    if MOMENTUM_OF.get(a) == b:
        # [P, X] = -i theta
        shift = (1, 0) if b == 0 else (0, 1)
        _accumulate(acc, _order_word(word[:pos] + word[pos + 2:]), shift)
    return tuple((e, tuple(sorted(c.items()))) for e, c in sorted(acc.items()))


def _accumulate(acc, entries, shift):
    for exps, counts in entries:
        slot = acc.setdefault(exps, {})
        for (nh, n1), cnt in counts:
            key = (nh + shift[0], n1 + shift[1])
            slot[key] = slot.get(key, 0) + cnt
            if slot[key] == 0:
                del slot[key]
        if not slot:
            del acc[exps]


def _sympify(value):
    if isinstance(value, float):
        return sp.Float(value)
    return sp.sympify(value)


def _clean(coef):
    coef = sp.expand(coef)
    return None if coef == 0 else coef


class OperatorExpr:
    """Immutable normal-ordered polynomial; ``terms`` maps exponent vectors to sympy coefficients."""

    __slots__ = ("_terms", "_hbar", "_hash")

    def __init__(self, terms: Mapping[tuple, object] | None = None, hbar=1):
        clean = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != 6 or min(exps) < 0:
                raise ParameterError(f"bad exponent vector {exps}")
            if sum(exps) > MAX_DEGREE:
                raise ResourceError(f"degree {sum(exps)} exceeds the bound {MAX_DEGREE}")
            c = _clean(_sympify(coef))
            if c is not None:
                clean[exps] = c
        object.__setattr__(self, "_terms", clean)
        object.__setattr__(self, "_hbar", _sympify(hbar))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("OperatorExpr is immutable")

    # -- constructors

    @classmethod
    def generator(cls, name: str, hbar=1) -> "OperatorExpr":
        name = {"px": "p_x", "pk": "p_k"}.get(name, name)
        if name not in INDEX:
            raise ParameterError(f"unknown generator {name!r}")
        exps = [0] * 6
        exps[INDEX[name]] = 1
        return cls({tuple(exps): 1}, hbar)

    @classmethod
    def scalar(cls, value, hbar=1) -> "OperatorExpr":
        return cls({ZERO_EXPS: value}, hbar)

    @classmethod
    def from_word(cls, word: Iterable, coefficient=1, hbar=1) -> "OperatorExpr":
        """Normal-order a product of generators written in the given order."""
        word = tuple(INDEX[w] if isinstance(w, str) else int(w) for w in word)
        if len(word) > MAX_DEGREE:
            raise ResourceError(f"degree {len(word)} exceeds the bound {MAX_DEGREE}")
        h = _sympify(hbar)
        coefficient = _sympify(coefficient)
        terms: dict = {}
        for exps, counts in _order_word(word):
            total = sum(cnt * (-sp.I * h) ** nh * (-sp.I) ** n1 for (nh, n1), cnt in counts)
            terms[exps] = terms.get(exps, 0) + coefficient * total
        return cls(terms, h)

    # -- accessors

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    @property
    def hbar(self):
        return self._hbar

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def is_scalar(self) -> bool:
        return all(e == ZERO_EXPS for e in self._terms)

    def scalar_value(self):
        if not self.is_scalar():
            raise ParameterError("expression is not a scalar")
        return self._terms.get(ZERO_EXPS, sp.Integer(0))

    def coefficient(self, mono) -> sp.Expr:
        """Coefficient of a monomial given as exponents, a name like ``"q*p"`` or a monomial expression."""
        if isinstance(mono, OperatorExpr):
            (mono,) = mono._terms
        elif isinstance(mono, str):
            mono = monomial(mono)
        return self._terms.get(tuple(mono), sp.Integer(0))

    @property
    def free_symbols(self) -> set:
        out = set()
        for c in self._terms.values():
            out |= c.free_symbols
        return out

    def contains_unobservable(self) -> bool:
        """True when any monomial contains p_x or p_k."""
        return any(e[i] for e in self._terms for i in UNOBSERVABLE)

    def acts_on(self) -> set:
        return {GENERATORS[i] for e in self._terms for i in range(6) if e[i]}

    # -- arithmetic

    def _coerce(self, other) -> "OperatorExpr":
        if isinstance(other, OperatorExpr):
            if sp.expand(other._hbar - self._hbar) != 0:
                raise ParameterError("cannot combine expressions with different hbar")
            return other
        return OperatorExpr.scalar(other, self._hbar)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self._terms)
        for e, c in other._terms.items():
            terms[e] = terms.get(e, 0) + c
        return OperatorExpr(terms, self._hbar)

    __radd__ = __add__

    def __neg__(self):
        return OperatorExpr({e: -c for e, c in self._terms.items()}, self._hbar)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, OperatorExpr):
            s = _sympify(other)
            return OperatorExpr({e: c * s for e, c in self._terms.items()}, self._hbar)
        other = self._coerce(other)
        terms: dict = {}
        for ea, ca in self._terms.items():
            for eb, cb in other._terms.items():
                if sum(ea) + sum(eb) > MAX_DEGREE:
                    raise ResourceError(f"degree {sum(ea) + sum(eb)} exceeds the bound {MAX_DEGREE}")
                prod = OperatorExpr.from_word(word_of(ea) + word_of(eb), ca * cb, self._hbar)
                for e, c in prod._terms.items():
                    terms[e] = terms.get(e, 0) + c
        return OperatorExpr(terms, self._hbar)

    def __rmul__(self, other):
        return self * other

    def __truediv__(self, other):
        if isinstance(other, OperatorExpr):
            other = other.scalar_value()
        other = _sympify(other)
        if other == 0:
            raise ZeroDivisionError("division of an operator expression by zero")
        return self * (1 / other)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ParameterError("exponent must be a non-negative integer")
        if self.degree * n > MAX_DEGREE:
            raise ResourceError(f"degree {self.degree * n} exceeds the bound {MAX_DEGREE}")
        out = OperatorExpr.scalar(1, self._hbar)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, OperatorExpr):
            if self.is_scalar():
                return sp.expand(self.scalar_value() - _sympify(other)) == 0
            return NotImplemented
        if sp.expand(self._hbar - other._hbar) != 0 or self._terms.keys() != other._terms.keys():
            return False
        return all(sp.expand(c - other._terms[e]) == 0 for e, c in self._terms.items())

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash((frozenset(self._terms.items()), self._hbar)))
        return self._hash

    # -- transformations

    def adjoint(self) -> "OperatorExpr":
        """Formal adjoint: generators are self-adjoint, products reverse."""
        out = OperatorExpr({}, self._hbar)
        for e, c in self._terms.items():
            out = out + OperatorExpr.from_word(tuple(reversed(word_of(e))), sp.conjugate(c), self._hbar)
        return out

    def is_self_adjoint(self) -> bool:
        return self.adjoint() == self

    def subs(self, mapping: Mapping) -> "OperatorExpr":
        sub = {sp.Symbol(k, real=True) if isinstance(k, str) else k: v for k, v in mapping.items()}
        return OperatorExpr({e: c.subs(sub) for e, c in self._terms.items()}, self._hbar)

    def evaluate(self, moments: Mapping[tuple, complex]) -> complex:
        """Linear functional: substitute the expectation of each monomial."""
        total = 0j
        for e, c in self._terms.items():
            if e == ZERO_EXPS:
                total += complex(c)
                continue
            if e not in moments:
                raise ParameterError(f"no expectation recorded for {monomial_name(e)}")
            total += complex(c) * moments[e]
        return total

    # -- printing

    def sorted_terms(self) -> list:
        return sorted(self._terms.items(), key=lambda kv: (sum(kv[0]), tuple(-x for x in kv[0])))

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for i, (e, c) in enumerate(self.sorted_terms()):
            neg = c.could_extract_minus_sign()
            mag = -c if neg else c
            body = _term_string(mag, e)
            if i == 0:
                parts.append(("-" if neg else "") + body)
            else:
                parts.append((" - " if neg else " + ") + body)
        return "".join(parts)

    def __repr__(self):
        return f"OperatorExpr({self})"


def _coef_string(c) -> str:
    s = sp.sstr(c).replace("**", "^")
    if c.is_Atom and not (c.is_Rational and not c.is_Integer):
        return s
    return f"({s})"


def _term_string(coef, exps) -> str:
    mono = monomial_name(exps)
    if exps == ZERO_EXPS:
        return _coef_string(coef)
    if coef == 1:
        return mono
    return f"{_coef_string(coef)}*{mono}"


def monomial_name(exps: tuple) -> str:
    parts = []
    for i, e in enumerate(exps):
        if e == 1:
            parts.append(GENERATORS[i])
        elif e > 1:
            parts.append(f"{GENERATORS[i]}^{e}")
    return "*".join(parts) or "1"


def monomial(name: str) -> tuple:
    """Exponent vector of a product written like ``"q*p_k"`` or ``"x^2"``."""
    exps = [0] * 6
    if name.strip() == "1":
        return ZERO_EXPS
    for factor in name.split("*"):
        gen, _, power = factor.strip().partition("^")
        gen = {"px": "p_x", "pk": "p_k"}.get(gen, gen)
        if gen not in INDEX:
            raise ParameterError(f"unknown generator {gen!r}")
        exps[INDEX[gen]] += int(power or 1)
    return tuple(exps)


def generators(hbar=1) -> tuple:
    return tuple(OperatorExpr.generator(g, hbar) for g in GENERATORS)


def parameter(name: str) -> sp.Symbol:
    return sp.Symbol(name, real=True)


def normal_order(e: OperatorExpr) -> OperatorExpr:
    """Expressions are kept normal-ordered, so this only rebuilds the term table."""
    return OperatorExpr(e.terms, e.hbar)


def commutator(a: OperatorExpr, b: OperatorExpr) -> OperatorExpr:
    return a * b - b * a
