"""Dense grid-matrix representation of operator expressions.

Each sector gets one periodic grid; q and x, k act as diagonal matrices and
p, p_x, p_k as dense spectral-derivative matrices.  Applying a monomial to a
state on the (q, x, k) tensor grid means applying these per-axis matrices
right to left.  Discrete commutators agree with the symbolic ones only on
band-limited states well inside the grid, so the oracle is used with
localized smooth test states.
"""

from __future__ import annotations

import math

import numpy as np

from ..hilbert import Grid1D, gaussian_1d
from .expr import OperatorExpr

# generator index -> (tensor axis, is derivative)
_AXIS = {0: (0, False), 1: (0, True), 2: (1, False), 3: (2, False), 4: (1, True), 5: (2, True)}


def derivative_matrix(grid: Grid1D) -> np.ndarray:
    """Dense ``-i d/dx`` on a periodic grid (spectral)."""
    n = grid.n
    F = np.fft.fft(np.eye(n), axis=0, norm="ortho")
    return F.conj().T @ (grid.frequencies[:, None] * F)


class GridOracle:
    def __init__(self, n: int = 64, half_width: float = 10.0, hbar: float = 1.0):
        self.grids = tuple(Grid1D.centered(n, half_width, lab) for lab in ("q", "x", "k"))
        self.hbar = float(hbar)
        self._mats = {}
        for g, (ax, deriv) in _AXIS.items():
            grid = self.grids[ax]
            if deriv:
                m = derivative_matrix(grid) * (self.hbar if g == 1 else 1.0)
            else:
                m = np.diag(grid.points).astype(complex)
            self._mats[g] = m

    def matrix(self, generator: int) -> np.ndarray:
        return self._mats[generator]

    def _apply_generator(self, g: int, psi: np.ndarray) -> np.ndarray:
        ax = _AXIS[g][0]
        return np.moveaxis(np.tensordot(self._mats[g], psi, axes=([1], [ax])), 0, ax)

    def apply(self, expr: OperatorExpr, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi, dtype=complex)
        for exps, coef in expr.terms.items():
            v = psi.astype(complex)
            for g in reversed(range(6)):
                for _ in range(exps[g]):
                    v = self._apply_generator(g, v)
            out += complex(coef) * v
        return out

    def commutator_apply(self, a: OperatorExpr, b: OperatorExpr, psi: np.ndarray) -> np.ndarray:
        return self.apply(a, self.apply(b, psi)) - self.apply(b, self.apply(a, psi))

    def test_state(self, rng: np.random.Generator | None = None) -> np.ndarray:
        """Normalized Gaussian product with random centres, widths and momenta."""
        rng = rng or np.random.default_rng(0)
        amps = np.ones((), dtype=complex)
        for g in self.grids:
            c = rng.uniform(-1.0, 1.0)
            v = rng.uniform(0.4, 0.8)
            m = rng.uniform(-1.0, 1.0)
            amps = np.multiply.outer(amps, gaussian_1d(g, c, v, m))
        cell = math.prod(g.spacing for g in self.grids)
        return amps / math.sqrt(np.sum(np.abs(amps) ** 2) * cell)


def commutator_discrepancy(a: OperatorExpr, b: OperatorExpr, oracle: GridOracle,
                           states) -> float:
    """max |([A, B] - M[[a, b]]) psi| over the given states."""
    from .expr import commutator

    sym = commutator(a, b).subs({}) if a.free_symbols or b.free_symbols else commutator(a, b)
    worst = 0.0
    for psi in states:
        lhs = oracle.commutator_apply(a, b, psi)
        rhs = oracle.apply(sym, psi)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst
