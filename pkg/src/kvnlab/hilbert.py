"""Periodic grids, state vectors and spectral operators.

Everything here works in units with hbar = 1.  A state is a complex array on
a tensor-product grid; axes are identified by their labels (``q`` for the
quantum coordinate, ``x`` and ``k`` for the classical phase-space
coordinates).  The hybrid layout is always ``(q, x, k)`` in row-major order.

Operators come in three flavours: multiplication by a polynomial of one
coordinate, a polynomial of ``-i d/d(axis)`` applied spectrally, and the
product of one of each on two distinct axes.  All three are diagonal in a
representation reachable by FFTs along single axes, so they can be applied
and exponentiated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import fft as sfft

from .errors import BoundaryGuardError, DomainError, ParameterError, SelfAdjointnessError, ShapeError

IMAG_TOLERANCE = 1e-10
BOUNDARY_TOLERANCE = 1e-10
BOUNDARY_CELLS = 3

CONJUGATE_LABELS = {"q": "p", "x": "p_x", "k": "p_k"}


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid ``origin + j * length / n`` for ``j < n``."""

    n: int
    origin: float
    length: float
    label: str = "x"

    def __post_init__(self):
        if self.n < 2 or self.n & (self.n - 1):
            raise ParameterError(f"grid size must be a power of two >= 2, got {self.n}")
        if not (math.isfinite(self.length) and self.length > 0):
            raise ParameterError(f"grid length must be positive, got {self.length}")
        if not math.isfinite(self.origin):
            raise ParameterError("grid origin must be finite")
        if not self.label:
            raise ParameterError("grid label must be non-empty")

    @classmethod
    def centered(cls, n: int, half_width: float, label: str = "x") -> "Grid1D":
        return cls(n, -float(half_width), 2.0 * float(half_width), label)

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @cached_property
    def points(self) -> np.ndarray:
        pts = self.origin + np.arange(self.n) * self.spacing
        pts.flags.writeable = False
        return pts

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Angular frequencies ``2 pi m / L`` in FFT order (0, 1, ..., -1)."""
        freqs = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        freqs.flags.writeable = False
        return freqs

    def conjugate(self) -> "Grid1D":
        """Grid of the (fft-shifted) conjugate momenta."""
        dk = 2.0 * np.pi / self.length
        label = CONJUGATE_LABELS.get(self.label, self.label + "~")
        return Grid1D(self.n, -(self.n // 2) * dk, self.n * dk, label)


class StateVector:
    """Immutable complex amplitudes on a tensor-product grid.

    The norm convention is ``sum |a|^2 * cell_volume``.
    """

    __slots__ = ("grids", "amplitudes")

    def __init__(self, grids: Union[Grid1D, Sequence[Grid1D]], amplitudes, *, copy: bool = True):
        grids = (grids,) if isinstance(grids, Grid1D) else tuple(grids)
        labels = [g.label for g in grids]
        if len(set(labels)) != len(labels):
            raise ShapeError(f"duplicate axis labels {labels}")
        shape = tuple(g.n for g in grids)
        amps = np.array(amplitudes, dtype=np.complex128) if copy else np.asarray(amplitudes, dtype=np.complex128)
        if amps.size != math.prod(shape):
            raise ShapeError(f"{amps.size} amplitudes do not fit grid shape {shape}")
        amps = amps.reshape(shape)
        if not np.all(np.isfinite(amps)):
            raise DomainError("amplitudes must be finite")
        amps.flags.writeable = False
        object.__setattr__(self, "grids", grids)
        object.__setattr__(self, "amplitudes", amps)

    def __setattr__(self, name, value):
        raise AttributeError("StateVector is immutable")

    def __repr__(self):
        return f"StateVector(labels={self.labels}, shape={self.shape})"

    @property
    def labels(self) -> tuple:
        return tuple(g.label for g in self.grids)

    @property
    def shape(self) -> tuple:
        return self.amplitudes.shape

    @property
    def cell_volume(self) -> float:
        return math.prod(g.spacing for g in self.grids)

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ShapeError(f"axis {label!r} not present in {self.labels}") from None

    def grid(self, label: str) -> Grid1D:
        return self.grids[self.axis(label)]

    def coordinates(self, label: str) -> np.ndarray:
        """Points of axis ``label`` reshaped to broadcast against the amplitudes."""
        return along(self.grid(label).points, self.axis(label), len(self.grids))

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return math.sqrt(psum(self.density()) * self.cell_volume)

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise DomainError("cannot normalize the zero state")
        return StateVector(self.grids, self.amplitudes / nrm, copy=False)

    def with_amplitudes(self, amplitudes) -> "StateVector":
        return StateVector(self.grids, amplitudes)

    @property
    def flat(self) -> np.ndarray:
        return self.amplitudes.ravel()


def along(vec: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = -1
    return np.reshape(vec, shape)


def psum(values: np.ndarray, axes: Union[int, Iterable[int], None] = None) -> np.ndarray:
    """Sum with numpy's pairwise kernel by moving the reduced axes last.

    The result is deterministic for a given shape and memory layout.
    """
    values = np.asarray(values)
    if axes is None:
        return np.ascontiguousarray(values).reshape(-1).sum()
    axes = (axes,) if isinstance(axes, int) else tuple(axes)
    axes = tuple(a % values.ndim for a in axes)
    keep = [a for a in range(values.ndim) if a not in axes]
    moved = np.ascontiguousarray(np.transpose(values, keep + list(axes)))
    moved = moved.reshape([values.shape[a] for a in keep] + [-1])
    return moved.sum(axis=-1)


# --------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class Coordinate:
    """Multiplication by ``sum_j c_j * axis**j``."""

    axis: str
    coefficients: tuple = (0.0, 1.0)

    def values(self, grid: Grid1D) -> np.ndarray:
        return npoly.polyval(grid.points, self.coefficients)


@dataclass(frozen=True)
class Derivative:
    """Polynomial in ``-i d/d(axis)`` applied in Fourier space."""

    axis: str
    coefficients: tuple = (0.0, 1.0)

    def values(self, grid: Grid1D) -> np.ndarray:
        return npoly.polyval(grid.frequencies, self.coefficients)


@dataclass(frozen=True)
class Product:
    """``coordinate * derivative`` acting on two different axes (they commute)."""

    coordinate: Coordinate
    derivative: Derivative

    def __post_init__(self):
        if self.coordinate.axis == self.derivative.axis:
            raise ParameterError("product factors must act on distinct axes")


OperatorSpec = Union[Coordinate, Derivative, Product]


def position(axis: str) -> Coordinate:
    return Coordinate(axis)


def momentum(axis: str) -> Derivative:
    return Derivative(axis)


def _spectral(amps: np.ndarray, axis: int, multiplier: np.ndarray) -> np.ndarray:
    out = sfft.fft(amps, axis=axis)
    out *= multiplier
    return sfft.ifft(out, axis=axis, overwrite_x=True)


def apply_operator(op: OperatorSpec, s: StateVector) -> StateVector:
    nd = len(s.grids)
    if isinstance(op, Coordinate):
        ax = s.axis(op.axis)
        return StateVector(s.grids, s.amplitudes * along(op.values(s.grids[ax]), ax, nd), copy=False)
    if isinstance(op, Derivative):
        ax = s.axis(op.axis)
        mult = along(op.values(s.grids[ax]), ax, nd)
        return StateVector(s.grids, _spectral(s.amplitudes, ax, mult), copy=False)
    if isinstance(op, Product):
        return apply_operator(op.coordinate, apply_operator(op.derivative, s))
    raise ParameterError(f"unsupported operator {op!r}")


def exp_operator(op: OperatorSpec, s: StateVector, t: float) -> StateVector:
    """``exp(-i t op) s`` computed exactly in the operator's diagonal representation."""
    nd = len(s.grids)
    if isinstance(op, Coordinate):
        ax = s.axis(op.axis)
        phase = np.exp(-1j * t * along(op.values(s.grids[ax]), ax, nd))
        return StateVector(s.grids, s.amplitudes * phase, copy=False)
    if isinstance(op, Derivative):
        ax = s.axis(op.axis)
        phase = np.exp(-1j * t * along(op.values(s.grids[ax]), ax, nd))
        return StateVector(s.grids, _spectral(s.amplitudes, ax, phase), copy=False)
    if isinstance(op, Product):
        ca, da = s.axis(op.coordinate.axis), s.axis(op.derivative.axis)
        gen = along(op.coordinate.values(s.grids[ca]), ca, nd) * along(op.derivative.values(s.grids[da]), da, nd)
        return StateVector(s.grids, _spectral(s.amplitudes, da, np.exp(-1j * t * gen)), copy=False)
    raise ParameterError(f"unsupported operator {op!r}")


def _check_same_grids(a: StateVector, b: StateVector):
    if a.grids != b.grids:
        raise ShapeError(f"grid mismatch: {a.labels} vs {b.labels}")


def inner_product(a: StateVector, b: StateVector) -> complex:
    _check_same_grids(a, b)
    return complex(psum(np.conj(a.amplitudes) * b.amplitudes) * a.cell_volume)


def expectation(op: OperatorSpec, s: StateVector, tol: float = IMAG_TOLERANCE) -> float:
    value = inner_product(s, apply_operator(op, s))
    if abs(value.imag) > tol:
        raise SelfAdjointnessError(f"<{op}> has imaginary part {value.imag:.3e}")
    return value.real


def axis_transform(s: StateVector, label: str) -> StateVector:
    """Unitary continuum-normalized Fourier transform along one axis.

    The result lives on the fft-shifted conjugate grid and has the same norm.
    """
    ax = s.axis(label)
    grid = s.grids[ax]
    conj = grid.conjugate()
    scale = math.sqrt(grid.spacing / conj.spacing)
    amps = sfft.fftshift(sfft.fft(s.amplitudes, axis=ax, norm="ortho"), axes=ax) * scale
    amps = amps * along(np.exp(-1j * conj.points * grid.origin), ax, len(s.grids))
    grids = list(s.grids)
    grids[ax] = conj
    return StateVector(grids, amps, copy=False)


def fourier_density(s: StateVector, labels: Iterable[str]) -> tuple[np.ndarray, dict]:
    """Joint probability weights with the given axes in momentum representation.

    Returns ``(weights, coords)``: weights sum to the squared norm; ``coords``
    maps every axis label (momentum axes renamed to their conjugate label) to
    broadcastable coordinate arrays, so the expectation of any function of
    the returned coordinates is ``sum(f(coords) * weights)``.
    """
    labels = tuple(labels)
    amps = s.amplitudes
    axes = tuple(s.axis(lab) for lab in labels)
    if axes:
        amps = sfft.fftn(amps, axes=axes, norm="ortho")
    weights = np.abs(amps) ** 2 * s.cell_volume
    nd = len(s.grids)
    coords = {}
    for i, g in enumerate(s.grids):
        if i in axes:
            coords[CONJUGATE_LABELS.get(g.label, g.label + "~")] = along(g.frequencies, i, nd)
        else:
            coords[g.label] = along(g.points, i, nd)
    return weights, coords


# --------------------------------------------------------------------------
# composite systems


def tensor_product(q: StateVector, c: StateVector) -> StateVector:
    grids = q.grids + c.grids
    amps = np.multiply.outer(q.amplitudes, c.amplitudes)
    return StateVector(grids, amps, copy=False)


def marginal(s: StateVector, keep: Sequence[str]) -> np.ndarray:
    """Density of the ``keep`` axes, integrating |psi|^2 over the others."""
    keep_axes = [s.axis(lab) for lab in keep]
    drop = [i for i in range(len(s.grids)) if i not in keep_axes]
    dens = s.density()
    if drop:
        dens = psum(dens, drop) * math.prod(s.grids[i].spacing for i in drop)
    remaining = [i for i in range(len(s.grids)) if i in keep_axes]
    order = [remaining.index(a) for a in keep_axes]
    return np.transpose(dens, order)


def classical_marginal(h: StateVector) -> np.ndarray:
    """Liouville density ``f(x, k) = sum_q |Psi(q, x, k)|^2 dq``."""
    return marginal(h, ("x", "k"))


@dataclass(frozen=True)
class DensityMatrix:
    """Reduced quantum state in a truncated orthonormal basis."""

    matrix: np.ndarray
    basis: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def leakage(self) -> float:
        """Weight outside the truncated basis (``1 - tr rho`` for a unit-norm source)."""
        return 1.0 - self.trace

    @property
    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    def normalized(self) -> "DensityMatrix":
        return DensityMatrix(self.matrix / self.trace, self.basis)

    def validate(self, *, unit_trace: bool = False):
        m = self.matrix
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-10:
            raise DomainError("density matrix is not Hermitian")
        if self.eigenvalues().min() < -1e-8:
            raise DomainError("density matrix has a negative eigenvalue")
        if self.trace > 1 + 1e-9 or (unit_trace and abs(self.trace - 1) > 1e-9):
            raise DomainError(f"density matrix trace {self.trace!r} out of range")
        return self


def partial_trace_quantum(h: StateVector, basis: np.ndarray, dim: int) -> DensityMatrix:
    """Reduced quantum state of a hybrid state in the first ``dim`` basis vectors.

    ``basis`` holds orthonormal functions on the q grid, one per row.
    """
    basis = np.asarray(basis)
    if dim > basis.shape[0] or dim < 1:
        raise ParameterError(f"truncation {dim} exceeds basis size {basis.shape[0]}")
    qax = h.axis("q")
    qgrid = h.grids[qax]
    if basis.shape[1] != qgrid.n:
        raise ShapeError("basis functions do not match the q grid")
    amps = np.moveaxis(h.amplitudes, qax, 0)
    coeff = np.tensordot(np.conj(basis[:dim]), amps, axes=([1], [0])) * qgrid.spacing
    coeff = coeff.reshape(dim, -1)
    rest = h.cell_volume / qgrid.spacing
    rho = (coeff @ coeff.conj().T) * rest
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho, basis[:dim])


# --------------------------------------------------------------------------
# bases and initial data


def gram_schmidt(vectors: np.ndarray, spacing: float) -> np.ndarray:
    """Modified Gram-Schmidt with one reorthogonalization pass, in row order."""
    vecs = np.array(vectors, dtype=np.complex128)
    out = np.empty_like(vecs)
    for i, v in enumerate(vecs):
        v = v.copy()
        for _ in range(2):
            for j in range(i):
                v -= (np.vdot(out[j], v) * spacing) * out[j]
        nrm = math.sqrt(np.vdot(v, v).real * spacing)
        if nrm < 1e-12:
            raise DomainError(f"basis vector {i} is linearly dependent")
        out[i] = v / nrm
    return out


def harmonic_basis(grid: Grid1D, dim: int, omega: float = 1.0, center: float = 0.0) -> np.ndarray:
    """First ``dim`` oscillator eigenfunctions sampled on ``grid``, re-orthonormalized."""
    xi = math.sqrt(omega) * (grid.points - center)
    funcs = np.zeros((dim, grid.n))
    funcs[0] = (omega / math.pi) ** 0.25 * np.exp(-0.5 * xi**2)
    if dim > 1:
        funcs[1] = math.sqrt(2.0) * xi * funcs[0]
    for n in range(1, dim - 1):
        funcs[n + 1] = math.sqrt(2.0 / (n + 1)) * xi * funcs[n] - math.sqrt(n / (n + 1)) * funcs[n - 1]
    return gram_schmidt(funcs, grid.spacing)


def gaussian_1d(grid: Grid1D, center: float, variance: float, momentum: float = 0.0) -> np.ndarray:
    """Amplitudes whose modulus squared is a normal density with ``variance``."""
    if variance <= 0:
        raise ParameterError("variance must be positive")
    x = grid.points
    amp = (2 * math.pi * variance) ** -0.25 * np.exp(-((x - center) ** 2) / (4 * variance) + 1j * momentum * x)
    return amp


def gaussian_state(grids: Sequence[Grid1D], centers, variances, momenta=None) -> StateVector:
    """Normalized product of Gaussian packets, one per axis."""
    grids = tuple(grids)
    momenta = momenta if momenta is not None else [0.0] * len(grids)
    amps = np.ones((), dtype=np.complex128)
    for g, c, v, m in zip(grids, centers, variances, momenta):
        amps = np.multiply.outer(amps, gaussian_1d(g, c, v, m))
    return StateVector(grids, amps, copy=False).normalized()


# --------------------------------------------------------------------------
# aliasing guard


def boundary_mass(s: StateVector, cells: int = BOUNDARY_CELLS) -> dict:
    """Probability mass within ``cells`` grid cells of either end of each axis."""
    dens = s.density()
    out = {}
    for i, g in enumerate(s.grids):
        edge = np.concatenate([np.arange(cells), np.arange(g.n - cells, g.n)])
        out[g.label] = float(psum(np.take(dens, edge, axis=i)) * s.cell_volume)
    return out


def check_boundary(s: StateVector, tol: float = BOUNDARY_TOLERANCE, *, time: float | None = None,
                   cells: int = BOUNDARY_CELLS):
    masses = boundary_mass(s, cells)
    label, mass = max(masses.items(), key=lambda kv: kv[1])
    if mass > tol:
        where = "" if time is None else f" at t={time:.6g}"
        raise BoundaryGuardError(
            f"boundary mass {mass:.3e} on axis {label!r} exceeds {tol:.1e}{where}",
            time=time, axis=label, mass=mass)
    return masses
