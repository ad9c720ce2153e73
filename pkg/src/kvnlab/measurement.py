"""Phase-space partition measurements and the pre-measurement chain.

A classical pointer ``(x, k)`` is entangled with a quantum system by a
controlled translation along ``x``: outcome subspace ``mu`` of the system
shifts the pointer by ``d_mu``.  Registering which phase-space cell holds
the pointer is a projective measurement on the classical factor; the
induced measurement on the quantum system is reconstructed by tomography
as a POVM and as Kraus matrices.  An optional finite environment is
entangled with the system, conditioned on the pointer cell, before the
reading.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import fft as sfft
from scipy.stats import unitary_group

from .errors import ConfigurationError, ExtractionError, ParameterError, ZeroProbabilityError
from .hilbert import (
    BOUNDARY_TOLERANCE,
    DensityMatrix,
    Grid1D,
    StateVector,
    along,
    check_boundary,
    gaussian_1d,
    gaussian_state,
    gram_schmidt,
    partial_trace_quantum,
    psum,
)

ZERO_PROBABILITY = 1e-12


# -- partitions


@dataclass(frozen=True)
class Partition:
    """Disjoint cells covering a grid over the axes named by ``grids``."""

    grids: tuple
    labels: tuple
    masks: tuple

    def __post_init__(self):
        object.__setattr__(self, "grids", tuple(self.grids))
        object.__setattr__(self, "labels", tuple(self.labels))
        masks = tuple(np.asarray(m, dtype=bool) for m in self.masks)
        object.__setattr__(self, "masks", masks)
        shape = tuple(g.n for g in self.grids)
        if len(self.labels) != len(masks) or len(set(self.labels)) != len(self.labels):
            raise ConfigurationError("partition labels must be unique, one per cell")
        if any(m.shape != shape for m in masks):
            raise ConfigurationError("partition masks do not match the grid shape")
        count = np.zeros(shape, dtype=int)
        for m in masks:
            count += m
        if np.any(count > 1):
            raise ConfigurationError("partition cells overlap")
        if np.any(count == 0):
            raise ConfigurationError(f"partition leaves {int(np.sum(count == 0))} grid cells uncovered")

    @property
    def axes(self) -> tuple:
        return tuple(g.label for g in self.grids)

    @classmethod
    def half_planes(cls, grids: Sequence[Grid1D], axis: str = "x", threshold: float = 0.0,
                    labels=("L", "R")) -> "Partition":
        """``axis < threshold`` versus ``axis >= threshold``."""
        grids = tuple(grids)
        nd = len(grids)
        i = [g.label for g in grids].index(axis)
        below = np.broadcast_to(along(grids[i].points < threshold, i, nd), tuple(g.n for g in grids))
        return cls(grids, labels, (below, ~below))

    @classmethod
    def rectangles(cls, grids: Sequence[Grid1D], cells: Mapping[str, Sequence],
                   rest: str | None = None) -> "Partition":
        """Cells from half-open boxes ``{label: [(lo, hi), ...] per axis}``.

        A label may carry a list of boxes.  Points not in any box go to
        ``rest`` when given.
        """
        grids = tuple(grids)
        nd = len(grids)
        shape = tuple(g.n for g in grids)
        labels, masks = [], []
        for label, boxes in cells.items():
            boxes = list(boxes)
            if boxes and isinstance(boxes[0][0], (int, float)):
                boxes = [boxes]
            mask = np.zeros(shape, dtype=bool)
            for box in boxes:
                if len(box) != nd:
                    raise ConfigurationError(f"cell {label!r}: box needs {nd} intervals")
                inside = np.ones(shape, dtype=bool)
                for i, (g, (lo, hi)) in enumerate(zip(grids, box)):
                    inside &= along((g.points >= lo) & (g.points < hi), i, nd)
                mask |= inside
            labels.append(label)
            masks.append(mask)
        if rest is not None:
            covered = np.zeros(shape, dtype=bool)
            for m in masks:
                covered |= m
            labels.append(rest)
            masks.append(~covered)
        return cls(grids, labels, masks)

    def coarsen(self, groups: Mapping[str, Sequence[str]]) -> "Partition":
        """Lump cells together; every old label must land in exactly one group."""
        used = [lab for members in groups.values() for lab in members]
        if sorted(used) != sorted(self.labels):
            raise ConfigurationError("coarsening must use every cell label exactly once")
        index = {lab: i for i, lab in enumerate(self.labels)}
        masks = []
        for members in groups.values():
            m = np.zeros_like(self.masks[0])
            for lab in members:
                m |= self.masks[index[lab]]
            masks.append(m)
        return Partition(self.grids, tuple(groups), masks)

    def mask(self, label: str) -> np.ndarray:
        return self.masks[self.labels.index(label)]


def _marginal_over(state: StateVector, part: Partition) -> np.ndarray:
    """Density over the partition axes, summed over every other axis."""
    labels = state.labels
    for g in part.grids:
        if g not in state.grids:
            raise ConfigurationError(f"partition axis {g.label!r} does not match the state grid")
    keep = [labels.index(a) for a in part.axes]
    other = [i for i in range(len(labels)) if i not in keep]
    dens = state.density() * state.cell_volume
    if other:
        dens = psum(dens, axes=other)
    order = np.argsort(np.argsort(keep))
    return np.transpose(dens, tuple(int(o) for o in order)) if len(keep) > 1 else dens


def outcome_probabilities(state: StateVector, part: Partition, *, check: bool = True) -> dict:
    """Probability of each cell: classical marginal mass inside it."""
    mass = _marginal_over(state, part)
    probs = {lab: float(psum(np.where(m, mass, 0.0))) for lab, m in zip(part.labels, part.masks)}
    if check:
        total = math.fsum(probs.values())
        norm2 = float(psum(mass))
        if abs(total - norm2) > 1e-10:
            raise ConfigurationError(f"partition does not cover the state: {total} vs {norm2}")
    return probs


# -- pointer schemes


@dataclass(frozen=True)
class PointerScheme:
    """Controlled pointer translation ``exp(-i sum_mu P_mu (x) d_mu p_x)``.

    ``projectors`` maps outcome labels to orthogonal projectors on the q grid,
    given as diagonals (shape ``(n,)``) or matrices (shape ``(n, n)`` acting on
    amplitude vectors); ``basis`` holds the truncated quantum basis used for
    reduced states and tomography, one function per row.
    """

    grids: tuple
    projectors: Mapping[str, np.ndarray]
    shifts: Mapping[str, float]
    pointer: StateVector
    basis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "grids", tuple(self.grids))
        if tuple(g.label for g in self.grids) != ("q", "x", "k"):
            raise ConfigurationError("pointer schemes live on a (q, x, k) grid")
        if set(self.projectors) != set(self.shifts):
            raise ConfigurationError("every projector needs a pointer shift")
        if self.pointer.grids != self.grids[1:]:
            raise ConfigurationError("pointer state must live on the (x, k) grids of the scheme")
        n = self.grids[0].n
        total = np.zeros((n, n), dtype=complex)
        for lab, P in self.projectors.items():
            M = self._matrix(P)
            if np.max(np.abs(M @ M - M)) > 1e-8 or np.max(np.abs(M - M.conj().T)) > 1e-8:
                raise ConfigurationError(f"projector {lab!r} is not an orthogonal projector")
            total += M
        if np.max(np.abs(total - np.eye(n))) > 1e-8:
            raise ConfigurationError("projectors do not resolve the identity")

    @staticmethod
    def _matrix(P) -> np.ndarray:
        P = np.asarray(P)
        return np.diag(P).astype(complex) if P.ndim == 1 else P.astype(complex)

    @property
    def labels(self) -> tuple:
        return tuple(self.projectors)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def project(self, label: str, psi_q: np.ndarray) -> np.ndarray:
        P = np.asarray(self.projectors[label])
        return P * psi_q if P.ndim == 1 else P @ psi_q

    def shifted_pointer(self, label: str) -> np.ndarray:
        gx = self.grids[1]
        phase = along(np.exp(-1j * gx.frequencies * self.shifts[label]), 0, 2)
        return sfft.ifft(sfft.fft(self.pointer.amplitudes, axis=0) * phase, axis=0)

    def pointer_overlaps(self) -> dict:
        cell = self.pointer.cell_volume
        labs = self.labels
        ptrs = {lab: self.shifted_pointer(lab) for lab in labs}
        return {(a, b): abs(np.vdot(ptrs[a], ptrs[b])) * cell
                for i, a in enumerate(labs) for b in labs[i + 1:]}

    @property
    def orthogonal(self) -> bool:
        return all(v < 1e-8 for v in self.pointer_overlaps().values())


def packet_basis(grid: Grid1D, centers=(-4.0, 4.0), variance: float = 0.5) -> np.ndarray:
    vecs = np.array([gaussian_1d(grid, c, variance) for c in centers])
    return gram_schmidt(vecs, grid.spacing)


def measurement_grids(nq: int = 64, nx: int = 64, nk: int = 32, q=10.0, x=10.0, k=8.0) -> tuple:
    """The x grid is offset by half a cell so that x = 0 falls on a cell boundary."""
    dx = 2 * x / nx
    return (Grid1D.centered(nq, q, "q"), Grid1D(nx, -x + dx / 2, 2 * x, "x"), Grid1D.centered(nk, k, "k"))


def sign_of_q_scheme(grids: Sequence[Grid1D] | None = None, shift: float = 4.0,
                     pointer_variance: float = 0.25, separation: float = 4.0) -> PointerScheme:
    """Outcome L for q < 0 and R for q >= 0; pointer moves by -shift / +shift."""
    grids = tuple(grids or measurement_grids())
    q = grids[0].points
    left = (q < 0).astype(float)
    pointer = gaussian_state(grids[1:], (0.0, 0.0), (pointer_variance, pointer_variance))
    basis = packet_basis(grids[0], (-separation, separation))
    return PointerScheme(grids, {"L": left, "R": 1.0 - left}, {"L": -shift, "R": shift}, pointer, basis)


def overlapping_scheme(grids: Sequence[Grid1D] | None = None, pointer_variance: float = 0.25) -> PointerScheme:
    """Sign-of-q scheme whose pointer positions are one pointer width apart."""
    width = math.sqrt(pointer_variance)
    return sign_of_q_scheme(grids, shift=width / 2, pointer_variance=pointer_variance)


def truncated_basis_scheme(grids: Sequence[Grid1D] | None = None, dim: int = 2, spacing: float = 4.0,
                           pointer_variance: float = 0.25) -> PointerScheme:
    """One outcome per oscillator eigenfunction ``e_i`` plus the complement ``rest``."""
    from .hilbert import harmonic_basis

    grids = tuple(grids or measurement_grids())
    gq = grids[0]
    basis = harmonic_basis(gq, dim)
    projectors, shifts = {}, {}
    total = np.zeros((gq.n, gq.n), dtype=complex)
    for i in range(dim):
        P = np.outer(basis[i], basis[i].conj()) * gq.spacing
        projectors[f"e{i}"] = P
        shifts[f"e{i}"] = spacing * (i - (dim - 1) / 2)
        total += P
    projectors["rest"] = np.eye(gq.n) - total
    shifts["rest"] = 0.0
    pointer = gaussian_state(grids[1:], (0.0, 0.0), (pointer_variance, pointer_variance))
    return PointerScheme(grids, projectors, shifts, pointer, basis)


def premeasure(psi_q: StateVector, psi_c: StateVector | None, scheme: PointerScheme,
               guard: float | None = BOUNDARY_TOLERANCE) -> StateVector:
    """``sum_mu (P_mu psi_q) (x) (pointer shifted by d_mu)``."""
    pointer = scheme.pointer if psi_c is None else psi_c
    if pointer.grids != scheme.grids[1:] or psi_q.grids != scheme.grids[:1]:
        raise ConfigurationError("states do not match the scheme grids")
    if psi_c is not None and psi_c is not scheme.pointer:
        scheme = PointerScheme(scheme.grids, scheme.projectors, scheme.shifts, psi_c, scheme.basis)
    out = np.zeros(tuple(g.n for g in scheme.grids), dtype=complex)
    for lab in scheme.labels:
        out += np.multiply.outer(scheme.project(lab, psi_q.amplitudes), scheme.shifted_pointer(lab))
    state = StateVector(scheme.grids, out, copy=False)
    if guard is not None:
        check_boundary(state, guard)
    return state


# -- environment


@dataclass(frozen=True)
class AncillaEnvironment:
    """``d_E``-level environment starting in ``alpha``.

    After pre-measurement the environment and the truncated quantum
    subspace are rotated by ``W_mu`` when the pointer sits in cell ``mu``;
    the orthogonal complement of the basis span is left alone.
    """

    dim: int
    alpha: np.ndarray
    unitaries: Mapping[str, np.ndarray]

    def __post_init__(self):
        if not 1 <= self.dim <= 8:
            raise ConfigurationError("environment dimension must be between 1 and 8")
        a = np.asarray(self.alpha, dtype=complex)
        if a.shape != (self.dim,) or abs(np.linalg.norm(a) - 1) > 1e-10:
            raise ConfigurationError("alpha must be a unit vector of length dim")
        object.__setattr__(self, "alpha", a)
        for lab, W in self.unitaries.items():
            W = np.asarray(W)
            if np.max(np.abs(W.conj().T @ W - np.eye(W.shape[0]))) > 1e-10:
                raise ConfigurationError(f"environment coupling for {lab!r} is not unitary")

    @classmethod
    def random(cls, labels: Sequence[str], system_dim: int, dim: int = 2, seed: int = 7,
               alpha=None) -> "AncillaEnvironment":
        """Seeded Haar-random couplings, one per outcome cell."""
        rng = np.random.default_rng(seed)
        unitaries = {lab: unitary_group.rvs(system_dim * dim, random_state=rng) for lab in labels}
        a = np.zeros(dim, dtype=complex)
        a[0] = 1.0
        return cls(dim, a if alpha is None else np.asarray(alpha, dtype=complex), unitaries)


# -- conditioning


@dataclass
class ConditionalOutcome:
    label: str
    probability: float
    state: StateVector
    rho: DensityMatrix


def _check_probability(label, p):
    if p <= ZERO_PROBABILITY:
        raise ZeroProbabilityError(f"outcome {label!r} has probability {p:.3e}")


def condition(state: StateVector, label: str, part: Partition, basis: np.ndarray,
              dim: int) -> ConditionalOutcome:
    """Project onto cell ``label``, renormalize and reduce to the truncated basis."""
    probs = outcome_probabilities(state, part)
    p = probs[label]
    _check_probability(label, p)
    labels = state.labels
    keep = [labels.index(a) for a in part.axes]
    mask = part.mask(label)
    shape = [1] * len(labels)
    for i, ax in enumerate(keep):
        shape[ax] = part.grids[i].n
    order = np.argsort(keep)
    m = np.transpose(mask, tuple(int(o) for o in order)).reshape(shape)
    projected = np.where(m, state.amplitudes, 0.0) / math.sqrt(p)
    cond = StateVector(state.grids, projected, copy=False)
    return ConditionalOutcome(label, p, cond, partial_trace_quantum(cond, basis, dim))


class MeasurementChain:
    """Pre-measurement, optional environment coupling and the cell reading."""

    def __init__(self, scheme: PointerScheme, partition: Partition,
                 environment: AncillaEnvironment | None = None, dim: int | None = None):
        if partition.grids != scheme.grids[1:]:
            raise ConfigurationError("partition must cover the pointer (x, k) grid")
        self.scheme = scheme
        self.partition = partition
        self.environment = environment
        self.dim = scheme.dim if dim is None else dim
        if self.dim > scheme.dim:
            raise ParameterError(f"truncation {self.dim} exceeds basis size {scheme.dim}")
        if environment is not None:
            for lab in partition.labels:
                W = environment.unitaries.get(lab)
                if W is None or W.shape != (scheme.dim * environment.dim,) * 2:
                    raise ConfigurationError(f"environment needs a coupling of size "
                                             f"{scheme.dim * environment.dim} for cell {lab!r}")

    @property
    def labels(self) -> tuple:
        return self.partition.labels

    def input_state(self, coefficients) -> StateVector:
        """``sum_i a_i e_i`` on the q grid."""
        a = np.asarray(coefficients, dtype=complex)
        b = self.scheme.basis[: len(a)]
        return StateVector(self.scheme.grids[:1], a @ b)

    def outputs(self, psi_q: StateVector) -> dict:
        """Per cell: probability and the unnormalized reduced state ``p_mu rho_mu``."""
        state = premeasure(psi_q, None, self.scheme)
        basis = self.scheme.basis
        D = self.scheme.dim
        gq = self.scheme.grids[0]
        amps = state.amplitudes
        coeff = np.tensordot(np.conj(basis), amps, axes=([1], [0])) * gq.spacing  # (D, nx, nk)
        area = state.cell_volume / gq.spacing
        dens = psum(np.abs(amps) ** 2, axes=0) * state.cell_volume
        out = {}
        for lab, mask in zip(self.partition.labels, self.partition.masks):
            p = float(psum(np.where(mask, dens, 0.0)))
            c = coeff[:, mask]  # (D, cells)
            if self.environment is None:
                rho = (c @ c.conj().T) * area
            else:
                env = self.environment
                # coefficients over (system, environment) after the coupling
                ce = np.einsum("ic,e->iec", c, env.alpha).reshape(D * env.dim, -1)
                ce = (env.unitaries[lab] @ ce).reshape(D, env.dim, -1)
                rho = np.einsum("iec,jec->ij", ce, ce.conj()) * area
            rho = 0.5 * (rho + rho.conj().T)
            out[lab] = (p, rho[: self.dim, : self.dim])
        return out

    def probabilities(self, psi_q: StateVector) -> dict:
        return {lab: p for lab, (p, _) in self.outputs(psi_q).items()}


# -- tomography


def tomography_inputs(dim: int) -> list:
    """``e_i``, ``(e_i + e_j)/sqrt2``, ``(e_i + i e_j)/sqrt2`` for ``i < j``."""
    out = []
    eye = np.eye(dim, dtype=complex)
    for i in range(dim):
        out.append(eye[i])
    for i in range(dim):
        for j in range(i + 1, dim):
            out.append((eye[i] + eye[j]) / math.sqrt(2))
            out.append((eye[i] + 1j * eye[j]) / math.sqrt(2))
    return out


def _hermitian_basis(dim: int) -> list:
    out = []
    for i in range(dim):
        m = np.zeros((dim, dim), dtype=complex)
        m[i, i] = 1
        out.append(m)
    for i in range(dim):
        for j in range(i + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[i, j] = m[j, i] = 1
            out.append(m)
            m = np.zeros((dim, dim), dtype=complex)
            m[i, j], m[j, i] = -1j, 1j
            out.append(m)
    return out


@dataclass
class PovmSet:
    labels: tuple
    elements: dict
    metrics: dict = field(default_factory=dict)

    def probability(self, label: str, rho: np.ndarray) -> float:
        return float(np.trace(rho @ self.elements[label]).real)

    def to_json(self) -> str:
        return json.dumps({"kind": "povm", "outcomes": [
            {"label": lab, "matrix": _complex_rows(self.elements[lab])} for lab in self.labels],
            "metrics": self.metrics}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PovmSet":
        data = json.loads(text)
        elements = {o["label"]: _complex_matrix(o["matrix"]) for o in data["outcomes"]}
        return cls(tuple(elements), elements, data.get("metrics", {}))


@dataclass
class KrausSet:
    label: str
    operators: list
    choi_eigenvalues: np.ndarray
    metrics: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return len(self.operators)

    def effect(self) -> np.ndarray:
        return sum(A.conj().T @ A for A in self.operators)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(A @ rho @ A.conj().T for A in self.operators)

    def to_json(self) -> str:
        return json.dumps({"kind": "kraus", "label": self.label,
                           "operators": [_complex_rows(A) for A in self.operators],
                           "metrics": self.metrics}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "KrausSet":
        data = json.loads(text)
        ops = [_complex_matrix(m) for m in data["operators"]]
        return cls(data["label"], ops, np.array([]), data.get("metrics", {}))


def _complex_rows(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _complex_matrix(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def _tomography_runs(chain: MeasurementChain, dim: int) -> tuple:
    inputs = tomography_inputs(dim)
    outs = [chain.outputs(chain.input_state(a)) for a in inputs]
    return inputs, outs


def extract_povm(chain: MeasurementChain, dim: int | None = None, *, runs=None) -> PovmSet:
    """Solve ``p(mu | rho_s) = tr(rho_s E_mu)`` over the tomography inputs."""
    dim = chain.dim if dim is None else dim
    if dim > chain.scheme.dim:
        raise ParameterError(f"truncation {dim} exceeds basis size {chain.scheme.dim}")
    inputs, outs = runs or _tomography_runs(chain, dim)
    herm = _hermitian_basis(dim)
    rhos = [np.outer(a, a.conj()) for a in inputs]
    A = np.array([[np.trace(r @ B).real for B in herm] for r in rhos])
    elements = {}
    for lab in chain.labels:
        p = np.array([o[lab][0] for o in outs])
        theta = np.linalg.solve(A, p)
        elements[lab] = sum(t * B for t, B in zip(theta, herm))
    total = sum(elements.values())
    deficit = float(np.max(np.abs(total - np.eye(dim))))
    min_eig = {lab: float(np.linalg.eigvalsh(E).min()) for lab, E in elements.items()}
    metrics = {"completeness_error": deficit, "min_eigenvalues": min_eig}
    if deficit > 1e-8:
        raise ExtractionError(f"POVM completeness deficit {deficit:.3e}", details=metrics)
    worst = min(min_eig.values())
    if worst < -1e-8:
        raise ExtractionError(f"POVM element has eigenvalue {worst:.3e}", details=metrics)
    return PovmSet(tuple(chain.labels), elements, metrics)


def extract_kraus(chain: MeasurementChain, label: str, dim: int | None = None, *,
                  povm: PovmSet | None = None, runs=None, threshold: float = 1e-9) -> KrausSet:
    """Kraus factors of the conditional map ``rho -> p_mu rho_mu`` via its Choi matrix."""
    dim = chain.dim if dim is None else dim
    inputs, outs = runs or _tomography_runs(chain, dim)
    rhos = np.array([np.outer(a, a.conj()).ravel() for a in inputs]).T  # (dim^2, n_inputs)
    images = [o[label][1] for o in outs]
    choi = np.zeros((dim * dim, dim * dim), dtype=complex)
    for a in range(dim):
        for b in range(dim):
            target = np.zeros((dim, dim), dtype=complex)
            target[a, b] = 1
            w = np.linalg.solve(rhos, target.ravel())
            image = sum(wi * img for wi, img in zip(w, images))
            # J[(a, c), (b, d)] = Lambda(|a><b|)[c, d]
            choi[a * dim:(a + 1) * dim, b * dim:(b + 1) * dim] = image
    choi = 0.5 * (choi + choi.conj().T)
    evals, evecs = np.linalg.eigh(choi)
    if evals.min() < -1e-7:
        raise ExtractionError(f"Choi matrix has eigenvalue {evals.min():.3e}",
                              details={"choi_eigenvalues": evals.tolist()})
    ops = []
    for lam, v in zip(evals[::-1], evecs.T[::-1]):
        if lam > threshold:
            ops.append(v.reshape(dim, dim).T * math.sqrt(lam))
    kraus = KrausSet(label, ops, evals[::-1].copy())
    povm = povm or extract_povm(chain, dim, runs=(inputs, outs))
    err = float(np.max(np.abs(kraus.effect() - povm.elements[label]))) if ops else float(
        np.max(np.abs(povm.elements[label])))
    kraus.metrics = {"choi_rank": kraus.rank, "consistency_error": err,
                     "choi_eigenvalues": [float(e) for e in kraus.choi_eigenvalues]}
    if err > 1e-7:
        raise ExtractionError(f"Kraus effect differs from POVM element by {err:.3e}",
                              details=kraus.metrics)
    return kraus


def random_pure_inputs(dim: int, count: int, rng: np.random.Generator) -> list:
    out = []
    for _ in range(count):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        out.append(v / np.linalg.norm(v))
    return out


def born_rule_check(chain: MeasurementChain, povm: PovmSet, count: int = 20, seed: int = 11) -> float:
    """Largest gap between simulated ``p_mu`` and ``tr(rho E_mu)`` on random inputs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for a in random_pure_inputs(povm.elements[povm.labels[0]].shape[0], count, rng):
        probs = chain.probabilities(chain.input_state(a))
        rho = np.outer(a, a.conj())
        for lab in povm.labels:
            worst = max(worst, abs(probs[lab] - povm.probability(lab, rho)))
    return worst


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * ((a - b) + (a - b).conj().T)))))


# -- fictitious entanglement


@dataclass
class PhaseInvarianceResult:
    passed: bool
    max_deviation: float
    trials: int


def smooth_phase_field(grids: Sequence[Grid1D], rng: np.random.Generator, modes: int = 3,
                       amplitude: float = 3.0) -> np.ndarray:
    """Sum of a few random low-order periodic cosines over all axes."""
    coords = np.meshgrid(*[2 * np.pi * (g.points - g.origin) / g.length for g in grids], indexing="ij")
    field_ = np.zeros(tuple(g.n for g in grids))
    for _ in range(modes):
        m = rng.integers(-3, 4, size=len(grids))
        field_ += amplitude * rng.normal() * np.cos(sum(mi * c for mi, c in zip(m, coords)) + rng.uniform(0, 2 * np.pi))
    return field_


def phase_invariance_check(state: StateVector, part: Partition, trials: int = 100,
                           seed: int = 3, tol: float = 1e-12) -> PhaseInvarianceResult:
    """Random smooth phase fields never change any partition probability."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    base = outcome_probabilities(state, part)
    worst = 0.0
    for _ in range(trials):
        phased = state.with_amplitudes(state.amplitudes * np.exp(1j * smooth_phase_field(state.grids, rng)))
        probs = outcome_probabilities(phased, part)
        worst = max(worst, max(abs(probs[k] - base[k]) for k in base))
    return PhaseInvarianceResult(worst <= tol, worst, trials)


__all__ = [
    "Partition", "outcome_probabilities", "PointerScheme", "packet_basis", "measurement_grids",
    "sign_of_q_scheme", "overlapping_scheme", "truncated_basis_scheme", "premeasure",
    "AncillaEnvironment", "ConditionalOutcome", "condition", "MeasurementChain",
    "tomography_inputs", "PovmSet", "KrausSet", "extract_povm", "extract_kraus",
    "random_pure_inputs", "born_rule_check", "trace_distance", "PhaseInvarianceResult",
    "smooth_phase_field", "phase_invariance_check",
]
