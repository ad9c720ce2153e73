"""Symmetric (Strang) splitting over exactly exponentiable generators.

Each sub-generator is a real function of coordinates that is diagonal once a
chosen subset of axes is Fourier transformed.  Generators whose
representations agree on every shared axis commute, so they are merged into
a single stage and exponentiated together.  A step is

    S0(h/2) S1(h/2) ... S_{m-1}(h) ... S1(h/2) S0(h/2)

and the trailing ``S0(h/2)`` is fused with the next leading one whenever no
observation is requested in between.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import fft as sfft

from .errors import ConfigurationError, ParameterError
from .hilbert import Grid1D, along

POSITION = "position"
MOMENTUM = "momentum"


@dataclass(frozen=True)
class SubGenerator:
    """A real generator diagonal in ``representation``.

    ``values`` receives a mapping from axis label to broadcastable coordinate
    arrays (grid points for position axes, FFT-ordered angular frequencies
    for momentum axes) and returns the generator's values.
    """

    name: str
    representation: Mapping[str, str]
    values: Callable[[Mapping[str, np.ndarray]], np.ndarray]

    def compatible(self, other: "SubGenerator") -> bool:
        return all(other.representation.get(ax, rep) == rep for ax, rep in self.representation.items())


def plan_stages(generators: Sequence[SubGenerator]) -> list[list[int]]:
    """Fewest groups of mutually compatible generators.

    Groups are found by exhaustive search over colourings in generator
    order, so the first minimal assignment wins and the plan is
    deterministic.
    """
    n = len(generators)
    if n == 0:
        return []
    ok = [[generators[i].compatible(generators[j]) for j in range(n)] for i in range(n)]
    for ncolors in range(1, n + 1):
        assign = [-1] * n

        def place(i, used):
            if i == n:
                return True
            for c in range(min(used + 1, ncolors)):
                if all(assign[j] != c or ok[i][j] for j in range(i)):
                    assign[i] = c
                    if place(i + 1, max(used, c + 1)):
                        return True
            assign[i] = -1
            return False

        if place(0, 0):
            stages = [[] for _ in range(ncolors)]
            for i, c in enumerate(assign):
                stages[c].append(i)
            return stages
    raise ConfigurationError("could not group generators")  # pragma: no cover


class StrangPropagator:
    """Second-order split-step propagator on a fixed tensor grid."""

    def __init__(self, grids: Sequence[Grid1D], generators: Sequence[SubGenerator], dt: float):
        if not dt > 0:
            raise ParameterError("dt must be positive")
        self.grids = tuple(grids)
        self.labels = tuple(g.label for g in self.grids)
        for gen in generators:
            for ax, rep in gen.representation.items():
                if ax not in self.labels:
                    raise ConfigurationError(f"generator {gen.name!r} acts on missing axis {ax!r}")
                if rep not in (POSITION, MOMENTUM):
                    raise ConfigurationError(f"generator {gen.name!r}: unknown representation {rep!r}")
        self.generators = tuple(generators)
        self.dt = float(dt)
        self.stages = plan_stages(self.generators)
        self._reps = []
        self._values = []
        for stage in self.stages:
            rep = {}
            for i in stage:
                rep.update(self.generators[i].representation)
            self._reps.append(rep)
            total = 0.0
            coords = self._coords(rep)
            for i in stage:
                total = total + np.asarray(self.generators[i].values(coords), dtype=float)
            self._values.append(total)
        self._phase_cache = {}

    def _coords(self, rep):
        nd = len(self.grids)
        coords = {}
        for i, g in enumerate(self.grids):
            if rep.get(g.label) == MOMENTUM:
                coords[g.label] = along(g.frequencies, i, nd)
            else:
                coords[g.label] = along(g.points, i, nd)
        return coords

    def _phase(self, stage: int, fraction: float) -> np.ndarray:
        key = (stage, fraction)
        if key not in self._phase_cache:
            self._phase_cache[key] = np.exp(-1j * fraction * self.dt * self._values[stage])
        return self._phase_cache[key]

    def ordering(self) -> list[str]:
        """Human-readable sub-step sequence of one step (used in run manifests)."""
        names = [" + ".join(self.generators[i].name for i in stage) for stage in self.stages]
        m = len(names)
        if m == 0:
            return []
        seq = [f"[{nm}](dt/2)" for nm in names[:-1]]
        seq.append(f"[{names[-1]}](dt)")
        seq.extend(f"[{nm}](dt/2)" for nm in reversed(names[:-1]))
        return seq

    # -- representation bookkeeping

    def _switch(self, psi: np.ndarray, current: dict, target: Mapping[str, str]) -> np.ndarray:
        forward, backward = [], []
        for i, lab in enumerate(self.labels):
            want = target.get(lab)
            if want is None or current[lab] == want:
                continue
            (forward if want == MOMENTUM else backward).append(i)
            current[lab] = want
        if forward:
            psi = sfft.fftn(psi, axes=forward, overwrite_x=True)
        if backward:
            psi = sfft.ifftn(psi, axes=backward, overwrite_x=True)
        return psi

    def _apply(self, psi, current, stage, fraction):
        psi = self._switch(psi, current, self._reps[stage])
        psi *= self._phase(stage, fraction)
        return psi

    def run(self, amplitudes: np.ndarray, nsteps: int, save_every: int,
            observe: Callable[[int, np.ndarray], None]) -> np.ndarray:
        """Advance ``nsteps`` steps, calling ``observe(step, psi)`` at step 0
        and every ``save_every`` steps.

        ``psi`` handed to ``observe`` is in position representation and must
        not be modified.  Returns the final amplitudes.
        """
        if nsteps < 0 or save_every < 1:
            raise ParameterError("nsteps must be >= 0 and save_every >= 1")
        psi = np.array(amplitudes, dtype=np.complex128, copy=True)
        current = {lab: POSITION for lab in self.labels}
        allpos = {lab: POSITION for lab in self.labels}
        observe(0, psi)
        m = len(self.stages)
        if nsteps == 0 or m == 0:
            return psi
        psi = self._apply(psi, current, 0, 0.5)
        for step in range(1, nsteps + 1):
            for s in range(1, m - 1):
                psi = self._apply(psi, current, s, 0.5)
            if m > 1:
                psi = self._apply(psi, current, m - 1, 1.0)
            for s in range(m - 2, 0, -1):
                psi = self._apply(psi, current, s, 0.5)
            if step % save_every == 0 or step == nsteps:
                psi = self._apply(psi, current, 0, 0.5)
                psi = self._switch(psi, current, allpos)
                if step % save_every == 0:
                    observe(step, psi)
                if step < nsteps:
                    psi = self._apply(psi, current, 0, 0.5)
            else:
                psi = self._apply(psi, current, 0, 1.0)
        return psi


def step_count(duration: float, dt: float) -> int:
    """Number of steps of size ``dt`` covering ``duration`` (must divide evenly)."""
    if not dt > 0:
        raise ParameterError("dt must be positive")
    if duration < 0:
        raise ParameterError("duration must be non-negative")
    n = int(round(duration / dt))
    if abs(n * dt - duration) > 1e-9 * max(1.0, duration):
        raise ParameterError(f"duration {duration} is not a multiple of dt {dt}")
    return n

