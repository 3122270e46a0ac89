'''
Self-consistent time stepping of the Pauli mean-field equation

    i hbar d phi_i / dt = H_i[phi] phi_i

with classical RK4. The internal potentials are rebuilt from the orbitals
once per step (one-step lag), at every RK4 stage, or iterated to a fixed
point at mid-step; the external field is always sampled at the stage time.
'''
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from core.constants import ATOMIC
from femto_pauli import settings
from field_solvers.assemble import assemble_potentials
from field_solvers.config import SolverConfig
from hamiltonian.operators import hamiltonian_array
from hamiltonian.pulse import evaluate_pulse
from hamiltonian.terms import TermToggles
from propagator.scenario import SCFConfig
from sources.densities import build_sources
from utils.errors import StabilityError
from utils.logger import Logger

logger = Logger(__name__).logger


@dataclass
class FieldState:
    '''
    Sources and potentials consistent with one set of orbitals.

    Fields:
        time (float): time the fields were built at.
        sample (ExternalFieldSample): external fields at that time.
        sources (list[SourceSet]): one per exclusion class (a single entry in
            include mode or when no internal term is enabled).
        potentials (list[PotentialSet | None]): one per orbital; None when no
            internal or coherent term is enabled.
    '''
    time: float
    sample: object
    sources: list
    potentials: list
    notes: list = field(default_factory=list)


def refresh_fields(orbitals, sample, solver=SolverConfig(), constants=ATOMIC, self_interaction='exclude',
                   needs_potentials=True, notes=None):
    '''
    Sources and potentials of the instantaneous orbitals (quasi-static). With
    self_interaction='exclude' orbital i sees only the other orbitals.
    '''
    A_ext = sample.A if sample.has_vector_potential() else None
    notes = notes if notes is not None else []
    if not needs_potentials:
        return FieldState(sample.time, sample, [], [None] * orbitals.count, notes)
    if self_interaction == 'include':
        sources = [build_sources(orbitals, A_ext, None, constants)]
        shared = assemble_potentials(sources[0], A_ext, solver, constants, notes)
        potentials = [shared] * orbitals.count
    else:
        sources = [build_sources(orbitals, A_ext, i, constants) for i in range(orbitals.count)]
        potentials = [assemble_potentials(s, A_ext, solver, constants, notes) for s in sources]
    return FieldState(sample.time, sample, sources, potentials, notes)


@dataclass
class PropagationState:
    '''
    Fields:
        orbitals (SpinorOrbitalSet): orbitals at `time`.
        time (float): current time.
        step (int): completed steps.
        fields (FieldState): fields built from `orbitals` at `time`.
    '''
    orbitals: object
    time: float
    step: int
    fields: Optional[FieldState] = None


class Propagator:
    '''
    Advances orbital sets in time under the configured Hamiltonian.

    Attributes:
        grid (Grid3): simulation grid.
        pulse (LaserPulse | None): external pulse.
        static_field (tuple | None): uniform static B.
        constants (PhysicalConstants): unit system.
        toggles (TermToggles): enabled terms.
        solver (SolverConfig): field solver configuration.
        scf (SCFConfig): self-consistency policy.
        self_interaction (str): 'exclude' or 'include'.
    '''

    def __init__(self, grid, pulse=None, static_field=None, constants=ATOMIC, toggles=None, solver=None,
                 scf=None, self_interaction='exclude'):
        self.grid = grid
        self.pulse = pulse
        self.static_field = static_field
        self.constants = constants
        self.toggles = toggles or TermToggles.all_on()
        self.solver = solver or SolverConfig()
        self.scf = scf or SCFConfig()
        self.self_interaction = self_interaction
        self.needs_potentials = self.toggles.any_in('INT') or self.toggles.any_in('COH')
        self.notes = []
        self._note_kinds = set()

    @classmethod
    def from_scenario(cls, scenario):
        return cls(
            scenario.grid, scenario.pulse, scenario.static_field, scenario.constants, scenario.toggles,
            scenario.solver, scenario.scf, scenario.self_interaction,
        )

    def sample(self, t):
        return evaluate_pulse(self.pulse, t, self.grid).with_static_field(self.static_field)

    def refresh(self, orbitals, t):
        notes = []
        fields = refresh_fields(
            orbitals, self.sample(t), self.solver, self.constants, self.self_interaction,
            self.needs_potentials, notes,
        )
        for note in notes:
            kind = note.split('(')[0].strip()
            if kind not in self._note_kinds:
                self._note_kinds.add(kind)
                self.notes.append(note)
        return fields

    def initial_state(self, orbitals, t=0.0):
        return PropagationState(orbitals, float(t), 0, self.refresh(orbitals, t))

    def hamiltonian(self, data, fields, sample):
        '''H_i phi_i for every orbital of an (N, 2, nx, ny, nz) array.'''
        out = np.empty_like(data)
        for i in range(data.shape[0]):
            out[i] = hamiltonian_array(
                self.grid, data[i], fields.potentials[i], sample, self.constants, self.toggles,
            )
        return out

    def _rate(self, data, fields, sample):
        return (-1j / self.constants.hbar) * self.hamiltonian(data, fields, sample)

    def _stage_fields(self, orbitals, data, t, frozen):
        if not self.scf.refresh_every_substep:
            return frozen
        return self.refresh(orbitals.with_data(data), t)

    def _rk4(self, state, dt, fields):
        phi, t = state.orbitals.data, state.time
        s_half, s_end = self.sample(t + 0.5 * dt), self.sample(t + dt)
        k1 = self._rate(phi, fields, self.sample(t))
        y = phi + 0.5 * dt * k1
        k2 = self._rate(y, self._stage_fields(state.orbitals, y, t + 0.5 * dt, fields), s_half)
        y = phi + 0.5 * dt * k2
        k3 = self._rate(y, self._stage_fields(state.orbitals, y, t + 0.5 * dt, fields), s_half)
        y = phi + dt * k3
        k4 = self._rate(y, self._stage_fields(state.orbitals, y, t + dt, fields), s_end)
        return phi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def _fixed_point(self, state, dt, data):
        previous = data
        for iteration in range(1, self.scf.fixed_point_iters + 1):
            midpoint = state.orbitals.with_data(0.5 * (state.orbitals.data + previous))
            fields = self.refresh(midpoint, state.time + 0.5 * dt)
            data = self._rk4(state, dt, fields)
            change = float(np.max(np.abs(data - previous)))
            if change < self.scf.tol:
                logger.debug(f'Fixed point reached after {iteration} iterations (change {change:.3e})')
                return data
            previous = data
        logger.warning(
            f'Fixed-point iteration did not reach tol {self.scf.tol:.1e} at t = {state.time:.6g} '
            f'(last change {change:.3e})'
        )
        return data

    def step(self, state, dt):
        '''One RK4 step; raises StabilityError when an orbital norm drifts too far.'''
        fields = state.fields or self.refresh(state.orbitals, state.time)
        data = self._rk4(state, dt, fields)
        if self.scf.fixed_point_iters > 0:
            data = self._fixed_point(state, dt, data)

        before = state.orbitals.norms()
        orbitals = state.orbitals.with_data(data)
        after = orbitals.norms()
        drift = np.abs(after - before)
        if not np.all(np.isfinite(after)) or float(np.max(drift)) > settings.NORM_DRIFT_ABORT:
            t = state.time + dt
            logger.warning(
                f'Norm drift {float(np.max(drift)):.3e} at t = {t:.6g} exceeds {settings.NORM_DRIFT_ABORT:.1e}; '
                f'dt = {dt:.4g} is too large for the current Hamiltonian'
            )
            raise StabilityError(
                f'norm drift {float(np.max(drift)):.3e} in one step at t = {t:.6g} '
                f'(bound {settings.NORM_DRIFT_ABORT:.1e}); reduce dt',
                time=t, step=state.step + 1, drift=drift.tolist(),
            )
        t = state.time + dt
        return replace(state, orbitals=orbitals, time=t, step=state.step + 1, fields=self.refresh(orbitals, t))
