'''
Per-output-step observables and the observables CSV.

Columns, in order:

    step, time,
    norm_<i>, mx_<i>, my_<i>, mz_<i>          for every orbital i,
    mx, my, mz                                 summed magnetization,
    dipole_x, dipole_y, dipole_z               q * integral of x rho0,
    kinetic,
    <one column per TermId>                    energies summed over orbitals,
    total_expectation                          sum_i <H_i>,
    mean_field_energy                          T + EXT + (INT + COH) / 2,
    rest_mass_energy                           N m c**2,
    continuity_residual                        relative leading-order residual

Every energy is in hartree and every time in atomic units. Disabled terms
report 0. The continuity residual takes d_t rho0 at the recorded instant from
the Hamiltonian action, d_t rho0 = (2 / hbar) sum_i Im(phi_i^dagger H_i phi_i),
so it carries no time-discretisation error.
'''
import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from femto_pauli import settings
from hamiltonian.operators import kinetic_energy, term_energies
from hamiltonian.terms import ALL_TERMS, COH_TERMS, EXT_TERMS, INT_TERMS
from sources.densities import continuity_residual, density_rate
from utils.errors import OutputError
from utils.logger import Logger

logger = Logger(__name__).logger

# relative slack on |m_i| <= |phi_i|**2, well above round-off and below the norm-drift budget
MAGNETIZATION_SLACK = 1e-9


def columns(count):
    names = ['step', 'time']
    for i in range(count):
        names += [f'norm_{i}', f'mx_{i}', f'my_{i}', f'mz_{i}']
    names += ['mx', 'my', 'mz', 'dipole_x', 'dipole_y', 'dipole_z', 'kinetic']
    names += [t.value for t in ALL_TERMS]
    names += ['total_expectation', 'mean_field_energy', 'rest_mass_energy', 'continuity_residual']
    return names


@dataclass
class Observables:
    '''
    Fields:
        step (int): completed steps.
        time (float): time stamp.
        norms (np.ndarray): per-orbital norms, shape (N,).
        magnetizations (np.ndarray): per-orbital integral of phi^dagger sigma phi, shape (N, 3).
        dipole (np.ndarray): q * integral of x rho0 over all orbitals.
        kinetic (float): summed kinetic energy.
        energies (dict[TermId, float]): summed term energies, 0 for disabled terms.
        rest_mass_energy (float): N m c**2, kept apart from every other energy.
        continuity_residual (float | None): ||d_t rho0 + div j0|| / ||d_t rho0||,
            None for rows read back without orbitals.
    '''
    step: int
    time: float
    norms: np.ndarray
    magnetizations: np.ndarray
    dipole: np.ndarray
    kinetic: float
    energies: dict
    rest_mass_energy: float
    continuity_residual: Optional[float] = None
    warnings: list = field(default_factory=list)

    @property
    def count(self):
        return len(self.norms)

    @property
    def magnetization(self):
        return self.magnetizations.sum(axis=0)

    def group_energy(self, terms):
        return float(sum(self.energies.get(t, 0.0) for t in terms))

    @property
    def total_expectation(self):
        return self.kinetic + self.group_energy(ALL_TERMS)

    @property
    def mean_field_energy(self):
        '''Hartree-type energy functional conserved by the self-consistent dynamics.'''
        return (
            self.kinetic + self.group_energy(EXT_TERMS)
            + 0.5 * (self.group_energy(INT_TERMS) + self.group_energy(COH_TERMS))
        )

    def violations(self):
        '''Broken per-row invariants, as readable strings.'''
        problems = []
        for i, (norm, m) in enumerate(zip(self.norms, self.magnetizations)):
            if not 0.0 < norm <= 1.0 + 1e-6:
                problems.append(f'orbital {i} norm {norm:.9f} outside (0, 1 + 1e-6]')
            # |m_i| <= integral of |phi_i|**2, the squared norm
            bound = norm ** 2 * (1.0 + MAGNETIZATION_SLACK)
            if np.linalg.norm(m) > bound:
                problems.append(
                    f'orbital {i} magnetization {np.linalg.norm(m):.12f} exceeds its squared norm {norm ** 2:.12f}'
                )
        return problems

    def as_row(self):
        row = {'step': self.step, 'time': self.time}
        for i in range(self.count):
            row[f'norm_{i}'] = float(self.norms[i])
            row[f'mx_{i}'], row[f'my_{i}'], row[f'mz_{i}'] = (float(v) for v in self.magnetizations[i])
        row['mx'], row['my'], row['mz'] = (float(v) for v in self.magnetization)
        row['dipole_x'], row['dipole_y'], row['dipole_z'] = (float(v) for v in self.dipole)
        row['kinetic'] = self.kinetic
        for term in ALL_TERMS:
            row[term.value] = float(self.energies.get(term, 0.0))
        row['total_expectation'] = self.total_expectation
        row['mean_field_energy'] = self.mean_field_energy
        row['rest_mass_energy'] = self.rest_mass_energy
        row['continuity_residual'] = '' if self.continuity_residual is None else self.continuity_residual
        return row


def boundary_density_ratio(orbitals):
    '''Largest density on the box faces relative to the peak density.'''
    rho = orbitals.density()
    peak = float(np.max(rho))
    if peak == 0.0:
        return 0.0
    faces = max(
        float(np.max(np.abs(np.take(rho, index, axis=axis))))
        for axis in range(3) for index in (0, -1)
    )
    return faces / peak


def measure(state, propagator):
    '''Observables of a PropagationState whose fields match its orbitals.'''
    orbitals, fields = state.orbitals, state.fields
    grid, constants, toggles = orbitals.grid, propagator.constants, propagator.toggles
    sample = fields.sample
    enabled = [t for t in ALL_TERMS if t in toggles]

    kinetic = 0.0
    energies = {t: 0.0 for t in ALL_TERMS}
    for i, phi in enumerate(orbitals):
        kinetic += kinetic_energy(phi, constants)
        for term, value in term_energies(phi, fields.potentials[i], sample, constants, enabled).items():
            energies[term] += value

    rho = orbitals.density()
    dipole = constants.q * np.tensordot(grid.coordinates, rho, axes=([1, 2, 3], [0, 1, 2])) * grid.dV

    observables = Observables(
        step=state.step,
        time=state.time,
        norms=orbitals.norms(),
        magnetizations=orbitals.magnetizations(),
        dipole=dipole,
        kinetic=kinetic,
        energies=energies,
        rest_mass_energy=orbitals.count * constants.rest_energy,
        continuity_residual=continuity_residual(
            orbitals, density_rate(orbitals, propagator.hamiltonian(orbitals.data, fields, sample), constants),
            sample.A, constants,
        ),
    )
    ratio = boundary_density_ratio(orbitals)
    if ratio > settings.BOUNDARY_DENSITY_WARNING:
        observables.warnings.append(f'boundary density ratio {ratio:.2e}')
    for problem in observables.violations():
        logger.warning(f'Invariant violated at t = {state.time:.6g}: {problem}')
        observables.warnings.append(problem)
    return observables


def write_csv(path, rows, count):
    try:
        with open(path, 'w', newline='') as handle:
            writer = csv.DictWriter(handle, fieldnames=columns(count))
            writer.writeheader()
            for row in rows:
                writer.writerow(row.as_row() if isinstance(row, Observables) else row)
    except OSError as e:
        logger.exception(f'Error while writing observables to {path}: {str(e)}')
        raise OutputError(f'cannot write {path}: {e}') from e


def read_csv(path):
    '''Rows of an observables CSV with numeric values converted to float.'''
    try:
        with open(path, newline='') as handle:
            rows = list(csv.DictReader(handle))
    except FileNotFoundError as e:
        raise OutputError(f'observables file not found: {path}') from e
    parsed = []
    for row in rows:
        parsed.append({k: (float(v) if v not in ('', None) else None) for k, v in row.items()})
    return parsed


def orbital_count(row):
    return sum(1 for key in row if key.startswith('norm_'))


def energies_from_row(row):
    return {t: row.get(t.value) or 0.0 for t in ALL_TERMS}

