'''
Two-route check of the mean-field terms: route 1 applies the Hamiltonian
terms with potentials from the field solvers, route 2 reads the same energies
off the Hartree-reduced Breit-Pauli fields. Both routes share the kernel
softening, so the comparison tests the formulas rather than the treatment of
the 1/r**3 singularity. A third column repeats route 1 with the spectral
Poisson solver on the same padded box; it is reported for comparison and does
not decide pass or fail, because its kernels are not sampled the way route 2's are.
'''
import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from breit_pauli.reduction import hartree_reduce
from femto_pauli import settings
from field_solvers.assemble import assemble_potentials
from field_solvers.config import SolverConfig
from hamiltonian.operators import term_energies
from hamiltonian.pulse import ExternalFieldSample
from hamiltonian.terms import COH_TERMS, INT_TERMS
from sources.densities import build_sources
from utils.errors import OutputError, ValidationFailure
from utils.logger import Logger

logger = Logger(__name__).logger

REPORT_COLUMNS = ('term', 'route1', 'route2', 'deviation', 'passed', 'spectral', 'spectral_deviation')


def route1_energies(pair, A_ext=None, method='green-kernel'):
    '''Term energies of the target from the Hamiltonian module, with its partners' potentials solved by `method`.'''
    A = pair.A if A_ext is None else np.asarray(A_ext, dtype=float)
    constants = pair.constants
    solver = SolverConfig(method=method, padding_factor=pair.padding, softening=pair.softening)
    A_source = A if np.any(A) else None
    sources = build_sources(pair.orbitals, A_source, exclusion=pair.target, constants=constants)
    potentials = assemble_potentials(sources, A_source, solver, constants)
    sample = ExternalFieldSample(0.0, A, np.zeros(3), np.zeros(3), 0.0)
    return term_energies(pair.orbitals.orbital(pair.target), potentials, sample, constants, COH_TERMS + INT_TERMS)


def relative_deviation(route1, route2):
    return abs(route1 - route2) / max(abs(route1), settings.BP_SCALE_FLOOR)


@dataclass
class EquivalenceRow:
    '''
    Fields:
        term (TermId): compared term.
        route1 (float): energy from the Hamiltonian module.
        route2 (float): energy from the Breit-Pauli reduction.
        deviation (float): |route1 - route2| / max(|route1|, BP_SCALE_FLOOR).
        passed (bool): deviation within the tolerance.
        spectral (float | None): route 1 with spectral-Poisson potentials.
        spectral_deviation (float | None): its deviation from route 2.
    '''
    term: object
    route1: float
    route2: float
    deviation: float
    passed: bool
    spectral: Optional[float] = None
    spectral_deviation: Optional[float] = None

    def as_row(self):
        return {
            'term': self.term.value,
            'route1': self.route1,
            'route2': self.route2,
            'deviation': self.deviation,
            'passed': 'pass' if self.passed else 'fail',
            'spectral': '' if self.spectral is None else self.spectral,
            'spectral_deviation': '' if self.spectral_deviation is None else self.spectral_deviation,
        }


@dataclass
class EquivalenceReport:
    rows: list
    target: int
    softening: float
    quadrature: str
    tolerance: float
    A_ext: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def passed(self):
        return all(row.passed for row in self.rows)

    @property
    def failures(self):
        return [row for row in self.rows if not row.passed]

    def row(self, term):
        for row in self.rows:
            if row.term == term:
                return row
        raise KeyError(term)

    def raise_for_failures(self):
        if self.passed:
            return
        worst = max(self.failures, key=lambda r: r.deviation)
        raise ValidationFailure(
            f'{len(self.failures)} of {len(self.rows)} terms disagree beyond {self.tolerance:.0e} '
            f'(worst {worst.term.value}: {worst.deviation:.3e})',
            failed=[r.term.value for r in self.failures],
        )

    def write_csv(self, path):
        try:
            with open(path, 'w', newline='') as handle:
                writer = csv.DictWriter(handle, fieldnames=REPORT_COLUMNS)
                writer.writeheader()
                for row in self.rows:
                    writer.writerow(row.as_row())
        except OSError as e:
            logger.exception(f'Error while writing equivalence report to {path}: {str(e)}')
            raise OutputError(f'cannot write {path}: {e}') from e
        return path


@Logger.log_execution_time(logger)
def equivalence_report(pair, A_ext=None, tolerance=None, spectral=True):
    '''
    Route-1 against route-2 energy of the target for the seven coherent terms
    followed by the internal ones. With `spectral` every row also carries the
    spectral-Poisson route 1 and its deviation.
    '''
    tolerance = settings.BP_RELATIVE_TOLERANCE if tolerance is None else float(tolerance)
    A = pair.A if A_ext is None else np.asarray(A_ext, dtype=float)
    route1 = route1_energies(pair, A)
    route2 = hartree_reduce(pair, A).energies
    route1_spectral = route1_energies(pair, A, 'spectral-poisson') if spectral else None
    rows = []
    for term in COH_TERMS + INT_TERMS:
        deviation = relative_deviation(route1[term], route2[term])
        row = EquivalenceRow(term, route1[term], route2[term], deviation, deviation <= tolerance)
        if route1_spectral is not None:
            row.spectral = route1_spectral[term]
            row.spectral_deviation = relative_deviation(route1_spectral[term], route2[term])
        rows.append(row)
    report = EquivalenceReport(rows, pair.target, pair.softening, pair.quadrature, tolerance, A)
    for row in report.failures:
        logger.warning(
            f'{row.term.value}: route 1 {row.route1:.9e} vs route 2 {row.route2:.9e} '
            f'(deviation {row.deviation:.3e} > {tolerance:.0e})'
        )
    return report
