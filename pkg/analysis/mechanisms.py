'''
Spin-dynamics mechanisms of the coherent mean field.

The seven coherent energies are laid out by the internal source that carries
them (rows) and the operator they act through (columns). Four cells act on the
spin indirectly: the Zeeman-like A1, the spin-orbit A2, the paramagnetic
dipolar B1 and the field-induced spin charge B2. The external Zeeman and
spin-orbit terms are the direct couplings of the spin to the laser.
'''
import csv
from dataclasses import dataclass, field

from hamiltonian.terms import (
    COH_TERMS, DESCRIPTIONS, DIRECT_SPIN_TERMS, MECHANISMS, SPIN_FREE_COHERENT, TABLE_CELLS, TABLE_COLUMNS,
    TABLE_ROWS, TermId,
)
from utils.errors import ConfigurationError, OutputError
from utils.logger import Logger

logger = Logger(__name__).logger

REQUIRED_TERMS = DIRECT_SPIN_TERMS + COH_TERMS
MECHANISM_OF = {term: label for label, term in MECHANISMS.items()}
DIRECT_OPERATORS = {TermId.ZEEMAN_EXT: 'zeeman', TermId.SOC_EXT: 'spin-orbit'}

REPORT_COLUMNS = ('step', 'time', 'coupling', 'source', 'operator', 'mechanism', 'term', 'energy')


def coupling_of(term):
    if term in DIRECT_SPIN_TERMS:
        return 'direct'
    if term in SPIN_FREE_COHERENT:
        return 'spin-free'
    return 'indirect'


def _energy(energies, term):
    for key in (term, term.value):
        value = energies.get(key)
        if value is not None:
            return float(value)
    return None


@dataclass
class MechanismTable:
    '''
    Mechanism decomposition at one time.

    Fields:
        step (int): step the energies belong to.
        time (float): time stamp (atomic units).
        energies (dict[TermId, float]): the direct and coherent energies,
            summed over orbitals, passed through unchanged.
    '''
    step: int
    time: float
    energies: dict = field(default_factory=dict)

    def cell(self, source, operator):
        '''Energy of a table cell; None for cells with no term.'''
        term = TABLE_CELLS.get((source, operator))
        return None if term is None else self.energies[term]

    @property
    def direct(self):
        return {term: self.energies[term] for term in DIRECT_SPIN_TERMS}

    @property
    def mechanisms(self):
        return {label: self.energies[term] for label, term in MECHANISMS.items()}

    @property
    def spin_free(self):
        return {term: self.energies[term] for term in SPIN_FREE_COHERENT}

    @property
    def coherent_total(self):
        '''Sum of every table cell, the expectation of the whole coherent mean field.'''
        return float(sum(self.energies[term] for term in TABLE_CELLS.values()))

    def layout(self):
        '''Rows of the source-by-operator table, None marking empty cells.'''
        return [[self.cell(source, operator) for operator in TABLE_COLUMNS] for source in TABLE_ROWS]

    def records(self):
        rows = []
        for term, operator in DIRECT_OPERATORS.items():
            rows.append(self._record(term, 'external', operator))
        for (source, operator), term in TABLE_CELLS.items():
            rows.append(self._record(term, source, operator))
        return rows

    def _record(self, term, source, operator):
        return {
            'step': self.step,
            'time': self.time,
            'coupling': coupling_of(term),
            'source': source,
            'operator': operator,
            'mechanism': MECHANISM_OF.get(term, ''),
            'term': term.value,
            'energy': self.energies[term],
        }

    def render(self):
        width = 16
        lines = [f'step {self.step}, t = {self.time:.6g}']
        lines.append(f'{"":<12}' + ''.join(f'{c:>{width}}' for c in TABLE_COLUMNS))
        for source, values in zip(TABLE_ROWS, self.layout()):
            cells = ''.join(f'{"-":>{width}}' if v is None else f'{v:>{width}.6e}' for v in values)
            lines.append(f'{source:<12}{cells}')
        for label, term in MECHANISMS.items():
            lines.append(f'{label} {term.value:<14}{self.energies[term]:.9e}  {DESCRIPTIONS[term]}')
        for term in DIRECT_SPIN_TERMS:
            lines.append(f'direct {term.value:<11}{self.energies[term]:.9e}  {DESCRIPTIONS[term]}')
        lines.append(f'coherent total     {self.coherent_total:.9e}')
        return '\n'.join(lines)


def mechanism_table(energies, step=0, time=0.0):
    '''Table of one set of term energies keyed by TermId or by term name.'''
    resolved = {term: _energy(energies, term) for term in REQUIRED_TERMS}
    missing = [term.value for term, value in resolved.items() if value is None]
    if missing:
        raise ConfigurationError(f'missing term energies: {", ".join(missing)}', missing=missing)
    return MechanismTable(int(step), float(time), resolved)


@Logger.log_function_call(logger)
def mechanism_report(records):
    '''
    One MechanismTable per record. A record is an observables row (a mapping
    with 'step', 'time' and one entry per term) or an Observables instance.
    '''
    tables = []
    for record in records:
        if hasattr(record, 'as_row'):
            record = record.as_row()
        tables.append(mechanism_table(record, record.get('step') or 0, record.get('time') or 0.0))
    return tables


def write_report(path, tables):
    try:
        with open(path, 'w', newline='') as handle:
            writer = csv.DictWriter(handle, fieldnames=REPORT_COLUMNS)
            writer.writeheader()
            for table in tables:
                writer.writerows(table.records())
    except OSError as e:
        logger.exception(f'Error while writing mechanism report to {path}: {str(e)}')
        raise OutputError(f'cannot write {path}: {e}') from e
    return path
