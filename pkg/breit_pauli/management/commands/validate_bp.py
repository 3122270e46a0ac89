from pathlib import Path

import numpy as np
from django.core.management.base import BaseCommand

from breit_pauli.equivalence import equivalence_report
from breit_pauli.pair import QUADRATURES, PairConfiguration
from breit_pauli.reduction import bp_pair_energy
from core.units import read_quantity
from hamiltonian.pulse import evaluate_pulse
from propagator.scenario import load_scenario
from utils.errors import FemtoPauliError
from utils.logger import Logger
from utils.utils import to_command_error

logger = Logger(__name__).logger


def _optional(value, width, spec):
    return f'{"-":>{width}}' if value is None else f'{value:>{width}{spec}}'


class Command(BaseCommand):
    help = (
        'Compare every internal and coherent mean-field term of a scenario\'s initial orbitals '
        'against the Hartree-reduced Breit-Pauli pair Hamiltonian.'
    )

    def add_arguments(self, parser):
        parser.add_argument('scenario', help='path to a scenario JSON file')
        parser.add_argument('--target', type=int, default=0, help='orbital the mean fields act on')
        parser.add_argument('--softening', help='shared kernel softening, e.g. "0.5" (bohr) or "0.05 nm"')
        parser.add_argument('--quadrature', choices=QUADRATURES, default='grid-convolution')
        parser.add_argument('--time', help='pulse sampling time (default: pulse centre t0)')
        parser.add_argument('--tolerance', type=float, help='relative tolerance (default BP_RELATIVE_TOLERANCE)')
        parser.add_argument('--output', help='write the report as CSV to this path')

    def handle(self, *args, **options):
        try:
            scenario = load_scenario(options['scenario'])
            pair = self._pair(scenario, options)
            report = equivalence_report(pair, tolerance=options.get('tolerance'))
            if options.get('output'):
                report.write_csv(Path(options['output']))
            self._print(pair, report)
            report.raise_for_failures()
        except FemtoPauliError as e:
            logger.exception(f'Breit-Pauli validation of {options["scenario"]} failed: {str(e)}')
            raise to_command_error(e) from e

    @staticmethod
    def _pair(scenario, options):
        if options.get('time') is not None:
            t = read_quantity(options['time'], 'time', 'atomic')
        else:
            t = scenario.pulse.t0 if scenario.pulse else 0.0
        sample = evaluate_pulse(scenario.pulse, t, scenario.grid)
        softening = options.get('softening')
        return PairConfiguration(
            orbitals=scenario.initial_orbitals(),
            target=options['target'],
            A_ext=np.asarray(sample.A, dtype=float) if sample.has_vector_potential() else None,
            quadrature=options['quadrature'],
            softening=read_quantity(softening, 'length', 'atomic') if softening is not None else None,
            constants=scenario.constants,
        )

    def _print(self, pair, report):
        self.stdout.write(pair.describe())
        self.stdout.write(f'A_ext = {np.array2string(report.A_ext, precision=6)}')
        self.stdout.write(
            f'{"term":<16}{"route 1":>18}{"route 2":>18}{"deviation":>12}{"spectral":>18}{"spec. dev.":>12}  result'
        )
        for row in report.rows:
            self.stdout.write(
                f'{row.term.value:<16}{row.route1:>18.9e}{row.route2:>18.9e}{row.deviation:>12.3e}'
                f'{_optional(row.spectral, 18, ".9e")}{_optional(row.spectral_deviation, 12, ".3e")}  '
                f'{"pass" if row.passed else "FAIL"}'
            )
        if pair.partners:
            energies = bp_pair_energy(pair)
            blocks = ', '.join(f'{name} {value:.9e}' for name, value in energies.blocks.items())
            self.stdout.write(f'pair energy blocks: {blocks}')
            if energies.flagged:
                self.stdout.write(f'softening-sensitive blocks: {", ".join(energies.flagged)}')
        verdict = 'all terms agree' if report.passed else f'{len(report.failures)} terms disagree'
        self.stdout.write(f'{verdict} within {report.tolerance:.0e}')
