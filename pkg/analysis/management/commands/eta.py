from django.core.management.base import BaseCommand

from analysis.estimates import (
    EtaInputs, SI, eta, fluence_to_field, magnitude_estimates, reference_table, summary,
)
from core.units import parse_quantity
from utils.errors import ConfigurationError, FemtoPauliError
from utils.logger import Logger
from utils.utils import to_command_error, write_json

logger = Logger(__name__).logger

MJ_PER_CM2 = 10.0
FEMTOSECOND = 1e-15


def _si(value, dimension, bare_unit=1.0):
    '''SI value of a command-line quantity; bare numbers are multiplied by `bare_unit`.'''
    try:
        return float(value) * bare_unit
    except ValueError:
        return parse_quantity(value, dimension, 'si')


class Command(BaseCommand):
    help = (
        'Yield parameter eta = (r_ij / lambda_C)(e E lambda / m c^2) and the energy scales of the '
        'external, internal and coherent sectors. Bare numbers are SI, except --fluence (mJ/cm2) '
        'and --dt (fs).'
    )

    def add_arguments(self, parser):
        parser.add_argument('--r', help='characteristic electron distance, e.g. 1e-10 or "1 A"')
        parser.add_argument('--E', help='peak electric field, e.g. 4e8 or "4e8 V/m"')
        parser.add_argument('--lambda', dest='wavelength', help='laser wavelength, e.g. 800e-9 or "800nm"')
        parser.add_argument('--fluence', help='pulse fluence in mJ/cm2 (needs --dt)')
        parser.add_argument('--dt', help='pulse duration in fs (with --fluence)')
        parser.add_argument('--electrons', type=int, default=1, help='electron count N of the internal scales')
        parser.add_argument('--reference', action='store_true', help='print the three reference points')
        parser.add_argument('--output', help='write the report as JSON to this path')

    def handle(self, *args, **options):
        try:
            report = self.report(options)
            if options.get('output'):
                write_json(options['output'], report)
        except FemtoPauliError as e:
            logger.exception(f'eta report failed: {str(e)}')
            raise to_command_error(e) from e
        self._print(report)

    @staticmethod
    def _field(options):
        if options.get('fluence') is None:
            return _si(options['E'], 'electric_field') if options.get('E') is not None else None
        if options.get('E') is not None:
            raise ConfigurationError('give either --E or --fluence, not both')
        if options.get('dt') is None:
            raise ConfigurationError('--fluence needs the pulse duration --dt')
        fluence = _si(options['fluence'], 'fluence', MJ_PER_CM2) / MJ_PER_CM2
        duration = _si(options['dt'], 'time', FEMTOSECOND)
        return fluence_to_field(fluence, duration)

    def report(self, options):
        report = {'constants': summary(SI)}
        E_ext = self._field(options)
        if E_ext is not None:
            report['E_ext'] = E_ext
        if options.get('reference'):
            report['reference'] = reference_table(SI)
        if options.get('r') is None:
            return report
        if E_ext is None or options.get('wavelength') is None:
            raise ConfigurationError('eta needs --r together with --lambda and a field (--E or --fluence with --dt)')
        r_ij = _si(options['r'], 'length')
        wavelength = _si(options['wavelength'], 'length')
        report['eta'] = eta(EtaInputs(r_ij, E_ext, wavelength, SI))
        report['estimates'] = magnitude_estimates(r_ij, options['electrons'], E_ext, wavelength, SI).as_dict()
        return report

    def _print(self, report):
        constants = report['constants']
        self.stdout.write(
            f'lambda_C = {constants["lambda_C"]:.6e} m, mc^2 = {constants["rest_energy_eV"]:.6e} eV, '
            f'alpha = {constants["fine_structure"]:.9f}'
        )
        if 'E_ext' in report:
            self.stdout.write(f'E_ext = {report["E_ext"]:.4e} V/m')
        if 'eta' in report:
            estimates = report['estimates']
            self.stdout.write(f'eta = {report["eta"]:.6e} ({100.0 * report["eta"]:.2f} %)')
            self.stdout.write(f'U_ext series (J): {", ".join(f"{v:.4e}" for v in estimates["U_ext"])}')
            self.stdout.write(f'U_int series (J): {", ".join(f"{v:.4e}" for v in estimates["U_int"])}')
            self.stdout.write(f'U_int_ext scale (J): {estimates["U_int_ext"]:.4e}')
        for row in report.get('reference', []):
            self.stdout.write(
                f'{row["point"]}: eta exact {100.0 * row["eta_exact"]:.2f} %, quoted {100.0 * row["eta_quoted"]:.0f} %'
            )
