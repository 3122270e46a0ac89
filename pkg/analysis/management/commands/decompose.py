from pathlib import Path

from django.core.management.base import BaseCommand

from analysis.decompose import decompose
from analysis.mechanisms import write_report
from utils.errors import FemtoPauliError
from utils.logger import Logger
from utils.utils import to_command_error

logger = Logger(__name__).logger


class Command(BaseCommand):
    help = (
        'Spin-mechanism table of a run: from its observables CSV, or recomputed from an '
        'orbital snapshot given the run directory or its manifest.'
    )

    def add_arguments(self, parser):
        parser.add_argument('source', help='observables CSV, run directory or manifest.json')
        parser.add_argument('--step', type=int, help='step to decompose (default: every CSV row, or the last snapshot)')
        parser.add_argument('--output', help='write the table as CSV to this path')

    def handle(self, *args, **options):
        try:
            tables = decompose(options['source'], options.get('step'))
            if options.get('output'):
                write_report(Path(options['output']), tables)
        except FemtoPauliError as e:
            logger.exception(f'Decomposition of {options["source"]} failed: {str(e)}')
            raise to_command_error(e) from e
        for table in tables:
            self.stdout.write(table.render())
