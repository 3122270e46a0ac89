from datetime import datetime, timezone as dt_tz
from pathlib import Path

from django.core.management.base import BaseCommand

from femto_pauli import settings
from propagator.models import SimulationRun
from propagator.runner import run
from propagator.scenario import load_scenario
from utils.errors import FemtoPauliError
from utils.logger import Logger
from utils.utils import to_command_error

logger = Logger(__name__).logger


class Command(BaseCommand):
    help = 'Propagate a scenario file and write observables.csv, manifest.json and snapshots.'

    def add_arguments(self, parser):
        parser.add_argument('scenario', help='path to a scenario JSON file')
        parser.add_argument('--output', help='output directory (default: OUTPUT_DIR/<run id>)')
        parser.add_argument('--no-record', action='store_true', help='do not register the run in the database')

    def handle(self, *args, **options):
        record = None
        try:
            scenario = load_scenario(options['scenario'])
            if not options.get('no_record'):
                record = SimulationRun.objects.create(scenario_name=scenario.name, output_dir='')
            output_dir = Path(options['output']) if options.get('output') else self._default_output(scenario, record)
            if record is not None:
                record.save_changes(output_dir=str(output_dir))

            result = run(scenario, output_dir, run_id=record.run_id if record else None)
        except FemtoPauliError as e:
            if record is not None:
                status = 'aborted' if e.category == 'stability' else 'failed'
                record.mark_finished(status, final_time=e.context.get('time'), error=e)
            raise to_command_error(e) from e

        if record is not None:
            record.mark_finished(
                'completed', final_time=result.final_state.time, steps=result.final_state.step,
                manifest=result.manifest,
            )
        last = result.observables[-1]
        self.stdout.write(
            f'{record.run_id if record else scenario.name}: {result.final_state.step} steps to t = {last.time:.6g}, '
            f'mean-field energy {last.mean_field_energy:.10g} Eh, output in {output_dir}'
        )

    @staticmethod
    def _default_output(scenario, record):
        if record is not None:
            return settings.OUTPUT_DIR / record.run_id
        stamp = datetime.now(tz=dt_tz.utc).strftime('%Y%m%dT%H%M%S')
        return settings.OUTPUT_DIR / f'{scenario.name}-{stamp}'
