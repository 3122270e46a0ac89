from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from propagator.integrator import Propagator
from propagator.observables import columns, measure, write_csv
from propagator.snapshots import (
    OBSERVABLES_NAME, SnapshotWriter, build_manifest, snapshot_arrays, write_manifest,
)
from utils.errors import FemtoPauliError
from utils.logger import Logger
from utils.utils import ensure_directory, utc_timestamp

logger = Logger(__name__).logger


@dataclass
class RunResult:
    '''
    Fields:
        observables (list[Observables]): recorded rows in time order.
        manifest (dict): run manifest (also on disk when an output directory is used).
        output_dir (Path | None): where the files went.
        final_state (PropagationState): last state reached.
    '''
    observables: list
    manifest: dict
    output_dir: Optional[Path] = None
    final_state: object = None
    warnings: list = field(default_factory=list)

    @property
    def status(self):
        return self.manifest['status']


class Run:
    '''
    One trajectory of a scenario: the time loop with its observables,
    snapshots and manifest. Without an output directory everything stays in memory.
    '''

    def __init__(self, scenario, output_dir=None, run_id=None):
        self.scenario = scenario
        self.output_dir = ensure_directory(output_dir) if output_dir is not None else None
        self.propagator = Propagator.from_scenario(scenario)
        self.manifest = build_manifest(scenario, run_id=run_id)
        self.manifest['observables_columns'] = columns(len(scenario.orbitals))
        self.writer = SnapshotWriter(self.output_dir) if self.output_dir and scenario.outputs.snapshot_every else None
        self.observables = []
        self.warnings = []
        self._warned = set()

    def _record(self, state, last_step):
        outputs = self.scenario.outputs
        if outputs.records(state.step, last_step):
            row = measure(state, self.propagator)
            for warning in row.warnings:
                kind = ' '.join(warning.split()[:3])
                if kind not in self._warned:
                    self._warned.add(kind)
                    self.warnings.append(warning)
                    logger.warning(f'{self.scenario.name}: {warning} (t = {state.time:.6g})')
            self.observables.append(row)
        if self.writer is not None and outputs.snapshots(state.step, last_step):
            arrays = snapshot_arrays(
                outputs.quantities, state.orbitals, state.fields.sample, self.scenario.solver, self.scenario.constants,
            )
            self.writer.write_all(arrays, state.step, state.time)

    def _finish(self, status, state, error=None):
        self.manifest.update(
            status=status,
            finished_at=utc_timestamp(),
            final_time=state.time if state is not None else None,
            steps_completed=state.step if state is not None else 0,
            notes=sorted(set(self.propagator.notes)),
            warnings=self.warnings,
        )
        if error is not None:
            self.manifest['error'] = error.as_dict() if isinstance(error, FemtoPauliError) else {'message': str(error)}
        if self.writer is not None:
            self.manifest['snapshots'] = self.writer.index
        if self.output_dir is not None:
            write_csv(self.output_dir / OBSERVABLES_NAME, self.observables, len(self.scenario.orbitals))
            write_manifest(self.output_dir, self.manifest)

    @Logger.log_execution_time(logger)
    def execute(self):
        scenario = self.scenario
        last_step = scenario.steps
        logger.info(
            f'Running {scenario.name}: {len(scenario.orbitals)} orbitals on {scenario.grid.describe()}, '
            f'{last_step} steps of dt = {scenario.dt:.4g}, scf {scenario.scf.mode}'
        )
        state = None
        try:
            state = self.propagator.initial_state(scenario.initial_orbitals())
            self._record(state, last_step)
            while state.step < last_step:
                state = self.propagator.step(state, scenario.dt)
                self._record(state, last_step)
        except FemtoPauliError as e:
            status = 'aborted' if e.category == 'stability' else 'failed'
            logger.exception(f'Run {scenario.name} {status} at t = {e.context.get("time", "?")}: {str(e)}')
            self._finish(status, state, e)
            raise
        except Exception as e:
            logger.exception(f'Run {scenario.name} failed: {str(e)}')
            self._finish('failed', state, e)
            raise
        self._finish('completed', state)
        return RunResult(self.observables, self.manifest, self.output_dir, state, self.warnings)


def run(scenario, output_dir=None, run_id=None):
    '''Propagate `scenario` and return its trajectory; files are written when output_dir is given.'''
    return Run(scenario, output_dir, run_id).execute()
