'''
Mechanism decomposition of a finished run, either from its observables CSV or
by recomputing the term energies of an orbital snapshot.
'''
from dataclasses import replace
from pathlib import Path

from analysis.mechanisms import mechanism_report
from hamiltonian.terms import TermToggles
from propagator.integrator import PropagationState, Propagator
from propagator.observables import measure, read_csv
from propagator.scenario import Scenario
from propagator.snapshots import MANIFEST_NAME, load_manifest, orbitals_from_snapshot
from utils.errors import ConfigurationError, MissingSnapshotError
from utils.logger import Logger

logger = Logger(__name__).logger


def decompose_trajectory(path, steps=None):
    '''Tables for every row of an observables CSV, or for the listed steps only.'''
    rows = read_csv(path)
    if steps is not None:
        wanted = {int(s) for s in steps}
        rows = [row for row in rows if int(row['step']) in wanted]
        if not rows:
            raise ConfigurationError(f'{path} has no rows for steps {sorted(wanted)}')
    return mechanism_report(rows)


@Logger.log_execution_time(logger)
def decompose_snapshot(manifest_path, step=None):
    '''
    Reloads the orbitals of a snapshot, rebuilds their fields at the snapshot
    time and measures every term, whatever the run had switched on.
    '''
    manifest = load_manifest(manifest_path)
    source = manifest.get('scenario_source')
    if not source:
        raise MissingSnapshotError(f'manifest {manifest_path} does not carry its scenario')
    scenario = replace(Scenario.from_dict(source), toggles=TermToggles.all_on())
    orbitals, time, snapshot_step = orbitals_from_snapshot(manifest, step)
    scenario.grid.require_same(orbitals.grid)
    propagator = Propagator.from_scenario(scenario)
    state = PropagationState(orbitals, time, snapshot_step, propagator.refresh(orbitals, time))
    return mechanism_report([measure(state, propagator)])


def decompose(path, step=None):
    '''Dispatch on the input: a run directory or manifest, or an observables CSV.'''
    path = Path(path)
    if path.is_dir() or path.name == MANIFEST_NAME or path.suffix == '.json':
        return decompose_snapshot(path, step)
    if path.suffix == '.csv':
        return decompose_trajectory(path, None if step is None else [step])
    raise ConfigurationError(f'cannot decompose {path}: expected a run directory, a manifest or an observables CSV')
