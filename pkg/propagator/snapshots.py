'''
Field snapshots as flat little-endian binaries plus the run manifest.

Orbitals are stored as complex128 ('<c16') with shape (N, 2, nx, ny, nz),
scalar fields as '<f8' with shape (nx, ny, nz) and vector fields as '<f8'
with shape (3, nx, ny, nz), in C order. Files are named
snapshots/<quantity>_<step:06d>.bin and indexed in manifest.json.
'''
from pathlib import Path

import numpy as np

from core.grid import Grid3
from core.spectral import spin_density_array
from core.spinors import SpinorOrbitalSet
from femto_pauli import settings
from field_solvers.assemble import assemble_potentials
from sources.densities import build_sources
from utils.errors import MissingSnapshotError, OutputError
from utils.logger import Logger
from utils.utils import ensure_directory, read_json, utc_timestamp, write_json

logger = Logger(__name__).logger

MANIFEST_NAME = 'manifest.json'
OBSERVABLES_NAME = 'observables.csv'
SNAPSHOT_DIR = 'snapshots'

# recorded in every manifest
DEVIATIONS = (
    'periodic box with spectral derivatives instead of all-space integrals',
    'products of a field with p applied in Hermitian (Weyl) ordering',
    'internal potentials quasi-static, rebuilt from the instantaneous orbitals',
    'the second-order current is a diagnostic and never sources a field',
    'a static magnetic field couples through the Zeeman term only',
)


def snapshot_arrays(quantities, orbitals, sample, solver, constants):
    '''Arrays for the requested quantities; potentials are those of all orbitals together.'''
    arrays = {}
    if 'orbitals' in quantities:
        arrays['orbitals'] = orbitals.data
    if 'rho0' in quantities:
        arrays['rho0'] = orbitals.density()
    if 'spin_density' in quantities:
        arrays['spin_density'] = spin_density_array(orbitals.data).sum(axis=0)
    if {'current', 'phi0', 'a2'} & set(quantities):
        A_ext = sample.A if sample.has_vector_potential() else None
        sources = build_sources(orbitals, A_ext, None, constants)
        if 'current' in quantities:
            arrays['current'] = sources.j0.data
        if {'phi0', 'a2'} & set(quantities):
            potentials = assemble_potentials(sources, A_ext, solver, constants)
            if 'phi0' in quantities:
                arrays['phi0'] = potentials.phi0.data
            if 'a2' in quantities:
                arrays['a2'] = potentials.a2_total.data
    return arrays


class SnapshotWriter:
    '''
    Writes snapshot files under <directory>/snapshots and keeps their index.
    '''

    def __init__(self, directory):
        self.directory = Path(directory)
        self.snapshot_dir = ensure_directory(self.directory / SNAPSHOT_DIR)
        self.index = []

    def write(self, quantity, step, time, array):
        array = np.asarray(array)
        dtype = '<c16' if np.iscomplexobj(array) else '<f8'
        name = f'{quantity}_{step:06d}.bin'
        path = self.snapshot_dir / name
        try:
            np.ascontiguousarray(array, dtype=dtype).tofile(path)
        except OSError as e:
            logger.exception(f'Error while writing snapshot {path}: {str(e)}')
            raise OutputError(f'cannot write snapshot {path}: {e}') from e
        entry = {
            'field': quantity,
            'step': int(step),
            'time': float(time),
            'file': f'{SNAPSHOT_DIR}/{name}',
            'dtype': dtype,
            'shape': list(array.shape),
        }
        self.index.append(entry)
        return entry

    def write_all(self, arrays, step, time):
        return [self.write(quantity, step, time, array) for quantity, array in arrays.items()]


def build_manifest(scenario, run_id=None, started_at=None):
    return {
        'program': 'femto_pauli',
        'version': settings.VERSION,
        'run_id': run_id,
        'started_at': started_at or utc_timestamp(),
        'finished_at': None,
        'status': 'running',
        'units': 'atomic (hbar = m = e = 1, eps0 = 1/(4 pi))',
        'grid': scenario.grid.as_dict(),
        'constants': scenario.constants.as_dict(),
        'solver': scenario.solver.as_dict(),
        'toggles': scenario.toggles.as_dict(),
        'scenario': scenario.as_dict(),
        'scenario_source': scenario.raw,
        'deviations': list(DEVIATIONS),
        'notes': [],
        'warnings': [],
        'observables': OBSERVABLES_NAME,
        'snapshots': [],
    }


def write_manifest(directory, manifest):
    path = Path(directory) / MANIFEST_NAME
    write_json(path, manifest)
    return path


def load_manifest(path):
    '''Manifest from a run directory or a manifest file; adds its directory under '_root'.'''
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise MissingSnapshotError(f'no manifest at {path}')
    manifest = read_json(path)
    manifest['_root'] = str(path.parent)
    return manifest


def find_entry(manifest, quantity, step=None):
    '''Index entry for a quantity at `step`, or the latest one when step is None.'''
    entries = [e for e in manifest.get('snapshots', []) if e['field'] == quantity]
    if step is not None:
        entries = [e for e in entries if e['step'] == int(step)]
    if not entries:
        available = sorted({e['step'] for e in manifest.get('snapshots', []) if e['field'] == quantity})
        raise MissingSnapshotError(
            f'no {quantity} snapshot at step {step}; available steps: {available or "none"}',
            quantity=quantity, step=step,
        )
    return max(entries, key=lambda e: e['step'])


def read_snapshot(manifest, quantity, step=None):
    '''(array, entry) for one snapshot, read back with the recorded dtype and shape.'''
    entry = find_entry(manifest, quantity, step)
    path = Path(manifest.get('_root', '.')) / entry['file']
    try:
        data = np.fromfile(path, dtype=entry['dtype'])
    except FileNotFoundError as e:
        raise MissingSnapshotError(f'snapshot file missing: {path}') from e
    expected = int(np.prod(entry['shape']))
    if data.size != expected:
        raise OutputError(f'snapshot {path} holds {data.size} values, expected {expected}')
    return data.reshape(entry['shape']), entry


def orbitals_from_snapshot(manifest, step=None):
    '''(SpinorOrbitalSet, time, step) from an orbital snapshot.'''
    data, entry = read_snapshot(manifest, 'orbitals', step)
    grid = Grid3(n=tuple(manifest['grid']['n']), box=tuple(manifest['grid']['box']))
    return SpinorOrbitalSet(grid, data), entry['time'], entry['step']
