'''
Scenario files: the human-readable JSON description of one run.

    {
      "name": "two-electrons",
      "units": "atomic",
      "grid": {"n": 32, "box": 16},
      "constants": {"c": 137.036},
      "orbitals": [{"center": [-1.5, 0, 0], "width": 1.5, "momentum": [0, 0, 0], "spin": "+x"}],
      "pulse": {"E0": "4e8 V/m", "wavelength": "800nm", "duration": "50fs", "envelope": "gaussian"},
      "static_field": ["0.1 T", 0, 0],
      "dt": 0.01,
      "t_end": 10,
      "scf": {"refresh_every_substep": false, "fixed_point_iters": 0, "tol": 1e-8},
      "solver": {"method": "spectral-poisson", "padding_factor": 1},
      "terms": {"preset": "all", "soc-ext": false},
      "self_interaction": "exclude",
      "outputs": {"every": 10, "snapshot_every": 100, "quantities": ["orbitals", "rho0"]}
    }

Strings carry their own unit ("800nm", "50fs"); bare numbers are read in the
scenario's `units` ('atomic' by default, or 'si').
'''
from dataclasses import dataclass, field
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from core.constants import PhysicalConstants
from core.grid import Grid3
from core.spinors import SpinorOrbitalSet, gaussian_packet
from core.units import read_quantity
from femto_pauli import settings
from field_solvers.config import SolverConfig
from hamiltonian.pulse import LaserPulse
from hamiltonian.terms import TermToggles
from utils.errors import ConfigurationError
from utils.logger import Logger

logger = Logger(__name__).logger

SCENARIO_KEYS = {
    'name', 'description', 'units', 'grid', 'constants', 'orbitals', 'pulse', 'static_field', 'dt',
    't_end', 'scf', 'solver', 'terms', 'self_interaction', 'outputs',
}
SELF_INTERACTION_MODES = ('exclude', 'include')
SNAPSHOT_QUANTITIES = ('orbitals', 'rho0', 'spin_density', 'current', 'phi0', 'a2')
RK4_IMAGINARY_AXIS_LIMIT = 2.0 * math.sqrt(2.0)


def _reject_unknown(payload, known, block):
    unknown = set(payload) - set(known)
    if unknown:
        raise ConfigurationError(f'unknown {block} keys: {", ".join(sorted(unknown))}')


def _vector(values, dimension, units, name):
    if isinstance(values, (str, int, float)) or values is None or len(values) != 3:
        raise ConfigurationError(f'{name} needs three components, got {values!r}')
    return tuple(read_quantity(v, dimension, units) for v in values)


@dataclass(frozen=True)
class OrbitalSpec:
    '''
    Initial Gaussian packet.

    Fields:
        center (tuple): packet centre.
        width (float): standard deviation of the density.
        momentum (tuple): mean momentum hbar k.
        spin (str | tuple): spin direction, shorthand or 3-vector.
    '''
    center: tuple
    width: float
    momentum: tuple = (0.0, 0.0, 0.0)
    spin: object = 'up'

    @classmethod
    def from_dict(cls, payload, units='atomic', hbar=1.0):
        _reject_unknown(payload, {'center', 'width', 'momentum', 'spin'}, 'orbital')
        if 'width' not in payload:
            raise ConfigurationError('every orbital needs a width')
        k = _vector(payload.get('momentum', (0, 0, 0)), 'wavevector', units, 'momentum')
        spin = payload.get('spin', 'up')
        return cls(
            center=_vector(payload.get('center', (0, 0, 0)), 'length', units, 'center'),
            width=read_quantity(payload['width'], 'length', units),
            momentum=tuple(hbar * v for v in k),
            spin=spin if isinstance(spin, str) else tuple(float(v) for v in spin),
        )

    def build(self, grid, hbar=1.0):
        return gaussian_packet(grid, self.center, self.width, self.momentum, self.spin, hbar)

    def as_dict(self):
        return {'center': list(self.center), 'width': self.width, 'momentum': list(self.momentum), 'spin': self.spin}


@dataclass(frozen=True)
class SCFConfig:
    '''
    Time stepping of self-consistency. The default one-step lag drifts the
    mean-field energy at order dt; either alternative keeps it to RK4 accuracy.

    Fields:
        refresh_every_substep (bool): rebuild the fields at every RK4 stage
            instead of once per step.
        fixed_point_iters (int): > 0 repeats each step with fields rebuilt at
            the mid-step orbitals until the orbitals change by less than tol.
        tol (float): fixed-point tolerance on the max orbital change.
    '''
    refresh_every_substep: bool = False
    fixed_point_iters: int = 0
    tol: float = 1e-8

    def __post_init__(self):
        if self.fixed_point_iters < 0:
            raise ConfigurationError(f'fixed_point_iters must be >= 0, got {self.fixed_point_iters}')
        if not self.tol > 0.0:
            raise ConfigurationError(f'scf tol must be positive, got {self.tol}')

    @classmethod
    def from_dict(cls, payload):
        payload = dict(payload or {})
        _reject_unknown(payload, {'refresh_every_substep', 'fixed_point_iters', 'tol'}, 'scf')
        return cls(
            refresh_every_substep=bool(payload.get('refresh_every_substep', False)),
            fixed_point_iters=int(payload.get('fixed_point_iters', 0)),
            tol=float(payload.get('tol', 1e-8)),
        )

    @property
    def mode(self):
        if self.fixed_point_iters > 0:
            return 'fixed-point'
        return 'every-substep' if self.refresh_every_substep else 'one-step-lag'


@dataclass(frozen=True)
class OutputPlan:
    '''
    Fields:
        every (int): observables are recorded every `every` steps (and at the end).
        snapshot_every (int | None): snapshot cadence in steps; None writes none.
        quantities (tuple): snapshot quantities, a subset of SNAPSHOT_QUANTITIES.
    '''
    every: int = 1
    snapshot_every: Optional[int] = None
    quantities: tuple = ('orbitals',)

    def __post_init__(self):
        if self.every < 1:
            raise ConfigurationError(f'outputs.every must be >= 1, got {self.every}')
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise ConfigurationError(f'outputs.snapshot_every must be >= 1, got {self.snapshot_every}')
        unknown = set(self.quantities) - set(SNAPSHOT_QUANTITIES)
        if unknown:
            raise ConfigurationError(
                f'unknown snapshot quantities {sorted(unknown)}; expected a subset of {SNAPSHOT_QUANTITIES}'
            )

    @classmethod
    def from_dict(cls, payload):
        payload = dict(payload or {})
        _reject_unknown(payload, {'every', 'snapshot_every', 'quantities'}, 'outputs')
        snapshot_every = payload.get('snapshot_every')
        return cls(
            every=int(payload.get('every', 1)),
            snapshot_every=None if snapshot_every is None else int(snapshot_every),
            quantities=tuple(payload.get('quantities', ('orbitals',))),
        )

    def records(self, step, last_step):
        return step % self.every == 0 or step == last_step

    def snapshots(self, step, last_step):
        if self.snapshot_every is None or not self.quantities:
            return False
        return step % self.snapshot_every == 0 or step == last_step


def stability_limit(grid, constants):
    '''
    Largest admissible RK4 step: the configured C m h**2 / hbar, capped by the
    imaginary-axis stability limit of RK4 for the largest kinetic eigenvalue
    of the grid.
    '''
    h = min(grid.spacing)
    configured = settings.RK4_STABILITY_CONSTANT * constants.m * h ** 2 / constants.hbar
    largest = constants.hbar * float(np.max(grid.k_squared)) / (2.0 * constants.m)
    return min(configured, RK4_IMAGINARY_AXIS_LIMIT / largest)


@dataclass(frozen=True)
class Scenario:
    '''
    Fully resolved run description in atomic units.

    Fields:
        name (str): scenario name, used for output directories and the run registry.
        grid (Grid3): simulation grid.
        constants (PhysicalConstants): atomic-unit constants (c may be overridden).
        orbitals (tuple[OrbitalSpec]): initial packets.
        pulse (LaserPulse | None): laser pulse, None for field-free runs.
        static_field (tuple | None): uniform static B, Zeeman coupling only.
        dt (float): time step.
        t_end (float): horizon; 0 records the initial observables only.
        scf (SCFConfig): self-consistency policy.
        solver (SolverConfig): field solver configuration.
        toggles (TermToggles): enabled Hamiltonian terms.
        self_interaction (str): 'exclude' leaves the target orbital out of its own
            sources, 'include' keeps it.
        outputs (OutputPlan): output cadence and snapshot quantities.
        raw (dict): the scenario as read, kept for the manifest.
    '''
    name: str
    grid: Grid3
    constants: PhysicalConstants
    orbitals: tuple
    pulse: Optional[LaserPulse]
    static_field: Optional[tuple]
    dt: float
    t_end: float
    scf: SCFConfig = SCFConfig()
    solver: SolverConfig = SolverConfig()
    toggles: TermToggles = TermToggles()
    self_interaction: str = 'exclude'
    outputs: OutputPlan = OutputPlan()
    raw: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.orbitals:
            raise ConfigurationError('a scenario needs at least one orbital')
        if self.self_interaction not in SELF_INTERACTION_MODES:
            raise ConfigurationError(
                f'unknown self_interaction {self.self_interaction!r}; expected one of {SELF_INTERACTION_MODES}'
            )
        if not self.dt > 0.0:
            raise ConfigurationError(f'dt must be positive, got {self.dt}')
        if self.t_end < 0.0 or (0.0 < self.t_end < self.dt):
            raise ConfigurationError(f't_end must be 0 or at least dt, got {self.t_end} with dt {self.dt}')
        limit = stability_limit(self.grid, self.constants)
        if self.dt > limit:
            raise ConfigurationError(
                f'dt = {self.dt:.4g} exceeds the RK4 stability bound {limit:.4g} for spacing {min(self.grid.spacing):.4g}',
                dt=self.dt, limit=limit,
            )
        h = max(self.grid.spacing)
        for index, spec in enumerate(self.orbitals):
            if spec.width < 2.0 * h:
                raise ConfigurationError(
                    f'orbital {index} width {spec.width:.4g} is below two grid spacings ({2.0 * h:.4g})',
                    orbital=index,
                )

    @property
    def steps(self):
        return int(round(self.t_end / self.dt))

    def initial_orbitals(self):
        return SpinorOrbitalSet.from_fields([spec.build(self.grid, self.constants.hbar) for spec in self.orbitals])

    @classmethod
    def from_dict(cls, payload, name=None):
        payload = dict(payload)
        _reject_unknown(payload, SCENARIO_KEYS, 'scenario')
        units = payload.get('units', 'atomic')
        if units not in ('atomic', 'si'):
            raise ConfigurationError(f'scenario units must be "atomic" or "si", got {units!r}')

        constants_block = dict(payload.get('constants') or {})
        _reject_unknown(constants_block, {'system', 'c'}, 'constants')
        if constants_block.get('system', 'atomic') != 'atomic':
            raise ConfigurationError('the propagation runs in atomic units; constants.system must be "atomic"')
        constants = PhysicalConstants.atomic(constants_block.get('c'))

        grid_block = payload.get('grid')
        if not grid_block or 'n' not in grid_block or 'box' not in grid_block:
            raise ConfigurationError('scenario needs grid.n and grid.box')
        _reject_unknown(grid_block, {'n', 'box'}, 'grid')
        box = grid_block['box']
        box = [box] * 3 if isinstance(box, (int, float, str)) else list(box)
        grid = Grid3(n=grid_block['n'], box=tuple(read_quantity(b, 'length', units) for b in box))

        orbitals = tuple(OrbitalSpec.from_dict(o, units, constants.hbar) for o in payload.get('orbitals') or ())
        pulse = LaserPulse.from_dict(payload['pulse'], constants, units) if payload.get('pulse') else None
        static = payload.get('static_field')
        static = _vector(static, 'magnetic_field', units, 'static_field') if static is not None else None
        for key in ('dt', 't_end'):
            if key not in payload:
                raise ConfigurationError(f'scenario needs {key}')

        return cls(
            name=str(payload.get('name') or name or 'scenario'),
            grid=grid,
            constants=constants,
            orbitals=orbitals,
            pulse=pulse,
            static_field=static,
            dt=read_quantity(payload['dt'], 'time', units),
            t_end=read_quantity(payload['t_end'], 'time', units),
            scf=SCFConfig.from_dict(payload.get('scf')),
            solver=SolverConfig.from_dict(payload.get('solver')),
            toggles=TermToggles.from_dict(payload.get('terms')),
            self_interaction=payload.get('self_interaction', 'exclude'),
            outputs=OutputPlan.from_dict(payload.get('outputs')),
            raw=payload,
        )

    def as_dict(self):
        '''Resolved scenario in atomic units, as recorded in the manifest.'''
        return {
            'name': self.name,
            'grid': self.grid.as_dict(),
            'constants': self.constants.as_dict(),
            'orbitals': [o.as_dict() for o in self.orbitals],
            'pulse': self.pulse.as_dict() if self.pulse else None,
            'static_field': list(self.static_field) if self.static_field else None,
            'dt': self.dt,
            't_end': self.t_end,
            'steps': self.steps,
            'scf': {
                'refresh_every_substep': self.scf.refresh_every_substep,
                'fixed_point_iters': self.scf.fixed_point_iters,
                'tol': self.scf.tol,
                'mode': self.scf.mode,
            },
            'solver': self.solver.as_dict(),
            'terms': self.toggles.as_dict(),
            'self_interaction': self.self_interaction,
            'outputs': {
                'every': self.outputs.every,
                'snapshot_every': self.outputs.snapshot_every,
                'quantities': list(self.outputs.quantities),
            },
        }


@Logger.log_function_call(logger)
def load_scenario(path):
    path = Path(path)
    try:
        with open(path) as handle:
            payload = json.load(handle)
    except FileNotFoundError:
        raise ConfigurationError(f'scenario file not found: {path}') from None
    except json.JSONDecodeError as e:
        raise ConfigurationError(f'{path} is not valid JSON: {e}') from e
    if not isinstance(payload, dict):
        raise ConfigurationError(f'{path} must hold a JSON object')
    return Scenario.from_dict(payload, name=path.stem)
