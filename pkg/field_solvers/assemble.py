from dataclasses import dataclass, fields as dataclass_fields

import numpy as np

from core.constants import ATOMIC
from core.fields import ScalarField, VectorField
from field_solvers.config import SolverConfig
from field_solvers.poisson import scalar_potential, vector_potential
from sources.densities import vector_array
from utils.logger import Logger

logger = Logger(__name__).logger

SCALAR_COMPONENTS = ('phi0', 'phi2_orb', 'phi2_spin', 'phi2_field', 'laplacian_phi0')
VECTOR_COMPONENTS = ('a2_orb', 'a2_spin', 'a2_field', 'grad_phi0', 'curl_a2_orb', 'curl_a2_spin', 'curl_a2_field')


@dataclass
class PotentialSet:
    '''
    Internal potentials generated by a SourceSet, with the derivative fields the
    Hamiltonian needs. Derivatives are produced by the solver itself, so on
    padded solves they come from the padded box rather than from the cropped
    potential.

    Fields:
        phi0 (ScalarField): Coulomb potential of rho0.
        phi2_orb, phi2_spin, phi2_field (ScalarField): potentials of the rho2 parts.
        a2_orb, a2_spin, a2_field (VectorField): Coulomb-gauge vector potentials of
            the orbital, spin and field-induced currents.
        grad_phi0 (VectorField): gradient of phi0.
        laplacian_phi0 (ScalarField): Laplacian of phi0, -(q / eps0) rho0.
        curl_a2_orb, curl_a2_spin, curl_a2_field (VectorField): magnetic fields.
    '''
    phi0: ScalarField
    phi2_orb: ScalarField
    phi2_spin: ScalarField
    phi2_field: ScalarField
    a2_orb: VectorField
    a2_spin: VectorField
    a2_field: VectorField
    grad_phi0: VectorField
    laplacian_phi0: ScalarField
    curl_a2_orb: VectorField
    curl_a2_spin: VectorField
    curl_a2_field: VectorField

    # zeroth-order internal vector potential vanishes identically
    a0_int = 0.0

    @property
    def grid(self):
        return self.phi0.grid

    @classmethod
    def zeros(cls, grid):
        values = {name: ScalarField.zeros(grid) for name in SCALAR_COMPONENTS}
        values.update({name: VectorField.zeros(grid) for name in VECTOR_COMPONENTS})
        return cls(**values)

    def _combine(self, other, op):
        return PotentialSet(**{
            f.name: op(getattr(self, f.name), getattr(other, f.name)) for f in dataclass_fields(self)
        })

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def scaled(self, factor):
        return PotentialSet(**{f.name: getattr(self, f.name) * factor for f in dataclass_fields(self)})

    @property
    def a2_total(self):
        return self.a2_orb + self.a2_spin + self.a2_field

    @property
    def phi2_total(self):
        return self.phi2_orb + self.phi2_spin + self.phi2_field

    def is_zero(self):
        return all(getattr(self, f.name).is_zero() for f in dataclass_fields(self))


@Logger.log_function_call(logger)
def assemble_potentials(sources, A_ext=None, cfg=SolverConfig(), constants=ATOMIC, notes=None):
    '''
    Solve the order-by-order field equations for one SourceSet:
    Phi0 from rho0, Phi2_k from each rho2_k, A2_l from each zeroth-order current
    (transverse part, 1/c**2 prefactor). j2 is never used as a source, and the
    field-induced pieces are exactly zero when A_ext vanishes.
    '''
    grid = sources.grid
    solve_s = lambda rho: scalar_potential(grid, rho, cfg, constants, notes)[0]

    phi0, grad_phi0 = scalar_potential(grid, sources.rho0.data, cfg, constants, notes, with_gradient=True)
    a2_orb, curl_orb = vector_potential(grid, sources.j_orb.data, cfg, constants, notes, with_curl=True)
    a2_spin, curl_spin = vector_potential(grid, sources.j_spin.data, cfg, constants, notes, with_curl=True)

    field_on = A_ext is not None and bool(np.any(vector_array(grid, A_ext)))
    if field_on:
        phi2_field = solve_s(sources.rho2_field.data)
        a2_field, curl_field = vector_potential(grid, sources.j_field.data, cfg, constants, notes, with_curl=True)
    else:
        phi2_field = np.zeros(grid.shape)
        a2_field, curl_field = np.zeros((3,) + grid.shape), np.zeros((3,) + grid.shape)

    return PotentialSet(
        phi0=ScalarField(grid, phi0),
        phi2_orb=ScalarField(grid, solve_s(sources.rho2_orb.data)),
        phi2_spin=ScalarField(grid, solve_s(sources.rho2_spin.data)),
        phi2_field=ScalarField(grid, phi2_field),
        a2_orb=VectorField(grid, a2_orb),
        a2_spin=VectorField(grid, a2_spin),
        a2_field=VectorField(grid, a2_field),
        grad_phi0=VectorField(grid, grad_phi0),
        laplacian_phi0=ScalarField(grid, -(constants.q / constants.eps0) * sources.rho0.data),
        curl_a2_orb=VectorField(grid, curl_orb),
        curl_a2_spin=VectorField(grid, curl_spin),
        curl_a2_field=VectorField(grid, curl_field),
    )
