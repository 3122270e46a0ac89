'''
Order-by-order charge and current densities of an orbital set.

All densities are probability densities and currents; the charge q enters when
they are handed to the field solvers. Sums run over the orbitals of the set,
optionally leaving one orbital out.
'''
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from core.constants import ATOMIC
from core.fields import ScalarField, VectorField
from core.spectral import (
    curl_array, density_array, divergence_array, gradient_array, laplacian_array,
    sigma_apply, spin_density_array,
)
from utils.errors import ConfigurationError, MissingSnapshotError
from utils.logger import Logger

logger = Logger(__name__).logger

LEVI_CIVITA = np.zeros((3, 3, 3))
for _a, _b, _c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_a, _b, _c] = 1.0
    LEVI_CIVITA[_a, _c, _b] = -1.0


def selected_orbitals(orbitals, exclusion=None):
    '''Orbital array (M, 2, nx, ny, nz) with the excluded index removed.'''
    if exclusion is None:
        return orbitals.data
    if not 0 <= exclusion < orbitals.count:
        raise ConfigurationError(
            f'exclusion index {exclusion} out of range for {orbitals.count} orbitals',
            exclusion=exclusion,
        )
    return np.delete(orbitals.data, exclusion, axis=0)


def vector_array(grid, value):
    '''Vector samples as an array broadcastable against (3,) + grid.shape.'''
    if value is None:
        return np.zeros((3, 1, 1, 1))
    if isinstance(value, VectorField):
        grid.require_same(value.grid)
        return value.data
    value = np.asarray(value, dtype=float)
    if value.shape == (3,):
        return value.reshape(3, 1, 1, 1)
    if value.shape == (3,) + grid.shape:
        return value
    raise ConfigurationError(f'vector field of shape {value.shape} does not fit grid {grid.shape}')


def cross(a, b):
    return np.cross(a, b, axis=0)


def momentum_density_array(grid, phi, hbar=1.0):
    '''Hermitian momentum density Re(phi^dagger p phi) = hbar Im(phi^dagger grad phi), summed.'''
    dphi = gradient_array(grid, phi)
    return hbar * np.imag(np.sum(np.conj(phi)[None] * dphi, axis=(1, 2) if phi.ndim == 5 else 1))


def spin_gradient_tensor_array(grid, phi, hbar=1.0):
    '''
    T[a, c] = hbar Im(phi^dagger sigma_a d_c phi), summed over orbitals; shape
    (3, 3) + spatial. Its antisymmetric contraction eps_abc T[b, c] is the
    spin-orbit density of the charge correction.
    '''
    dphi = gradient_array(grid, phi)
    phi = phi if phi.ndim == 5 else phi[None]
    dphi = dphi if dphi.ndim == 6 else dphi[:, None]
    conj = np.conj(phi)
    out = np.empty((3, 3) + grid.shape)
    for a in range(3):
        for c in range(3):
            out[a, c] = hbar * np.imag(np.sum(conj * sigma_apply(a, dphi[c]), axis=(0, 1)))
    return out


def spin_orbit_vector_array(grid, phi):
    '''v_a = eps_abc Im(phi^dagger sigma_b d_c phi), the vector inside the spin part of rho2.'''
    t = spin_gradient_tensor_array(grid, phi)
    return np.einsum('abc,bc...->a...', LEVI_CIVITA, t)


def charge_density0(orbitals, exclusion=None):
    return ScalarField(orbitals.grid, density_array(selected_orbitals(orbitals, exclusion)).sum(axis=0))


def orbital_current(orbitals, exclusion=None, constants=ATOMIC):
    phi = selected_orbitals(orbitals, exclusion)
    pi = momentum_density_array(orbitals.grid, phi, constants.hbar)
    return VectorField(orbitals.grid, pi / constants.m)


def spin_current(orbitals, exclusion=None, constants=ATOMIC):
    s = spin_density_array(selected_orbitals(orbitals, exclusion))
    return VectorField(orbitals.grid, constants.hbar / (2.0 * constants.m) * curl_array(orbitals.grid, s))


def field_current(orbitals, A_ext, exclusion=None, constants=ATOMIC):
    grid = orbitals.grid
    rho = density_array(selected_orbitals(orbitals, exclusion)).sum(axis=0)
    a = vector_array(grid, A_ext)
    return VectorField(grid, np.broadcast_to(-(constants.q / constants.m) * rho[None] * a, (3,) + grid.shape).copy())


def rho2_orbital(orbitals, exclusion=None, constants=ATOMIC):
    rho = density_array(selected_orbitals(orbitals, exclusion)).sum(axis=0)
    prefactor = constants.hbar ** 2 / (8.0 * constants.m ** 2 * constants.c ** 2)
    return ScalarField(orbitals.grid, prefactor * laplacian_array(orbitals.grid, rho))


def rho2_spin(orbitals, exclusion=None, constants=ATOMIC):
    grid = orbitals.grid
    v = spin_orbit_vector_array(grid, selected_orbitals(orbitals, exclusion))
    prefactor = constants.hbar ** 2 / (4.0 * constants.m ** 2 * constants.c ** 2)
    return ScalarField(grid, prefactor * divergence_array(grid, v))


def rho2_field(orbitals, A_ext, exclusion=None, constants=ATOMIC):
    grid = orbitals.grid
    a = vector_array(grid, A_ext)
    if not np.any(a):
        return ScalarField.zeros(grid)
    s = spin_density_array(selected_orbitals(orbitals, exclusion))
    prefactor = -constants.q * constants.hbar / (4.0 * constants.m ** 2 * constants.c ** 2)
    return ScalarField(grid, prefactor * divergence_array(grid, cross(s, a)))


@dataclass
class TimeDerivativeContext:
    '''
    Neighbouring snapshots for the time-derivative terms of the second-order
    current. With both neighbours a centred difference is used; with only
    `following` a forward difference; with only `previous` a backward one.
    '''
    dt: float
    previous: Optional[object] = None
    following: Optional[object] = None
    A_previous: Optional[object] = None
    A_following: Optional[object] = None

    def derivative(self, quantity, current, A_current=None):
        '''d/dt of quantity(orbitals, A) from the available neighbours.'''
        if self.previous is not None and self.following is not None:
            return (quantity(self.following, self.A_following) - quantity(self.previous, self.A_previous)) / (2.0 * self.dt)
        if self.following is not None:
            return (quantity(self.following, self.A_following) - quantity(current, A_current)) / self.dt
        if self.previous is not None:
            return (quantity(current, A_current) - quantity(self.previous, self.A_previous)) / self.dt
        raise MissingSnapshotError('time-derivative context holds no neighbouring snapshot')


def current2_diagnostic(orbitals, E=None, A=None, dt_context=None, exclusion=None,
                        constants=ATOMIC, time_derivatives=True):
    '''
    Second-order current

        j2 = -(q hbar / 4 m^2 c^2) s x E - (hbar^2 / 8 m^2 c^2) d/dt grad(rho)
             - (hbar^2 / 4 m^2 c^2) d/dt v + (q hbar / 4 m^2 c^2) d/dt (s x A)

    It is a diagnostic only and never enters a field solve.
    '''
    grid = orbitals.grid
    mc2 = constants.m ** 2 * constants.c ** 2
    cso = constants.q * constants.hbar / (4.0 * mc2)
    s = spin_density_array(selected_orbitals(orbitals, exclusion))
    j2 = -cso * cross(s, vector_array(grid, E))
    j2 = np.broadcast_to(j2, (3,) + grid.shape).copy()
    if not time_derivatives:
        return VectorField(grid, j2)
    if dt_context is None:
        raise MissingSnapshotError('time-derivative terms of j2 need a pair of orbital snapshots')

    def grad_rho(orbs, _a):
        return gradient_array(grid, density_array(selected_orbitals(orbs, exclusion)).sum(axis=0))

    def spin_orbit(orbs, _a):
        return spin_orbit_vector_array(grid, selected_orbitals(orbs, exclusion))

    def spin_cross_a(orbs, a):
        s_k = spin_density_array(selected_orbitals(orbs, exclusion))
        return np.broadcast_to(cross(s_k, vector_array(grid, a)), (3,) + grid.shape)

    j2 -= constants.hbar ** 2 / (8.0 * mc2) * dt_context.derivative(grad_rho, orbitals)
    j2 -= constants.hbar ** 2 / (4.0 * mc2) * dt_context.derivative(spin_orbit, orbitals)
    j2 += cso * dt_context.derivative(spin_cross_a, orbitals, A)
    return VectorField(grid, j2)


@dataclass
class SourceSet:
    '''
    Expanded sources of one orbital set.

    Fields:
        rho0 (ScalarField): zeroth-order density.
        j_orb, j_spin, j_field (VectorField): orbital, spin (curl) and field-induced currents.
        rho2_orb, rho2_spin, rho2_field (ScalarField): second-order density corrections.
        j2 (VectorField | None): second-order current, diagnostic only.
        exclusion (int | None): orbital left out of the sums.
        count (int): number of orbitals summed.
    '''
    rho0: ScalarField
    j_orb: VectorField
    j_spin: VectorField
    j_field: VectorField
    rho2_orb: ScalarField
    rho2_spin: ScalarField
    rho2_field: ScalarField
    j2: Optional[VectorField] = None
    exclusion: Optional[int] = None
    count: int = 0
    notes: list = field(default_factory=list)

    @property
    def grid(self):
        return self.rho0.grid

    @property
    def j0(self):
        return self.j_orb + self.j_spin + self.j_field

    def as_dict(self):
        return {
            'count': self.count,
            'exclusion': self.exclusion,
            'charge': float(self.rho0.integrate()),
            'rho2_integrals': [float(f.integrate()) for f in (self.rho2_orb, self.rho2_spin, self.rho2_field)],
        }


def build_sources(orbitals, A_ext=None, exclusion=None, constants=ATOMIC):
    '''Every source of the orbital set in one pass (j2 left unset).'''
    grid = orbitals.grid
    phi = selected_orbitals(orbitals, exclusion)
    if phi.shape[0] == 0:
        zero_s, zero_v = ScalarField.zeros(grid), VectorField.zeros(grid)
        return SourceSet(zero_s, zero_v, zero_v.copy(), zero_v.copy(), zero_s.copy(), zero_s.copy(),
                         zero_s.copy(), exclusion=exclusion, count=0)

    mc2 = constants.m ** 2 * constants.c ** 2
    rho = density_array(phi).sum(axis=0)
    s = spin_density_array(phi)
    a = vector_array(grid, A_ext)
    field_on = bool(np.any(a))

    rho0 = ScalarField(grid, rho)
    j_orb = VectorField(grid, momentum_density_array(grid, phi, constants.hbar) / constants.m)
    j_spin = VectorField(grid, constants.hbar / (2.0 * constants.m) * curl_array(grid, s))
    if field_on:
        j_field = VectorField(grid, np.broadcast_to(-(constants.q / constants.m) * rho[None] * a, (3,) + grid.shape).copy())
        rho2_f = -constants.q * constants.hbar / (4.0 * mc2) * divergence_array(grid, cross(s, a))
    else:
        j_field = VectorField.zeros(grid)
        rho2_f = np.zeros(grid.shape)
    rho2_o = constants.hbar ** 2 / (8.0 * mc2) * laplacian_array(grid, rho)
    rho2_s = constants.hbar ** 2 / (4.0 * mc2) * divergence_array(grid, spin_orbit_vector_array(grid, phi))

    return SourceSet(
        rho0=rho0,
        j_orb=j_orb,
        j_spin=j_spin,
        j_field=j_field,
        rho2_orb=ScalarField(grid, rho2_o),
        rho2_spin=ScalarField(grid, rho2_s),
        rho2_field=ScalarField(grid, rho2_f),
        exclusion=exclusion,
        count=phi.shape[0],
    )


def density_rate(orbitals, h_phi, constants=ATOMIC):
    '''
    d_t rho0 = (2 / hbar) sum_i Im(phi_i^dagger H_i phi_i) from the Hamiltonian
    action `h_phi` of shape (N, 2, nx, ny, nz).
    '''
    h_phi = np.asarray(h_phi)
    if h_phi.shape != orbitals.data.shape:
        raise ConfigurationError(f'Hamiltonian action of shape {h_phi.shape} does not match orbitals {orbitals.data.shape}')
    return (2.0 / constants.hbar) * np.imag(np.sum(np.conj(orbitals.data) * h_phi, axis=(0, 1)))


def continuity_residual(orbitals, drho_dt, A_ext=None, constants=ATOMIC):
    '''
    Relative residual ||d_t rho0 + div j0|| / ||d_t rho0|| of the leading-order
    continuity equation (absolute when d_t rho0 vanishes).
    '''
    grid = orbitals.grid
    j0 = (
        momentum_density_array(grid, orbitals.data, constants.hbar) / constants.m
        - (constants.q / constants.m) * density_array(orbitals.data).sum(axis=0)[None] * vector_array(grid, A_ext)
    )
    residual = drho_dt + divergence_array(grid, np.broadcast_to(j0, (3,) + grid.shape))
    scale = np.linalg.norm(drho_dt)
    value = np.linalg.norm(residual)
    return float(value / scale) if scale > 0.0 else float(value)
