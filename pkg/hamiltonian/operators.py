'''
Application of the Pauli mean-field Hamiltonian to spinors.

Every term is reduced to four coefficient fields,

    O phi = s phi + sym(v . p) phi + (sigma . w) phi + sym(sigma . (u x p)) phi

with sym the Weyl (Hermitian) ordering:

    sym(v . p)          = (v . p + p . v) / 2
    sym(sigma . (u x p)) = (sigma . (u x p) + [sigma . (u x p)]^dagger) / 2

Both reduce to the plain product when the coefficient field is uniform. Terms
are summed at the coefficient level, so applying a whole group costs the same
number of transforms as applying one term.
'''
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from core.constants import ATOMIC
from core.fields import SpinorField
from core.spectral import (
    divergence_array, laplacian_array, momentum_array, sigma_dot, sigma_dot_field,
)
from hamiltonian.pulse import ExternalFieldSample
from hamiltonian.terms import ALL_TERMS, COH_TERMS, EXT_TERMS, GROUPS, INT_TERMS, TermId, TermToggles
from sources.densities import LEVI_CIVITA
from utils.errors import ConfigurationError
from utils.logger import Logger

logger = Logger(__name__).logger


def _vec(value):
    v = np.asarray(value, dtype=float)
    return v.reshape(3, 1, 1, 1) if v.ndim == 1 else v


def _is_uniform(value):
    return all(n == 1 for n in np.shape(value)[1:])


def _add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _cross(a, b):
    return np.cross(_vec(a), _vec(b), axis=0)


@dataclass
class OperatorCoefficients:
    '''
    Coefficient fields of a local-plus-first-order operator.

    Fields:
        scalar: multiplies phi.
        velocity: v in sym(v . p).
        spin: w in sigma . w.
        spin_orbit: u in sym(sigma . (u x p)).
    Each is None when absent; vectors are (3, 1, 1, 1) when uniform.
    '''
    scalar: Optional[object] = None
    velocity: Optional[np.ndarray] = None
    spin: Optional[np.ndarray] = None
    spin_orbit: Optional[np.ndarray] = None

    def __add__(self, other):
        return OperatorCoefficients(
            _add(self.scalar, other.scalar),
            _add(self.velocity, other.velocity),
            _add(self.spin, other.spin),
            _add(self.spin_orbit, other.spin_orbit),
        )

    def is_empty(self):
        return all(
            v is None or not np.any(v)
            for v in (self.scalar, self.velocity, self.spin, self.spin_orbit)
        )

    def apply(self, grid, phi, hbar=1.0):
        '''Acts on a spinor array of shape (2, nx, ny, nz).'''
        action = _Action(grid, phi, hbar)
        out = np.zeros(phi.shape, dtype=complex)
        if self.scalar is not None and np.any(self.scalar):
            out += np.asarray(self.scalar)[None] * phi if np.ndim(self.scalar) else self.scalar * phi
        if self.velocity is not None and np.any(self.velocity):
            out += action.sym_dot_p(self.velocity)
        if self.spin is not None and np.any(self.spin):
            out += sigma_dot_field(self.spin, phi)
        if self.spin_orbit is not None and np.any(self.spin_orbit):
            out += action.sym_sigma_cross_p(self.spin_orbit)
        return out


class _Action:
    '''Shared momentum of one spinor for the first-order operator pieces.'''

    def __init__(self, grid, phi, hbar):
        self.grid = grid
        self.phi = phi
        self.hbar = hbar

    @cached_property
    def p_phi(self):
        return momentum_array(self.grid, self.phi, self.hbar)

    def sym_dot_p(self, v):
        direct = np.sum(v[:, None] * self.p_phi, axis=0)
        if _is_uniform(v):
            return direct
        p_dot_v = -1j * self.hbar * divergence_array(self.grid, v[:, None] * self.phi[None])
        return 0.5 * (direct + p_dot_v)

    def sym_sigma_cross_p(self, u):
        # w_a = eps_abc u_b p_c phi
        w = np.einsum('abc,b...,c...->a...', LEVI_CIVITA, u[:, None], self.p_phi)
        if not _is_uniform(u):
            # adjoint ordering: eps_abc p_c (u_b phi)
            p_u_phi = np.stack([momentum_array(self.grid, u[b][None] * self.phi, self.hbar) for b in range(3)])
            w = 0.5 * (w + np.einsum('abc,bc...->a...', LEVI_CIVITA, p_u_phi))
        return sigma_dot(w)


def _require(potentials, term):
    if potentials is None:
        raise ConfigurationError(f'term {term} needs internal potentials but none were supplied')
    return potentials


def term_coefficients(term, potentials=None, sample=None, constants=ATOMIC, grid=None):
    '''Coefficient fields of one named term. `grid` is only needed for a non-uniform E_ext.'''
    term = TermId.parse(term)
    sample = sample if sample is not None else ExternalFieldSample.zero()
    q, m, hbar, c = constants.q, constants.m, constants.hbar, constants.c
    cso = q * hbar / (4.0 * m * m * c * c)
    zeeman = -q * hbar / (2.0 * m)
    darwin = q * hbar * hbar / (8.0 * m * m * c * c)
    A = _vec(sample.A)

    if term is TermId.SCALAR:
        return OperatorCoefficients(scalar=q * np.asarray(sample.phi, dtype=float))
    if term is TermId.DIPOLE_PA:
        return OperatorCoefficients(velocity=-(q / m) * A)
    if term is TermId.DIAMAGNETIC_AA:
        return OperatorCoefficients(scalar=(q * q / (2.0 * m)) * np.sum(A ** 2, axis=0))
    if term is TermId.ZEEMAN_EXT:
        return OperatorCoefficients(spin=zeeman * _vec(sample.B))
    if term is TermId.DARWIN_EXT:
        E = _vec(sample.E)
        if _is_uniform(E):
            return OperatorCoefficients()
        grid = grid or (potentials.grid if potentials is not None else None)
        if grid is None:
            raise ConfigurationError('the divergence of a non-uniform E_ext needs the grid')
        return OperatorCoefficients(scalar=-darwin * divergence_array(grid, E))
    if term is TermId.SOC_EXT:
        return OperatorCoefficients(spin_orbit=-cso * _vec(sample.E))

    p = _require(potentials, term)
    if term is TermId.HARTREE:
        return OperatorCoefficients(scalar=q * p.phi0.data)
    if term is TermId.CONTACT_ORB:
        return OperatorCoefficients(scalar=q * p.phi2_orb.data)
    if term is TermId.SOC_PHI2_SPIN:
        return OperatorCoefficients(scalar=q * p.phi2_spin.data)
    if term is TermId.CONTACT_DARWIN:
        return OperatorCoefficients(scalar=darwin * p.laplacian_phi0.data)
    if term is TermId.DIPOLAR_ORB:
        return OperatorCoefficients(velocity=-(q / m) * p.a2_orb.data)
    if term is TermId.SOO_PA_SPIN:
        return OperatorCoefficients(velocity=-(q / m) * p.a2_spin.data)
    if term is TermId.SOO_ZEEMAN_ORB:
        return OperatorCoefficients(spin=zeeman * p.curl_a2_orb.data)
    if term is TermId.SPIN_SPIN:
        return OperatorCoefficients(spin=zeeman * p.curl_a2_spin.data)
    if term is TermId.SOC_INT:
        # +cso sigma . (grad Phi0 x p), i.e. E_int = -grad Phi0 in the SOC operator
        return OperatorCoefficients(spin_orbit=cso * p.grad_phi0.data)

    if not np.any(sample.A):
        return OperatorCoefficients()
    if term is TermId.PHI2_FIELD:
        return OperatorCoefficients(scalar=q * p.phi2_field.data)
    if term is TermId.PA_FIELD:
        return OperatorCoefficients(velocity=-(q / m) * p.a2_field.data)
    if term is TermId.AA_ORB:
        return OperatorCoefficients(scalar=(q * q / m) * np.sum(A * p.a2_orb.data, axis=0))
    if term is TermId.AA_FIELD:
        return OperatorCoefficients(scalar=(q * q / m) * np.sum(A * p.a2_field.data, axis=0))
    if term is TermId.AA_SPIN:
        return OperatorCoefficients(scalar=(q * q / m) * np.sum(A * p.a2_spin.data, axis=0))
    if term is TermId.ZEEMAN_FIELD:
        return OperatorCoefficients(spin=zeeman * p.curl_a2_field.data)
    if term is TermId.SOC_EXT_INT:
        return OperatorCoefficients(spin=-q * cso * _cross(p.grad_phi0.data, A))
    raise ConfigurationError(f'no operator for term {term}')


def coefficients_for(terms, potentials=None, sample=None, constants=ATOMIC, grid=None):
    total = OperatorCoefficients()
    for term in terms:
        total = total + term_coefficients(term, potentials, sample, constants, grid)
    return total


def _spinor_array(phi):
    if isinstance(phi, SpinorField):
        return phi.grid, phi.data
    raise ConfigurationError(f'expected a SpinorField, got {type(phi).__name__}')


def kinetic_array(grid, phi, constants=ATOMIC):
    '''p**2 / 2m with the full spectral Laplacian.'''
    return -(constants.hbar ** 2 / (2.0 * constants.m)) * laplacian_array(grid, phi)


def apply_kinetic(phi, constants=ATOMIC):
    grid, data = _spinor_array(phi)
    return SpinorField(grid, kinetic_array(grid, data, constants))


def apply_term(term, phi, potentials=None, sample=None, constants=ATOMIC):
    grid, data = _spinor_array(phi)
    coefficients = term_coefficients(term, potentials, sample, constants, grid)
    return SpinorField(grid, coefficients.apply(grid, data, constants.hbar))


def _apply_group(group, phi, potentials, sample, constants, toggles):
    grid, data = _spinor_array(phi)
    toggles = toggles or TermToggles.all_on()
    terms = [t for t in GROUPS[group] if t in toggles]
    coefficients = coefficients_for(terms, potentials, sample, constants, grid)
    return SpinorField(grid, coefficients.apply(grid, data, constants.hbar))


def apply_external(phi, sample, constants=ATOMIC, toggles=None, potentials=None):
    '''U_ext phi: the six single-electron couplings to the external field.'''
    return _apply_group('EXT', phi, potentials, sample, constants, toggles)


def apply_internal(phi, potentials, constants=ATOMIC, toggles=None):
    '''U_int phi: the mean internal interactions generated by the other electrons.'''
    _require(potentials, 'internal group')
    return _apply_group('INT', phi, potentials, None, constants, toggles)


def apply_coherent(phi, potentials, sample, constants=ATOMIC, toggles=None):
    '''U_int_ext phi: the coherent light-induced mean field, zero without A_ext.'''
    _require(potentials, 'coherent group')
    if sample is None or not np.any(sample.A):
        return SpinorField.zeros(phi.grid)
    return _apply_group('COH', phi, potentials, sample, constants, toggles)


def hamiltonian_array(grid, phi, potentials, sample, constants=ATOMIC, toggles=None, kinetic=True):
    '''
    p**2/2m + U_ext + U_int + U_int_ext on a spinor array, restricted to the
    enabled terms. Coherent terms drop out when the sample carries no A_ext.
    '''
    toggles = toggles or TermToggles.all_on()
    terms = [t for t in ALL_TERMS if t in toggles]
    if potentials is None:
        terms = [t for t in terms if t in EXT_TERMS]
    coefficients = coefficients_for(terms, potentials, sample, constants, grid)
    out = coefficients.apply(grid, phi, constants.hbar)
    if kinetic:
        out += kinetic_array(grid, phi, constants)
    return out


def apply_hamiltonian(phi, potentials, sample, constants=ATOMIC, toggles=None):
    grid, data = _spinor_array(phi)
    return SpinorField(grid, hamiltonian_array(grid, data, potentials, sample, constants, toggles))


def pauli_coefficients(potentials, sample, constants=ATOMIC):
    '''
    Coefficients of the full order-1/c**2 Pauli Hamiltonian built from total
    fields A = A_ext + A_int and Phi = Phi_ext + Phi0 + Phi2, dropping the
    1/c**4 pieces q**2 |A_int|**2, the second-order fields inside the SOC
    operator and d/dt A_int.
    '''
    q, m, hbar, c = constants.q, constants.m, constants.hbar, constants.c
    cso = q * hbar / (4.0 * m * m * c * c)
    grid = potentials.grid
    A_ext = _vec(sample.A)
    E_ext = _vec(sample.E)
    A_int = potentials.a2_total.data
    B_int = (potentials.curl_a2_orb + potentials.curl_a2_spin + potentials.curl_a2_field).data
    phi_total = np.asarray(sample.phi, dtype=float) + potentials.phi0.data + potentials.phi2_total.data
    # total E inside the SOC operator: E_ext - grad Phi0
    E_soc = E_ext - potentials.grad_phi0.data

    div_E_ext = 0.0 if _is_uniform(E_ext) else divergence_array(grid, E_ext)
    div_E = div_E_ext - potentials.laplacian_phi0.data

    scalar = (
        q * phi_total
        + (q * q / (2.0 * m)) * (np.sum(A_ext ** 2, axis=0) + 2.0 * np.sum(A_ext * A_int, axis=0))
        - (q * hbar * hbar / (8.0 * m * m * c * c)) * div_E
    )
    return OperatorCoefficients(
        scalar=scalar,
        velocity=-(q / m) * (A_ext + A_int),
        spin=-(q * hbar / (2.0 * m)) * (_vec(sample.B) + B_int) + cso * q * _cross(E_soc, A_ext),
        spin_orbit=-cso * E_soc,
    )


def apply_pauli_hamiltonian(phi, potentials, sample, constants=ATOMIC):
    '''Full Hamiltonian assembled from total potentials, without the term split.'''
    grid, data = _spinor_array(phi)
    sample = sample if sample is not None else ExternalFieldSample.zero()
    out = pauli_coefficients(potentials, sample, constants).apply(grid, data, constants.hbar)
    return SpinorField(grid, out + kinetic_array(grid, data, constants))


def expectation(phi, h_phi):
    return float(np.real(phi.inner(h_phi)))


def kinetic_energy(phi, constants=ATOMIC):
    return expectation(phi, apply_kinetic(phi, constants))


def term_energy(term, phi, potentials=None, sample=None, constants=ATOMIC):
    '''<phi| O_term |phi> for one named term.'''
    return expectation(phi, apply_term(term, phi, potentials, sample, constants))


def term_energies(phi, potentials=None, sample=None, constants=ATOMIC, terms=ALL_TERMS):
    '''Energies of several terms; internal and coherent ones are zero without potentials.'''
    energies = {}
    for term in terms:
        term = TermId.parse(term)
        if potentials is None and term in INT_TERMS + COH_TERMS:
            energies[term] = 0.0
            continue
        energies[term] = term_energy(term, phi, potentials, sample, constants)
    return energies
