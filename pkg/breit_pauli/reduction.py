'''
Direct kernel quadrature of the Breit-Pauli pair Hamiltonian, its
field-dressed form under p -> p - q A_ext, and its Hartree reduction onto
one target orbital.

With K = ebar**2 / (m**2 c**2), ebar**2 = q**2 / (4 pi eps0), the partner
densities (rho, pi, s, T) of the other orbitals produce, for the target:

    hartree          scalar       ebar**2 C[rho]
    contact-darwin   scalar       -(pi hbar**2 K / 2) rho
    contact-orb      scalar       -(pi hbar**2 K / 2) P[rho]
    dipolar-orb      velocity     -K D[pi]
    soc-phi2-spin    scalar       -(hbar K / 4) O.[v],    v_a = eps_abc T[b, c]
    soo-pA-spin      velocity     -(hbar K / 2) W[s],     W = O x [s]
    soc-int          spin-orbit   -(hbar K / 4) O[rho]
    soo-zeeman-orb   spin         -(hbar K / 2) O x [pi]
    spin-spin        spin         (hbar**2 K / 4) M[s]

and with a uniform A_ext:

    pA-field         velocity     q K D[rho A]
    AA-orb           scalar       q K A . D[pi]
    AA-field         scalar       -q**2 K A . D[rho A]
    AA-spin          scalar       (q hbar K / 2) A . W[s]
    phi2-field       scalar       (q hbar K / 4) O.[s x A]
    zeeman-field     spin         -(q hbar K / 2) O[rho] x A
    soc-ext-int      spin         (q hbar K / 4) O[rho] x A

C is the Coulomb kernel, P the smoothed contact kernel, D the Darwin kernel,
O the odd kernel (O x and O. its cross and dot contractions) and M the
dipolar kernel. Energies are read off the target densities as

    integral of  scalar rho + velocity . pi + spin . s + eps_abc u_b T[a, c].
'''
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from femto_pauli import settings
from hamiltonian.operators import OperatorCoefficients
from hamiltonian.terms import COH_TERMS, INT_TERMS, TermId
from sources.densities import LEVI_CIVITA
from utils.logger import Logger

logger = Logger(__name__).logger

# pair-Hamiltonian blocks and the mean-field terms they reduce to
BLOCKS = {
    'contact': (TermId.CONTACT_ORB, TermId.CONTACT_DARWIN),
    'orbit-orbit': (TermId.DIPOLAR_ORB,),
    'spin-orbit': (TermId.SOC_PHI2_SPIN, TermId.SOO_PA_SPIN, TermId.SOC_INT, TermId.SOO_ZEEMAN_ORB),
    'spin-spin': (TermId.SPIN_SPIN,),
}

# addends of the field-dressed pair Hamiltonian, by the coherent term they map onto
FIELD_ADDENDS = {
    TermId.PA_FIELD: 'orbit-orbit: p_i . A(x_j) cross terms',
    TermId.AA_ORB: 'orbit-orbit: A(x_i) . p_j cross terms',
    TermId.AA_FIELD: 'orbit-orbit: q_i q_j A . A',
    TermId.AA_SPIN: 'spin-other-orbit: sigma_j with 2 q_i A',
    TermId.PHI2_FIELD: 'spin-orbit: sigma_j with -q_j A',
    TermId.ZEEMAN_FIELD: 'spin-other-orbit: sigma_i with -2 q_j A',
    TermId.SOC_EXT_INT: 'spin-orbit: sigma_i with +q_i A',
}


def coupling(pair):
    '''K = ebar**2 / (m**2 c**2).'''
    c = pair.constants
    return pair.ebar2 / (c.m ** 2 * c.c ** 2)


def spin_orbit_vector(T):
    return np.einsum('abc,bc...->a...', LEVI_CIVITA, T)


def field_energy(coefficients, target):
    '''Energy of the target densities in one set of coefficient fields.'''
    total = 0.0
    if coefficients.scalar is not None:
        total += target.integrate(coefficients.scalar * target.rho)
    if coefficients.velocity is not None:
        total += target.integrate(np.sum(coefficients.velocity * target.pi, axis=0))
    if coefficients.spin is not None:
        total += target.integrate(np.sum(coefficients.spin * target.s, axis=0))
    if coefficients.spin_orbit is not None:
        total += target.integrate(np.einsum('abc,b...,ac...->...', LEVI_CIVITA, coefficients.spin_orbit, target.T))
    return total


def internal_fields(pair, partner, quad):
    '''Mean internal fields of the partner densities, one entry per internal term.'''
    c = pair.constants
    K = coupling(pair)
    hbar = c.hbar
    if partner.is_empty():
        return {term: OperatorCoefficients() for term in INT_TERMS}
    e_r = quad.odd(partner.rho)
    contact = -0.5 * np.pi * hbar ** 2 * K
    return {
        TermId.HARTREE: OperatorCoefficients(scalar=pair.ebar2 * quad.coulomb(partner.rho)),
        TermId.CONTACT_DARWIN: OperatorCoefficients(scalar=contact * partner.rho),
        TermId.CONTACT_ORB: OperatorCoefficients(scalar=contact * quad.contact(partner.rho)),
        TermId.DIPOLAR_ORB: OperatorCoefficients(velocity=-K * quad.darwin(partner.pi)),
        TermId.SOC_PHI2_SPIN: OperatorCoefficients(
            scalar=-0.25 * hbar * K * quad.divergence_field(spin_orbit_vector(partner.T)),
        ),
        TermId.SOO_PA_SPIN: OperatorCoefficients(velocity=-0.5 * hbar * K * quad.curl_field(partner.s)),
        TermId.SOC_INT: OperatorCoefficients(spin_orbit=-0.25 * hbar * K * e_r),
        TermId.SOO_ZEEMAN_ORB: OperatorCoefficients(spin=-0.5 * hbar * K * quad.curl_field(partner.pi)),
        TermId.SPIN_SPIN: OperatorCoefficients(spin=0.25 * hbar ** 2 * K * quad.dipolar(partner.s)),
    }


def coherent_fields(pair, partner, quad, A):
    '''Light-induced mean fields of the partner densities in a uniform A.'''
    c = pair.constants
    K = coupling(pair)
    q, hbar = c.q, c.hbar
    A = np.asarray(A, dtype=float)
    if partner.is_empty() or not np.any(A):
        return {term: OperatorCoefficients() for term in COH_TERMS}
    a = A.reshape(3, 1, 1, 1)
    d_rho_a = quad.darwin(partner.rho[None] * a)
    e_r_cross_a = np.cross(quad.odd(partner.rho), a, axis=0)
    s_cross_a = np.cross(partner.s, a, axis=0)
    return {
        TermId.PA_FIELD: OperatorCoefficients(velocity=q * K * d_rho_a),
        TermId.AA_ORB: OperatorCoefficients(scalar=q * K * np.sum(a * quad.darwin(partner.pi), axis=0)),
        TermId.AA_FIELD: OperatorCoefficients(scalar=-q * q * K * np.sum(a * d_rho_a, axis=0)),
        TermId.AA_SPIN: OperatorCoefficients(scalar=0.5 * q * hbar * K * np.sum(a * quad.curl_field(partner.s), axis=0)),
        TermId.PHI2_FIELD: OperatorCoefficients(scalar=0.25 * q * hbar * K * quad.divergence_field(s_cross_a)),
        TermId.ZEEMAN_FIELD: OperatorCoefficients(spin=-0.5 * q * hbar * K * e_r_cross_a),
        TermId.SOC_EXT_INT: OperatorCoefficients(spin=0.25 * q * hbar * K * e_r_cross_a),
    }


@dataclass
class MeanFieldReduction:
    '''
    Hartree-reduced fields of one target orbital.

    Fields:
        target (int): orbital index the fields act on.
        fields (dict[TermId, OperatorCoefficients]): internal and coherent fields.
        energies (dict[TermId, float]): energy of the target in each field.
    '''
    target: int
    fields: dict
    energies: dict
    notes: list = field(default_factory=list)

    def coefficients(self, terms):
        total = OperatorCoefficients()
        for term in terms:
            total = total + self.fields[TermId.parse(term)]
        return total

    def group_energy(self, terms):
        return float(sum(self.energies[TermId.parse(t)] for t in terms))


@Logger.log_function_call(logger)
def hartree_reduce(pair, A_ext=None):
    '''
    Mean fields the partner orbitals produce on the target, for every internal
    and coherent term, by direct kernel quadrature. An empty partner set gives
    zero fields.
    '''
    A = pair.A if A_ext is None else np.asarray(A_ext, dtype=float)
    notes = []
    quad = pair.quadrature_rule(notes)
    partner = pair.partner_densities()
    target = pair.target_densities()
    fields = internal_fields(pair, partner, quad)
    fields.update(coherent_fields(pair, partner, quad, A))
    energies = {term: field_energy(coefficients, target) for term, coefficients in fields.items()}
    return MeanFieldReduction(pair.target, fields, energies, notes)


def _relative_change(value, reference):
    return abs(value - reference) / max(abs(reference), settings.BP_SCALE_FLOOR)


def softening_sensitivity(pair, evaluate):
    '''
    Relative change of every labelled value of `evaluate(pair)` when the
    softening is halved. Unsoftened kernels are not checked.
    '''
    if pair.softening == 0.0:
        return {}
    coarse = evaluate(pair)
    fine = evaluate(pair.with_softening(0.5 * pair.softening))
    return {label: _relative_change(fine[label], coarse[label]) for label in coarse}


def _flagged(sensitivity, what):
    flagged = sorted(str(label) for label, change in sensitivity.items() if change > settings.BP_SOFTENING_SENSITIVITY)
    if flagged:
        logger.warning(
            f'{what} not converged in the softening length: {", ".join(flagged)} change by more than '
            f'{settings.BP_SOFTENING_SENSITIVITY:.0e} when it is halved'
        )
    return flagged


@dataclass
class PairEnergies:
    '''
    Breit-Pauli pair energy by block.

    Fields:
        blocks (dict[str, float]): contact, orbit-orbit, spin-orbit (with
            spin-other-orbit) and spin-spin energies.
        A_ext (np.ndarray): vector potential substituted into the momenta.
        softening (float): shared kernel softening.
        flagged (list[str]): blocks whose value moves by more than
            BP_SOFTENING_SENSITIVITY when the softening is halved.
    '''
    blocks: dict
    A_ext: np.ndarray
    softening: float
    flagged: list = field(default_factory=list)
    sensitivity: dict = field(default_factory=dict)

    @property
    def total(self):
        return float(sum(self.blocks.values()))

    def as_dict(self):
        return {'blocks': dict(self.blocks), 'total': self.total, 'softening': self.softening, 'flagged': self.flagged}


def _pair_blocks(pair, A):
    quad = pair.quadrature_rule()
    target, partner = pair.target_densities(), pair.partner_densities()
    if np.any(A):
        q = pair.constants.q
        target, partner = target.substituted(A, q), partner.substituted(A, q)
    fields = internal_fields(pair, partner, quad)
    return {
        block: float(sum(field_energy(fields[term], target) for term in terms))
        for block, terms in BLOCKS.items()
    }


@Logger.log_execution_time(logger)
def bp_pair_energy(pair, A_ext=None, check_softening=True):
    '''
    Breit-Pauli interaction energy of the target with its partners, by block.
    With A_ext the momenta of both sides become p - q A_ext.
    '''
    A = pair.A if A_ext is None else np.asarray(A_ext, dtype=float)
    blocks = _pair_blocks(pair, A)
    sensitivity = softening_sensitivity(pair, lambda p: _pair_blocks(p, A)) if check_softening else {}
    return PairEnergies(blocks, A, pair.softening, _flagged(sensitivity, 'pair energy'), sensitivity)


@dataclass
class FieldCorrections:
    '''
    Addends of the field-dressed pair Hamiltonian, keyed by the coherent term
    each one reduces to.

    Fields:
        addends (dict[TermId, float]): one energy per addend.
        A_ext (np.ndarray): the uniform vector potential.
        flagged (list[str]): addends sensitive to the softening length.
    '''
    addends: dict
    A_ext: np.ndarray
    softening: float
    flagged: list = field(default_factory=list)

    @property
    def total(self):
        return float(sum(self.addends.values()))

    def labelled(self):
        return {FIELD_ADDENDS[term]: value for term, value in self.addends.items()}


def _field_addends(pair, A):
    '''Each addend as its own double integral over target i and partners j.'''
    c = pair.constants
    K = coupling(pair)
    q, hbar = c.q, c.hbar
    quad = pair.quadrature_rule()
    i, j = pair.target_densities(), pair.partner_densities()
    a = np.asarray(A, dtype=float).reshape(3, 1, 1, 1)
    if j.is_empty() or not np.any(a):
        return {term: 0.0 for term in COH_TERMS}
    rho_i_a = i.rho[None] * a
    d_rho_j_a = quad.darwin(j.rho[None] * a)
    # s_i . (O[rho_j] x A)
    spin_e_cross_a = i.integrate(np.sum(i.s * np.cross(quad.odd(j.rho), a, axis=0), axis=0))
    return {
        TermId.PA_FIELD: q * K * i.integrate(np.sum(i.pi * d_rho_j_a, axis=0)),
        TermId.AA_ORB: q * K * i.integrate(np.sum(rho_i_a * quad.darwin(j.pi), axis=0)),
        TermId.AA_FIELD: -q * q * K * i.integrate(np.sum(rho_i_a * d_rho_j_a, axis=0)),
        TermId.AA_SPIN: 0.5 * q * hbar * K * i.integrate(np.sum(rho_i_a * quad.curl_field(j.s), axis=0)),
        TermId.PHI2_FIELD: 0.25 * q * hbar * K * i.integrate(
            i.rho * quad.divergence_field(np.cross(j.s, a, axis=0))
        ),
        TermId.ZEEMAN_FIELD: -0.5 * q * hbar * K * spin_e_cross_a,
        TermId.SOC_EXT_INT: 0.25 * q * hbar * K * spin_e_cross_a,
    }


@Logger.log_execution_time(logger)
def bp_field_corrections(pair, A_ext=None, check_softening=True):
    '''
    Every addend the substitution p -> p - q A_ext adds to the pair energy.
    Their sum is bp_pair_energy(pair, A_ext) - bp_pair_energy(pair, 0).
    '''
    A = pair.A if A_ext is None else np.asarray(A_ext, dtype=float)
    addends = _field_addends(pair, A)
    sensitivity = softening_sensitivity(pair, lambda p: _field_addends(p, A)) if check_softening and np.any(A) else {}
    return FieldCorrections(addends, A, pair.softening, _flagged(sensitivity, 'field corrections'))


def check_field_corrections(pair, A_ext=None, rtol=1e-8):
    '''Largest mismatch between the addends and the substituted pair energy difference.'''
    A = pair.A if A_ext is None else np.asarray(A_ext, dtype=float)
    corrections = bp_field_corrections(pair, A, check_softening=False)
    difference = bp_pair_energy(pair, A, False).total - bp_pair_energy(pair, np.zeros(3), False).total
    mismatch = abs(corrections.total - difference)
    scale = max(abs(difference), settings.BP_SCALE_FLOOR)
    if mismatch > rtol * scale:
        logger.warning(f'field corrections sum to {corrections.total:.6e}, pair energies differ by {difference:.6e}')
    return mismatch / scale
