'''
Named terms of the Pauli mean-field Hamiltonian, their groups and the
source-by-operator layout of the coherent sector.
'''
from dataclasses import dataclass
from enum import Enum

from utils.errors import ConfigurationError


class TermId(str, Enum):
    # external (single electron in the laser field)
    SCALAR = 'scalar'
    DIPOLE_PA = 'dipole-pA'
    DIAMAGNETIC_AA = 'diamagnetic-AA'
    ZEEMAN_EXT = 'zeeman-ext'
    DARWIN_EXT = 'darwin-ext'
    SOC_EXT = 'soc-ext'
    # internal mean field
    HARTREE = 'hartree'
    CONTACT_ORB = 'contact-orb'
    CONTACT_DARWIN = 'contact-darwin'
    DIPOLAR_ORB = 'dipolar-orb'
    SOO_ZEEMAN_ORB = 'soo-zeeman-orb'
    SOO_PA_SPIN = 'soo-pA-spin'
    SPIN_SPIN = 'spin-spin'
    SOC_INT = 'soc-int'
    SOC_PHI2_SPIN = 'soc-phi2-spin'
    # coherent light-induced mean field
    PHI2_FIELD = 'phi2-field'
    PA_FIELD = 'pA-field'
    AA_ORB = 'AA-orb'
    AA_FIELD = 'AA-field'
    AA_SPIN = 'AA-spin'
    ZEEMAN_FIELD = 'zeeman-field'
    SOC_EXT_INT = 'soc-ext-int'

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ConfigurationError(
                f'unknown term {value!r}; expected one of {", ".join(t.value for t in cls)}'
            ) from None


EXT_TERMS = (
    TermId.SCALAR, TermId.DIPOLE_PA, TermId.DIAMAGNETIC_AA,
    TermId.ZEEMAN_EXT, TermId.DARWIN_EXT, TermId.SOC_EXT,
)
INT_TERMS = (
    TermId.HARTREE, TermId.CONTACT_ORB, TermId.CONTACT_DARWIN, TermId.DIPOLAR_ORB,
    TermId.SOO_ZEEMAN_ORB, TermId.SOO_PA_SPIN, TermId.SPIN_SPIN, TermId.SOC_INT, TermId.SOC_PHI2_SPIN,
)
COH_TERMS = (
    TermId.PHI2_FIELD, TermId.PA_FIELD, TermId.AA_ORB, TermId.AA_FIELD,
    TermId.AA_SPIN, TermId.ZEEMAN_FIELD, TermId.SOC_EXT_INT,
)
ALL_TERMS = EXT_TERMS + INT_TERMS + COH_TERMS

GROUPS = {'EXT': EXT_TERMS, 'INT': INT_TERMS, 'COH': COH_TERMS}

# terms that survive when every 1/c**2 correction is switched off
LEADING_ORDER_TERMS = frozenset({
    TermId.SCALAR, TermId.DIPOLE_PA, TermId.DIAMAGNETIC_AA, TermId.ZEEMAN_EXT, TermId.HARTREE,
})

# power of A_ext each coherent energy scales with at fixed orbitals
A_EXT_EXPONENT = {
    TermId.PHI2_FIELD: 1,
    TermId.PA_FIELD: 1,
    TermId.AA_ORB: 1,
    TermId.AA_FIELD: 2,
    TermId.AA_SPIN: 1,
    TermId.ZEEMAN_FIELD: 1,
    TermId.SOC_EXT_INT: 1,
}

DESCRIPTIONS = {
    TermId.SCALAR: 'q Phi_ext',
    TermId.DIPOLE_PA: '-(q/m) A_ext . p',
    TermId.DIAMAGNETIC_AA: '(q^2/2m) A_ext^2',
    TermId.ZEEMAN_EXT: '-(q hbar/2m) sigma . B_ext',
    TermId.DARWIN_EXT: '-(q hbar^2/8m^2c^2) div E_ext',
    TermId.SOC_EXT: '-(q hbar/4m^2c^2) sigma . E_ext x p',
    TermId.HARTREE: 'q Phi0',
    TermId.CONTACT_ORB: 'q Phi2_orb',
    TermId.CONTACT_DARWIN: '(q hbar^2/8m^2c^2) Laplacian Phi0',
    TermId.DIPOLAR_ORB: '-(q/m) A2_orb . p',
    TermId.SOO_ZEEMAN_ORB: '-(q hbar/2m) sigma . curl A2_orb',
    TermId.SOO_PA_SPIN: '-(q/m) A2_spin . p',
    TermId.SPIN_SPIN: '-(q hbar/2m) sigma . curl A2_spin',
    TermId.SOC_INT: '(q hbar/4m^2c^2) sigma . grad Phi0 x p',
    TermId.SOC_PHI2_SPIN: 'q Phi2_spin',
    TermId.PHI2_FIELD: 'q Phi2_field',
    TermId.PA_FIELD: '-(q/m) A2_field . p',
    TermId.AA_ORB: '(q^2/m) A_ext . A2_orb',
    TermId.AA_FIELD: '(q^2/m) A_ext . A2_field',
    TermId.AA_SPIN: '(q^2/m) A_ext . A2_spin',
    TermId.ZEEMAN_FIELD: '-(q hbar/2m) sigma . curl A2_field',
    TermId.SOC_EXT_INT: '-(q^2 hbar/4m^2c^2) sigma . (grad Phi0 x A_ext)',
}


def group_of(term):
    term = TermId.parse(term)
    for name, members in GROUPS.items():
        if term in members:
            return name
    raise ConfigurationError(f'term {term} belongs to no group')


# Coherent sector laid out by source (rows) and operator (columns)
TABLE_ROWS = ('rho0', 'j_orb', 'j_spin', 'j_field', 'rho2_field')
TABLE_COLUMNS = ('coulomb', 'paramagnetic I', 'paramagnetic II', 'zeeman', 'spin-orbit')
TABLE_CELLS = {
    ('rho0', 'spin-orbit'): TermId.SOC_EXT_INT,
    ('j_orb', 'paramagnetic II'): TermId.AA_ORB,
    ('j_spin', 'paramagnetic II'): TermId.AA_SPIN,
    ('j_field', 'paramagnetic I'): TermId.PA_FIELD,
    ('j_field', 'paramagnetic II'): TermId.AA_FIELD,
    ('j_field', 'zeeman'): TermId.ZEEMAN_FIELD,
    ('rho2_field', 'coulomb'): TermId.PHI2_FIELD,
}

# spin mechanisms: direct couplings to the laser and the four indirect ones
DIRECT_SPIN_TERMS = (TermId.ZEEMAN_EXT, TermId.SOC_EXT)
MECHANISMS = {
    'A1': TermId.ZEEMAN_FIELD,
    'A2': TermId.SOC_EXT_INT,
    'B1': TermId.AA_SPIN,
    'B2': TermId.PHI2_FIELD,
}
SPIN_FREE_COHERENT = (TermId.PA_FIELD, TermId.AA_ORB, TermId.AA_FIELD)


@dataclass(frozen=True)
class TermToggles:
    '''
    Which terms the Hamiltonian applies.

    Fields:
        enabled (frozenset[TermId]): the switched-on terms.
    '''
    enabled: frozenset = frozenset(ALL_TERMS)

    def __contains__(self, term):
        return TermId.parse(term) in self.enabled

    def __iter__(self):
        return (t for t in ALL_TERMS if t in self.enabled)

    @classmethod
    def all_on(cls):
        return cls()

    @classmethod
    def none(cls):
        return cls(frozenset())

    @classmethod
    def only(cls, *terms):
        return cls(frozenset(TermId.parse(t) for t in terms))

    @classmethod
    def leading_order(cls):
        return cls(LEADING_ORDER_TERMS)

    def without(self, *terms):
        return TermToggles(self.enabled - {TermId.parse(t) for t in terms})

    def restricted(self, group):
        return TermToggles(self.enabled & frozenset(GROUPS[group]))

    def any_in(self, group):
        return bool(self.enabled & frozenset(GROUPS[group]))

    @classmethod
    def from_dict(cls, payload):
        '''
        Scenario toggles: {term: bool}, starting from all-on. The special keys
        'preset' ('all', 'none', 'leading-order') and 'only' (list of terms) set
        the starting point before the per-term booleans are applied.
        '''
        payload = dict(payload or {})
        preset = payload.pop('preset', 'all')
        presets = {'all': cls.all_on, 'none': cls.none, 'leading-order': cls.leading_order}
        if preset not in presets:
            raise ConfigurationError(f'unknown toggle preset {preset!r}; expected one of {", ".join(presets)}')
        enabled = set(presets[preset]().enabled)
        if 'only' in payload:
            enabled = {TermId.parse(t) for t in payload.pop('only')}
        for key, value in payload.items():
            term = TermId.parse(key)
            if not isinstance(value, bool):
                raise ConfigurationError(f'toggle for {term} must be true or false, got {value!r}')
            if value:
                enabled.add(term)
            else:
                enabled.discard(term)
        return cls(frozenset(enabled))

    def as_dict(self):
        return {t.value: t in self.enabled for t in ALL_TERMS}
