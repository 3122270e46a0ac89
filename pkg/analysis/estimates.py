'''
Order-of-magnitude layer: fluence to field conversion, the energy scale
estimates of the external, internal and coherent sectors, and the yield
parameter eta comparing the coherent sector to the internal second-order one.

Everything here works in SI.
'''
from dataclasses import dataclass, field
import math

from scipy import constants as codata

from core.constants import PhysicalConstants
from utils.errors import ConfigurationError

SI = PhysicalConstants.si()


def fluence_to_field(fluence, duration, constants=SI):
    '''
    Peak electric field (V/m) of a pulse of `fluence` (mJ/cm2) and `duration` (s)
    from c eps0 E**2 / 2 = 10 fluence / duration, the factor 10 turning mJ/cm2
    into J/m2.
    '''
    if not fluence > 0.0 or not duration > 0.0:
        raise ConfigurationError(f'fluence and duration must be positive, got {fluence}, {duration}')
    return math.sqrt(2.0 * 10.0 * fluence / duration / (constants.c * constants.eps0))


@dataclass(frozen=True)
class EtaInputs:
    '''
    Fields:
        r_ij (float): characteristic electron distance (m).
        E_ext (float): field amplitude (V/m); zero gives eta = 0.
        wavelength (float): external wavelength (m).
    '''
    r_ij: float
    E_ext: float
    wavelength: float
    constants: PhysicalConstants = field(default=SI)

    def __post_init__(self):
        if not self.r_ij > 0.0:
            raise ConfigurationError(f'r_ij must be positive, got {self.r_ij}')
        if not self.wavelength > 0.0:
            raise ConfigurationError(f'wavelength must be positive, got {self.wavelength}')
        if not self.E_ext >= 0.0:
            raise ConfigurationError(f'field amplitude must be non-negative, got {self.E_ext}')


def eta(inputs):
    '''eta = (r_ij / lambda_C) (e E_ext lambda / m c**2).'''
    c = inputs.constants
    return (inputs.r_ij / c.lambda_C) * (c.e * inputs.E_ext * inputs.wavelength / c.rest_energy)


# (label, r_ij [m], E [V/m], wavelength [m], quoted value)
REFERENCE_POINTS = (
    ('1 A, 4e8 V/m, 800 nm', 1e-10, 4e8, 800e-9, 0.03),
    ('3 A, 4e8 V/m, 800 nm', 3e-10, 4e8, 800e-9, 0.09),
    ('1 A, 1e10 V/m, 800 nm', 1e-10, 1e10, 800e-9, 0.65),
)


def reference_table(constants=SI):
    rows = []
    for label, r, E, wavelength, quoted in REFERENCE_POINTS:
        value = eta(EtaInputs(r, E, wavelength, constants))
        rows.append({'point': label, 'eta_exact': value, 'eta_quoted': quoted})
    return rows


@dataclass
class MagnitudeEstimates:
    '''
    Energy scales (J) of the three Hamiltonian sectors.

    Fields:
        U_ext (tuple): e Phi_ext times (1, lambda_C/lambda, (lambda_C/lambda)**2).
        U_int (tuple): (N e_bar**2 / r_ij) times (1, (lambda_C/r_ij)**2).
        U_int_ext (float): (N e_bar**2 / r_ij)(lambda_C / r_ij)(e Phi_ext / m c**2).
    '''
    U_ext: tuple
    U_int: tuple
    U_int_ext: float
    phi_ext: float

    @property
    def coherent_ratio(self):
        '''U_int_ext over the second-order internal scale; equals eta.'''
        return self.U_int_ext / self.U_int[1] if self.U_int[1] else math.inf

    def as_dict(self):
        return {
            'phi_ext': self.phi_ext,
            'U_ext': list(self.U_ext),
            'U_int': list(self.U_int),
            'U_int_ext': self.U_int_ext,
            'coherent_ratio': self.coherent_ratio,
        }


def magnitude_estimates(r_ij, count, E_ext, wavelength, constants=SI):
    '''Sector scales for `count` electrons at distance r_ij, with Phi_ext = E_ext * wavelength.'''
    inputs = EtaInputs(r_ij, E_ext, wavelength, constants)
    if int(count) < 1:
        raise ConfigurationError(f'electron count must be at least 1, got {count}')
    lam_c = constants.lambda_C
    phi_ext = inputs.E_ext * inputs.wavelength
    e_phi = constants.e * phi_ext
    ratio_ext = lam_c / inputs.wavelength
    coulomb = count * constants.e_bar_sq / inputs.r_ij
    ratio_int = lam_c / inputs.r_ij
    return MagnitudeEstimates(
        U_ext=(e_phi, e_phi * ratio_ext, e_phi * ratio_ext ** 2),
        U_int=(coulomb, coulomb * ratio_int ** 2),
        U_int_ext=coulomb * ratio_int * e_phi / constants.rest_energy,
        phi_ext=phi_ext,
    )


def summary(constants=SI):
    '''Constants quoted alongside every report.'''
    return {
        'lambda_C': constants.lambda_C,
        'rest_energy_eV': constants.rest_energy / codata.eV,
        'fine_structure': constants.fine_structure,
    }
