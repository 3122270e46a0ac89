from dataclasses import dataclass, asdict
import math

from scipy import constants as codata

from femto_pauli import settings


@dataclass(frozen=True)
class PhysicalConstants:
    '''
    Constants entering the Pauli-Maxwell equations, in one consistent unit system.

    Fields:
        hbar (float): reduced Planck constant.
        m (float): electron mass.
        q (float): signed electron charge, q = -e.
        e (float): elementary charge.
        c (float): speed of light.
        eps0 (float): vacuum permittivity.
        mu0 (float): vacuum permeability, fixed by mu0 * eps0 * c**2 = 1.
    '''
    hbar: float
    m: float
    q: float
    e: float
    c: float
    eps0: float
    mu0: float
    system: str = 'atomic'

    @property
    def lambda_C(self):
        return 2.0 * math.pi * self.hbar / (self.m * self.c)

    @property
    def omega_C(self):
        return 2.0 * math.pi * self.c / self.lambda_C

    @property
    def e_bar_sq(self):
        '''q**2 / (4 pi eps0), the Coulomb coupling written as e-bar squared.'''
        return self.q ** 2 / (4.0 * math.pi * self.eps0)

    @property
    def rest_energy(self):
        return self.m * self.c ** 2

    @property
    def fine_structure(self):
        return self.e_bar_sq / (self.hbar * self.c)

    @classmethod
    def atomic(cls, c=None):
        '''
        Hartree atomic units: hbar = m = e = 1, eps0 = 1/(4 pi), c = 1/alpha unless
        overridden (a larger or smaller c rescales every relativistic term).
        '''
        c = settings.SPEED_OF_LIGHT_AU if c is None else float(c)
        eps0 = 1.0 / (4.0 * math.pi)
        return cls(hbar=1.0, m=1.0, q=-1.0, e=1.0, c=c, eps0=eps0, mu0=1.0 / (eps0 * c ** 2))

    @classmethod
    def si(cls):
        return cls(
            hbar=codata.hbar,
            m=codata.m_e,
            q=-codata.e,
            e=codata.e,
            c=codata.c,
            eps0=codata.epsilon_0,
            mu0=1.0 / (codata.epsilon_0 * codata.c ** 2),
            system='si',
        )

    def as_dict(self):
        payload = asdict(self)
        payload.update(lambda_C=self.lambda_C, omega_C=self.omega_C)
        return payload


ATOMIC = PhysicalConstants.atomic()
