'''
Analytic laser pulse and the external field samples it produces.

    A(t) = A0 f(tau) cos(omega (tau - t0) + phase) e_pol,   E = -dA/dt

with tau = t in the dipole approximation and tau = t - k_hat . x / c for a
plane wave, where B = k_hat x E / c. Envelopes f: 'gaussian'
exp(-2 ln2 (t - t0)**2 / dt**2) (dt is the intensity FWHM), 'sin2'
cos**2(pi (t - t0) / dt) on |t - t0| < dt/2, and 'flat'.
'''
from dataclasses import dataclass, asdict, replace
import math
from typing import Optional

import numpy as np

from analysis.estimates import fluence_to_field
from core.constants import ATOMIC
from core.units import read_quantity, to_atomic, to_si
from utils.errors import ConfigurationError
from utils.logger import Logger

logger = Logger(__name__).logger

ENVELOPES = ('gaussian', 'sin2', 'flat')
SPATIAL_MODES = ('dipole', 'plane-wave')

LN2 = math.log(2.0)


def _unit(vector, name):
    v = np.asarray(vector, dtype=float)
    norm = np.linalg.norm(v) if v.shape == (3,) else 0.0
    if norm == 0.0:
        raise ConfigurationError(f'{name} must be a non-zero 3-vector, got {vector!r}')
    return tuple(float(x) for x in v / norm)


@dataclass(frozen=True)
class LaserPulse:
    '''
    Single linearly polarized pulse, all values in atomic units.

    Fields:
        A0 (float): vector-potential amplitude.
        polarization (tuple): unit polarization vector e_pol.
        wavelength (float): carrier wavelength; omega = 2 pi c / wavelength.
        envelope (str): 'gaussian', 'sin2' or 'flat'.
        duration (float): envelope duration dt (ignored by 'flat').
        t0 (float): envelope centre.
        carrier_phase (float): radians.
        spatial_dependence (str): 'dipole' or 'plane-wave'.
        propagation (tuple): unit propagation direction (plane-wave only).
        fluence (float | None): fluence that fixed A0, kept for the manifest.
        c (float): speed of light the carrier frequency is tied to.
    '''
    A0: float
    polarization: tuple = (1.0, 0.0, 0.0)
    wavelength: float = 15117.8
    envelope: str = 'gaussian'
    duration: float = 2067.0
    t0: float = 0.0
    carrier_phase: float = 0.0
    spatial_dependence: str = 'dipole'
    propagation: tuple = (0.0, 0.0, 1.0)
    fluence: Optional[float] = None
    c: float = ATOMIC.c

    def __post_init__(self):
        if self.envelope not in ENVELOPES:
            raise ConfigurationError(f'unknown envelope {self.envelope!r}; expected one of {ENVELOPES}')
        if self.spatial_dependence not in SPATIAL_MODES:
            raise ConfigurationError(
                f'unknown spatial dependence {self.spatial_dependence!r}; expected one of {SPATIAL_MODES}'
            )
        if not self.wavelength > 0.0:
            raise ConfigurationError(f'wavelength must be positive, got {self.wavelength}')
        if self.envelope != 'flat' and not self.duration > 0.0:
            raise ConfigurationError(f'pulse duration must be positive, got {self.duration}')
        object.__setattr__(self, 'polarization', _unit(self.polarization, 'polarization'))
        object.__setattr__(self, 'propagation', _unit(self.propagation, 'propagation'))
        if self.spatial_dependence == 'plane-wave':
            overlap = abs(float(np.dot(self.polarization, self.propagation)))
            if overlap > 1e-12:
                raise ConfigurationError(
                    f'plane-wave polarization must be transverse to the propagation direction (overlap {overlap:.3e})'
                )

    @property
    def omega(self):
        return 2.0 * math.pi * self.c / self.wavelength

    @property
    def peak_field(self):
        '''Carrier amplitude of E, A0 * omega.'''
        return self.A0 * self.omega

    def envelope_value(self, t):
        x = np.asarray(t, dtype=float) - self.t0
        if self.envelope == 'gaussian':
            return np.exp(-2.0 * LN2 * x ** 2 / self.duration ** 2)
        if self.envelope == 'sin2':
            inside = np.abs(x) < 0.5 * self.duration
            return np.where(inside, np.cos(math.pi * x / self.duration) ** 2, 0.0)
        return np.ones_like(x)

    def envelope_derivative(self, t):
        x = np.asarray(t, dtype=float) - self.t0
        if self.envelope == 'gaussian':
            return -4.0 * LN2 * x / self.duration ** 2 * np.exp(-2.0 * LN2 * x ** 2 / self.duration ** 2)
        if self.envelope == 'sin2':
            inside = np.abs(x) < 0.5 * self.duration
            return np.where(inside, -(math.pi / self.duration) * np.sin(2.0 * math.pi * x / self.duration), 0.0)
        return np.zeros_like(x)

    def amplitudes(self, tau):
        '''Scalar profiles (a, e) with A = a e_pol and E = e e_pol at retarded time tau.'''
        f = self.envelope_value(tau)
        df = self.envelope_derivative(tau)
        arg = self.omega * (np.asarray(tau, dtype=float) - self.t0) + self.carrier_phase
        a = self.A0 * f * np.cos(arg)
        e = self.A0 * (self.omega * f * np.sin(arg) - df * np.cos(arg))
        return a, e

    @classmethod
    def from_dict(cls, payload, constants=ATOMIC, units='si'):
        '''
        Build a pulse from a scenario block. The amplitude is given by exactly one
        of 'A0' (vector potential), 'E0' (peak electric field) or 'fluence'
        (with the duration); the carrier by 'wavelength' or 'omega'. Quantities
        accept unit strings ("800nm", "50fs", "1 mJ/cm2"); bare numbers are
        read in `units`.
        '''
        payload = dict(payload)
        known = {
            'A0', 'E0', 'fluence', 'polarization', 'wavelength', 'omega', 'envelope', 'duration',
            't0', 'carrier_phase', 'spatial_dependence', 'propagation',
        }
        unknown = set(payload) - known
        if unknown:
            raise ConfigurationError(f'unknown pulse keys: {", ".join(sorted(unknown))}')

        if 'wavelength' in payload:
            wavelength = read_quantity(payload['wavelength'], 'length', units)
        elif 'omega' in payload:
            wavelength = 2.0 * math.pi * constants.c / read_quantity(payload['omega'], 'frequency', units)
        else:
            raise ConfigurationError('pulse needs a wavelength or an omega')
        omega = 2.0 * math.pi * constants.c / wavelength

        envelope = payload.get('envelope', 'gaussian')
        duration = read_quantity(payload['duration'], 'time', units) if 'duration' in payload else 0.0
        amplitude_keys = [k for k in ('A0', 'E0', 'fluence') if k in payload]
        if len(amplitude_keys) != 1:
            raise ConfigurationError(f'pulse needs exactly one of A0, E0, fluence; got {amplitude_keys or "none"}')

        fluence = None
        if 'A0' in payload:
            A0 = read_quantity(payload['A0'], 'vector_potential', units)
        elif 'E0' in payload:
            A0 = read_quantity(payload['E0'], 'electric_field', units) / omega
        else:
            if not duration > 0.0:
                raise ConfigurationError('a fluence-defined pulse needs a positive duration')
            fluence = read_quantity(payload['fluence'], 'fluence', units)
            A0 = field_from_fluence(fluence, duration) / omega

        return cls(
            A0=A0,
            polarization=tuple(payload.get('polarization', (1.0, 0.0, 0.0))),
            wavelength=wavelength,
            envelope=envelope,
            duration=duration,
            t0=read_quantity(payload['t0'], 'time', units) if 't0' in payload else 0.0,
            carrier_phase=float(payload.get('carrier_phase', 0.0)),
            spatial_dependence=payload.get('spatial_dependence', 'dipole'),
            propagation=tuple(payload.get('propagation', (0.0, 0.0, 1.0))),
            fluence=fluence,
            c=constants.c,
        )

    def as_dict(self):
        payload = asdict(self)
        payload.update(omega=self.omega, peak_field=self.peak_field)
        return payload


def field_from_fluence(fluence, duration):
    '''Peak field (atomic units) for an atomic-unit fluence and duration.'''
    mj_per_cm2 = to_si(fluence, 'fluence') / 10.0
    return to_atomic(fluence_to_field(mj_per_cm2, to_si(duration, 'time')), 'electric_field')


@dataclass
class ExternalFieldSample:
    '''
    External fields at one instant.

    Fields:
        time (float): sample time.
        A, E, B (np.ndarray): shape (3,) when uniform, (3, nx, ny, nz) on a grid.
        phi (float | np.ndarray): external scalar potential, 0 in both pulse modes.
    '''
    time: float
    A: np.ndarray
    E: np.ndarray
    B: np.ndarray
    phi: object = 0.0

    @classmethod
    def zero(cls, time=0.0):
        return cls(time, np.zeros(3), np.zeros(3), np.zeros(3), 0.0)

    @property
    def uniform(self):
        return np.ndim(self.A) == 1 and np.ndim(self.E) == 1 and np.ndim(self.B) == 1 and np.ndim(self.phi) == 0

    def is_zero(self):
        return not (np.any(self.A) or np.any(self.E) or np.any(self.B) or np.any(self.phi))

    def has_vector_potential(self):
        return bool(np.any(self.A))

    def with_static_field(self, B_static):
        '''Adds a uniform static magnetic field (Zeeman coupling only).'''
        if B_static is None or not np.any(B_static):
            return self
        B = np.asarray(self.B, dtype=float) + np.asarray(B_static, dtype=float).reshape((3,) + (1,) * (np.ndim(self.B) - 1))
        return replace(self, B=B)

    def scaled(self, factor):
        return ExternalFieldSample(self.time, self.A * factor, self.E * factor, self.B * factor, self.phi * factor)

    def summary(self):
        return {
            'time': self.time,
            'A_max': float(np.max(np.abs(self.A))),
            'E_max': float(np.max(np.abs(self.E))),
            'B_max': float(np.max(np.abs(self.B))),
        }


def evaluate_pulse(pulse, t, grid=None):
    '''
    ExternalFieldSample of `pulse` at time t. Plane-wave pulses need the grid
    to evaluate the retarded time; a missing pulse gives the zero sample.
    '''
    if pulse is None:
        return ExternalFieldSample.zero(t)
    pol = np.asarray(pulse.polarization)
    if pulse.spatial_dependence == 'dipole':
        a, e = pulse.amplitudes(t)
        return ExternalFieldSample(float(t), float(a) * pol, float(e) * pol, np.zeros(3), 0.0)

    if grid is None:
        raise ConfigurationError('a plane-wave pulse can only be sampled on a grid')
    k_hat = np.asarray(pulse.propagation)
    tau = t - np.tensordot(k_hat, grid.coordinates, axes=1) / pulse.c
    a, e = pulse.amplitudes(tau)
    A = pol.reshape(3, 1, 1, 1) * a[None]
    E = pol.reshape(3, 1, 1, 1) * e[None]
    B = np.cross(k_hat.reshape(3, 1, 1, 1), E, axis=0) / pulse.c
    return ExternalFieldSample(float(t), A, E, B, 0.0)
