'''
Two-body input of the Breit-Pauli oracle: the orbital set with its target,
the densities the pair kernels act on, and the kernel quadrature.
'''
from dataclasses import dataclass, field, replace
import math
from typing import Optional

import numpy as np

from core.constants import ATOMIC
from core.spectral import density_array, spin_density_array
from field_solvers import kernels
from sources.densities import momentum_density_array, selected_orbitals, spin_gradient_tensor_array
from utils.errors import ConfigurationError
from utils.logger import Logger

logger = Logger(__name__).logger

QUADRATURES = ('grid-convolution', 'direct')
NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class PairConfiguration:
    '''
    Orbitals of a Breit-Pauli evaluation. The target orbital feels the
    others; with two orbitals this is the electron pair itself.

    Fields:
        orbitals (SpinorOrbitalSet): normalized orbitals on one grid.
        target (int): orbital the mean fields act on.
        A_ext (np.ndarray | None): uniform external vector potential, shape (3,).
        quadrature (str): 'grid-convolution' (zero-padded FFT convolution) or
            'direct' (free-space double sum, small grids only).
        softening (float | None): shared Plummer length of every kernel;
            None means twice the largest grid spacing.
        padding (int): zero-padding factor of the grid convolution.
    '''
    orbitals: object
    target: int = 0
    A_ext: Optional[np.ndarray] = None
    quadrature: str = 'grid-convolution'
    softening: Optional[float] = None
    padding: int = 2
    constants: object = ATOMIC

    def __post_init__(self):
        if self.orbitals.count < 1:
            raise ConfigurationError('a pair configuration needs at least one orbital')
        if not 0 <= self.target < self.orbitals.count:
            raise ConfigurationError(
                f'target {self.target} out of range for {self.orbitals.count} orbitals', target=self.target,
            )
        if self.quadrature not in QUADRATURES:
            raise ConfigurationError(f'unknown quadrature {self.quadrature!r}; expected one of {QUADRATURES}')
        if self.padding not in (2, 3):
            raise ConfigurationError(f'pair kernels need a padded convolution (2 or 3), got {self.padding}')
        if self.softening is None:
            object.__setattr__(self, 'softening', 2.0 * max(self.orbitals.grid.spacing))
        if not self.softening >= 0.0:
            raise ConfigurationError(f'softening must be >= 0, got {self.softening}')
        norms = self.orbitals.norms()
        if np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
            raise ConfigurationError(f'pair orbitals must be normalized, norms are {np.round(norms, 9).tolist()}')
        if self.A_ext is not None:
            a = np.asarray(self.A_ext, dtype=float)
            if a.shape != (3,):
                raise ConfigurationError(
                    f'the pair oracle needs a uniform A_ext of shape (3,), got {a.shape}; use dipole mode'
                )
            object.__setattr__(self, 'A_ext', a)

    @property
    def grid(self):
        return self.orbitals.grid

    @property
    def partners(self):
        return [i for i in range(self.orbitals.count) if i != self.target]

    @property
    def A(self):
        return np.zeros(3) if self.A_ext is None else self.A_ext

    @property
    def ebar2(self):
        '''q**2 / (4 pi eps0), the interaction strength of identical charges.'''
        return self.constants.q ** 2 / (4.0 * math.pi * self.constants.eps0)

    def with_field(self, A_ext):
        return replace(self, A_ext=None if A_ext is None else np.asarray(A_ext, dtype=float))

    def with_softening(self, softening):
        return replace(self, softening=float(softening))

    def swapped(self):
        '''Two-orbital pair with the target and its partner exchanged.'''
        if self.orbitals.count != 2:
            raise ConfigurationError(f'swapping needs exactly two orbitals, got {self.orbitals.count}')
        return replace(self, target=1 - self.target)

    def quadrature_rule(self, notes=None):
        return KernelQuadrature(self.grid, self.quadrature, self.softening, self.padding, notes)

    def target_densities(self):
        return PairDensities.of(self.grid, self.orbitals.data[self.target], self.constants)

    def partner_densities(self):
        return PairDensities.of(self.grid, selected_orbitals(self.orbitals, self.target), self.constants)

    def describe(self):
        return (
            f'target {self.target} of {self.orbitals.count} orbitals on {self.grid.describe()}, '
            f'{self.quadrature} quadrature, softening {self.softening:.4g} bohr'
        )


@dataclass
class PairDensities:
    '''
    Densities of one side of the pair, summed over its orbitals.

    Fields:
        rho (np.ndarray): phi^dagger phi.
        pi (np.ndarray): Hermitian momentum density Re(phi^dagger p phi), shape (3, ...).
        s (np.ndarray): spin density phi^dagger sigma phi, shape (3, ...).
        T (np.ndarray): hbar Im(phi^dagger sigma_a d_c phi), shape (3, 3, ...).
    '''
    rho: np.ndarray
    pi: np.ndarray
    s: np.ndarray
    T: np.ndarray
    dV: float = 1.0

    @classmethod
    def of(cls, grid, phi, constants=ATOMIC):
        phi = phi if phi.ndim == 5 else phi[None]
        if phi.shape[0] == 0:
            zero = np.zeros(grid.shape)
            return cls(zero, np.zeros((3,) + grid.shape), np.zeros((3,) + grid.shape),
                       np.zeros((3, 3) + grid.shape), grid.dV)
        return cls(
            rho=density_array(phi).sum(axis=0),
            pi=momentum_density_array(grid, phi, constants.hbar),
            s=spin_density_array(phi),
            T=spin_gradient_tensor_array(grid, phi, constants.hbar),
            dV=grid.dV,
        )

    def substituted(self, A, q):
        '''Densities with p replaced by the kinetic momentum p - q A (uniform A).'''
        a = np.asarray(A, dtype=float).reshape(3, 1, 1, 1)
        return PairDensities(
            rho=self.rho,
            pi=self.pi - q * self.rho[None] * a,
            s=self.s,
            T=self.T - q * np.einsum('a...,c...->ac...', self.s, a),
            dV=self.dV,
        )

    def is_empty(self):
        return not np.any(self.rho)

    def integrate(self, values):
        return float(np.sum(values) * self.dV)


@dataclass
class KernelQuadrature:
    '''
    Pair kernels applied to a density: K[f](x) = sum over x' of K(x - x') f(x') dV.
    Both quadratures use the same sampled kernels and the same softening.
    '''
    grid: object
    method: str = 'grid-convolution'
    softening: float = 0.0
    padding: int = 2
    notes: Optional[list] = field(default=None)

    def apply(self, name, data):
        if self.method == 'direct':
            return kernels.direct_convolve(self.grid, name, data, self.softening)
        return kernels.convolve(self.grid, name, data, self.padding, self.softening, self.notes)

    def coulomb(self, f):
        return self.apply('coulomb', f)

    def contact(self, f):
        return self.apply('contact', f)

    def darwin(self, v):
        return self.apply('darwin', v)

    def dipolar(self, v):
        return self.apply('dipolar', v)

    def odd(self, f):
        '''integral of f(x') (x - x') / |x - x'|**3, shape (3,) + grid.'''
        if self.method == 'direct':
            return kernels.direct_odd_field(self.grid, f, self.softening)
        return kernels.odd_field(self.grid, f, self.padding, self.softening, self.notes)

    def odd_components(self, v):
        '''O[v_b][c] for every b and c, shape (3, 3) + grid.'''
        return np.stack([self.odd(v[b]) for b in range(3)])

    def curl_field(self, v):
        '''integral of v(x') x (x - x') / |x - x'|**3.'''
        o = self.odd_components(v)
        return np.stack([o[1, 2] - o[2, 1], o[2, 0] - o[0, 2], o[0, 1] - o[1, 0]])

    def divergence_field(self, v):
        '''integral of v(x') . (x - x') / |x - x'|**3.'''
        return sum(self.odd(v[b])[b] for b in range(3))
