'''
Poisson solves for the internal potentials:

    -Laplacian Phi = (q / eps0) rho
    -Laplacian A   = (q / (eps0 c**2)) j_T

On the periodic box the solves divide by k**2. With a padding factor of 2 or 3
the source is embedded in a larger zero-padded box and convolved with the
free-space kernel truncated at a radius R covering every separation inside the
physical box, which gives the isolated-system potential without periodic
images. The 'green-kernel' method delegates to the sampled kernels of
field_solvers.kernels.
'''
import math

import numpy as np
from scipy import special

from core.constants import ATOMIC
from core.fields import ScalarField, VectorField
from core.spectral import forward, inverse, transverse_project_array
from field_solvers import kernels
from field_solvers.config import SolverConfig
from utils.logger import Logger

logger = Logger(__name__).logger

NEUTRALITY_TOLERANCE = 1e-10


def plummer_factor(k, softening):
    '''Fourier factor S(k) = ka K1(ka) of a Plummer-smoothed point charge, S(0) = 1.'''
    if softening == 0.0:
        return 1.0
    ka = k * softening
    safe = np.where(ka == 0.0, 1.0, ka)
    return np.where(ka == 0.0, 1.0, safe * special.k1(safe))


def truncation_radius(grid, padding):
    diagonal = math.sqrt(sum(L * L for L in grid.box))
    return min((padding - 1) * min(grid.box), diagonal)


def coulomb_truncated_hat(k, R):
    '''Fourier transform of 1/r restricted to r < R: 8 pi sin(kR/2)**2 / k**2.'''
    safe = np.where(k == 0.0, 1.0, k)
    return np.where(k == 0.0, 2.0 * math.pi * R * R, 8.0 * math.pi * np.sin(0.5 * safe * R) ** 2 / safe ** 2)


def radial_truncated_hat(k, R):
    '''
    Fourier transform of r restricted to r < R,

        4 pi [2R sin(kR)/k**3 + (2/k**4 - R**2/k**2) cos(kR) - 2/k**4],

    with its power series for kR < 1 to avoid cancellation.
    '''
    kR = k * R
    small = kR < 1.0
    safe = np.where(small, 1.0, k)
    closed = 4.0 * math.pi * (
        2.0 * R * np.sin(safe * R) / safe ** 3
        + (2.0 / safe ** 4 - R * R / safe ** 2) * np.cos(safe * R)
        - 2.0 / safe ** 4
    )
    series = np.zeros_like(k)
    term_k = np.ones_like(k)
    for n in range(12):
        series += (-1) ** n * term_k * R ** (2 * n + 4) / (math.factorial(2 * n + 1) * (2 * n + 4))
        term_k = term_k * k * k
    return np.where(small, 4.0 * math.pi * series, closed)


class IsolatedKernel:
    '''Truncated free-space kernel spectra on the padded grid of `grid`.'''

    def __init__(self, grid, padding, softening=0.0):
        self.grid = grid
        self.padding = padding
        self.padded = grid.padded(padding)
        self.R = truncation_radius(grid, padding)
        kx, ky, kz = np.meshgrid(*self.padded.wavevectors, indexing='ij')
        self.k_vec = np.stack([kx, ky, kz])
        self.k = np.sqrt(self.padded.k_squared)
        smoothing = plummer_factor(self.k, softening)
        self.scalar = coulomb_truncated_hat(self.k, self.R) * smoothing
        self.radial = radial_truncated_hat(self.k, self.R) * smoothing

    def embed(self, data):
        out = np.zeros(data.shape[:-3] + self.padded.shape)
        out[..., :self.grid.n[0], :self.grid.n[1], :self.grid.n[2]] = data
        return out

    def crop(self, data):
        return np.ascontiguousarray(data[..., :self.grid.n[0], :self.grid.n[1], :self.grid.n[2]])

    def darwin_apply(self, j_hat):
        '''sum_j G_ij j_j with G_ij = delta_ij G + (1/2) k_i k_j R_hat.'''
        k_dot_j = np.sum(self.k_vec * j_hat, axis=0)
        return self.scalar[None] * j_hat + 0.5 * self.k_vec * (self.radial * k_dot_j)[None]


_isolated_cache = {}


def isolated_kernel(grid, padding, softening):
    key = (grid, padding, float(softening))
    if key not in _isolated_cache:
        if len(_isolated_cache) >= 4:
            _isolated_cache.pop(next(iter(_isolated_cache)))
        _isolated_cache[key] = IsolatedKernel(grid, padding, softening)
    return _isolated_cache[key]


_warned_kinds = set()


def _note(notes, message):
    kind = message.split('(')[0].strip()
    if kind in _warned_kinds:
        logger.debug(message)
    else:
        _warned_kinds.add(kind)
        logger.warning(message)
    if notes is not None:
        notes.append(message)


def _periodic_inverse_laplacian(grid, source_hat, softening):
    k2 = grid.k_squared
    safe = np.where(k2 == 0.0, 1.0, k2)
    factor = np.where(k2 == 0.0, 0.0, 1.0 / safe)
    if softening > 0.0:
        factor = factor * plummer_factor(np.sqrt(k2), softening)
    return source_hat * factor


def _check_neutrality(grid, rho, cfg, notes):
    total = float(np.sum(rho) * grid.dV)
    scale = float(np.sum(np.abs(rho)) * grid.dV)
    if cfg.zero_mode_policy == 'drop' and abs(total) > NEUTRALITY_TOLERANCE * max(scale, 1e-300):
        _note(notes, f'non-neutral periodic source (integral {total:.6e}); k=0 mode dropped, uniform background implied')


def scalar_potential(grid, rho, cfg=SolverConfig(), constants=ATOMIC, notes=None, with_gradient=False):
    '''
    Phi with -Laplacian Phi = (q / eps0) rho. Returns (phi, grad_phi) where
    grad_phi is None unless requested.
    '''
    prefactor = constants.q / constants.eps0
    if not np.any(rho):
        return np.zeros(grid.shape), (np.zeros((3,) + grid.shape) if with_gradient else None)

    if cfg.method == 'green-kernel':
        coupling = prefactor / (4.0 * math.pi)
        phi = coupling * kernels.convolve(grid, 'coulomb', rho, cfg.padding_factor, cfg.softening, notes)
        grad = None
        if with_gradient:
            grad = -coupling * kernels.odd_field(grid, rho, cfg.padding_factor, cfg.softening, notes)
        return phi, grad

    if not cfg.isolated:
        if cfg.zero_mode_policy == 'neutralizing-background':
            rho = rho - rho.mean()
        else:
            _check_neutrality(grid, rho, cfg, notes)
        phi_hat = prefactor * _periodic_inverse_laplacian(grid, forward(rho), cfg.softening)
        grad = None
        if with_gradient:
            grad = np.stack([inverse(1j * grid.k_derivative[d] * phi_hat, real=True) for d in range(3)])
        return inverse(phi_hat, real=True), grad

    kernel = isolated_kernel(grid, cfg.padding_factor, cfg.softening)
    coupling = prefactor / (4.0 * math.pi)
    phi_hat = coupling * kernel.scalar * forward(kernel.embed(rho))
    grad = None
    if with_gradient:
        k_d = kernel.padded.k_derivative
        grad = kernel.crop(np.stack([inverse(1j * k_d[d] * phi_hat, real=True) for d in range(3)]))
    return kernel.crop(inverse(phi_hat, real=True)), grad


def vector_potential(grid, j, cfg=SolverConfig(), constants=ATOMIC, notes=None, with_curl=False):
    '''
    A with -Laplacian A = (q / (eps0 c**2)) j_T, Coulomb gauge. Returns
    (A, curl_A) where curl_A is None unless requested.
    '''
    prefactor = constants.q / (constants.eps0 * constants.c ** 2)
    if not np.any(j):
        zeros = np.zeros((3,) + grid.shape)
        return zeros, (zeros.copy() if with_curl else None)

    if cfg.method == 'green-kernel':
        coupling = prefactor / (4.0 * math.pi)
        a = coupling * kernels.convolve(grid, 'darwin', j, cfg.padding_factor, cfg.softening, notes)
        curl = None
        if with_curl:
            # Biot-Savart: curl A = coupling * integral of j(x') x (x - x') / |x - x'|**3
            odd = np.stack([kernels.odd_field(grid, j[c], cfg.padding_factor, cfg.softening, notes) for c in range(3)])
            curl = coupling * np.stack([
                odd[1, 2] - odd[2, 1],
                odd[2, 0] - odd[0, 2],
                odd[0, 1] - odd[1, 0],
            ])
        return a, curl

    if not cfg.isolated:
        j_t, _ = transverse_project_array(grid, j)
        a_hat = np.stack([prefactor * _periodic_inverse_laplacian(grid, forward(j_t[d]), cfg.softening) for d in range(3)])
        curl = None
        if with_curl:
            curl = _curl_hat(grid.k_derivative, a_hat)
        return np.stack([inverse(a_hat[d], real=True) for d in range(3)]), curl

    kernel = isolated_kernel(grid, cfg.padding_factor, cfg.softening)
    coupling = prefactor / (4.0 * math.pi)
    j_hat = np.stack([forward(c) for c in kernel.embed(j)])
    a_hat = coupling * kernel.darwin_apply(j_hat)
    curl = None
    if with_curl:
        curl = kernel.crop(_curl_hat(kernel.padded.k_derivative, a_hat))
    return kernel.crop(np.stack([inverse(a_hat[d], real=True) for d in range(3)])), curl


def _curl_hat(k, a_hat):
    return np.stack([
        inverse(1j * (k[1] * a_hat[2] - k[2] * a_hat[1]), real=True),
        inverse(1j * (k[2] * a_hat[0] - k[0] * a_hat[2]), real=True),
        inverse(1j * (k[0] * a_hat[1] - k[1] * a_hat[0]), real=True),
    ])


def solve_scalar_poisson(source, cfg=SolverConfig(), constants=ATOMIC, notes=None):
    phi, _ = scalar_potential(source.grid, source.data, cfg, constants, notes)
    return ScalarField(source.grid, phi)


def solve_vector_potential(j0, cfg=SolverConfig(), constants=ATOMIC, notes=None):
    a, _ = vector_potential(j0.grid, j0.data, cfg, constants, notes)
    return VectorField(j0.grid, a)


def transverse_project(j):
    '''Helmholtz split of a current into (j_T, j_L).'''
    j_t, j_l = transverse_project_array(j.grid, j.data)
    return VectorField(j.grid, j_t), VectorField(j.grid, j_l)


def greens_kernel_scalar(source, cfg=SolverConfig(method='green-kernel', padding_factor=2), constants=ATOMIC, notes=None):
    '''
    Direct evaluation of (q / 4 pi eps0) * integral of source(x') / |x - x'| by
    discrete convolution with the sampled kernel, whatever `cfg.method` says.
    '''
    coupling = constants.q / (4.0 * math.pi * constants.eps0)
    return ScalarField(
        source.grid,
        coupling * kernels.convolve(source.grid, 'coulomb', source.data, cfg.padding_factor, cfg.softening, notes),
    )


def greens_kernel_vector(j0, cfg=SolverConfig(method='green-kernel', padding_factor=2), constants=ATOMIC, notes=None):
    '''
    Direct evaluation of (q mu0 / 4 pi) * integral of
    [j / 2r + r (r . j) / 2r**3] with the two kernel terms as written.
    '''
    coupling = constants.q * constants.mu0 / (4.0 * math.pi)
    return VectorField(
        j0.grid,
        coupling * kernels.convolve(j0.grid, 'darwin', j0.data, cfg.padding_factor, cfg.softening, notes),
    )
