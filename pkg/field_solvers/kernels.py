'''
Real-space integral kernels sampled on the grid and their discrete convolution.

Kernels (r = x - x', r_a = sqrt(r**2 + a**2)):

    coulomb   1/r
    darwin    delta_ij / 2r + r_i r_j / 2r**3          (transverse quasi-static kernel)
    odd       r / r**3                                  (gradient of -1/r)
    dipolar   (delta_ab r**2 - 3 r_a r_b) / r**5 - (8 pi / 3) delta_ab delta(r)
    contact   delta(r), smoothed to the Plummer density 3 a**2 / (4 pi r_a**5)

With a = 0 the singular sample at r = 0 is replaced by the corrected
trapezoidal weight of a cubic lattice; with a > 0 every kernel is evaluated
with r_a in place of r. Convolutions use zero padding (Hockney) when the
padding factor is 2 or 3 and wrap around the periodic box otherwise.
'''
from functools import lru_cache
import math

import numpy as np
from scipy import fft as sp_fft

from femto_pauli import settings
from utils.errors import ConfigurationError
from utils.logger import Logger

logger = Logger(__name__).logger

# lattice sum constant of 1/|m| over the simple cubic lattice (punctured trapezoid correction)
ZETA_CUBIC = -2.8372974794806

KERNELS = {'coulomb': 0, 'odd': 1, 'darwin': 2, 'dipolar': 2, 'contact': 0}

SPATIAL_AXES = (-3, -2, -1)


def kernel_rank(name):
    if name not in KERNELS:
        raise ConfigurationError(f'unknown kernel {name!r}; expected one of {", ".join(KERNELS)}')
    return KERNELS[name]


def evaluate_kernel(name, r, softening=0.0, spacing=None):
    '''
    Kernel values at displacements r of shape (3, ...). Returns shape (...),
    (3, ...) or (3, 3, ...) by kernel rank. Zero displacements receive the
    centre weight (a = 0, needs the cubic `spacing`) or the softened value.
    '''
    rank = kernel_rank(name)
    a = float(softening)
    r2 = np.sum(r ** 2, axis=0)
    at_origin = r2 == 0.0
    if a > 0.0:
        ra2 = r2 + a * a
        safe = ra2
    else:
        ra2 = r2
        safe = np.where(at_origin, 1.0, r2)
    inv = 1.0 / np.sqrt(safe)
    inv3 = inv ** 3

    if name == 'contact':
        out = (3.0 * a * a / (4.0 * math.pi)) * inv3 * inv * inv if a > 0.0 else np.zeros(r2.shape)
    elif rank == 0:
        out = inv.copy()
    elif rank == 1:
        out = r * inv3
    elif name == 'darwin':
        out = np.einsum('a...,b...->ab...', r, r) * (0.5 * inv3)
        for d in range(3):
            out[d, d] += 0.5 * inv
    else:
        inv5 = inv3 * inv * inv
        out = -3.0 * np.einsum('a...,b...->ab...', r, r) * inv5
        for d in range(3):
            out[d, d] += (r2 - 2.0 * a * a) * inv5

    if a == 0.0 and name == 'contact':
        if spacing is None:
            raise ConfigurationError('the unsoftened contact kernel needs the grid spacing')
        # discrete delta: unit weight after the dV of the quadrature
        out[at_origin] = 1.0 / float(np.prod(np.broadcast_to(np.asarray(spacing, dtype=float), (3,))))
    elif a == 0.0 and np.any(at_origin):
        h = _cubic_spacing(spacing)
        centre = {
            'coulomb': -ZETA_CUBIC / h,
            'odd': 0.0,
            'darwin': -(2.0 * ZETA_CUBIC / 3.0) / h,
            'dipolar': -(8.0 * math.pi / 3.0) / h ** 3,
        }[name]
        if rank == 0:
            out[at_origin] = centre
        elif rank == 1:
            out[:, at_origin] = 0.0
        else:
            out[:, :, at_origin] = 0.0
            for d in range(3):
                out[d, d][at_origin] = centre
    return out


def _cubic_spacing(spacing):
    if spacing is None:
        raise ConfigurationError('unsoftened kernels need the grid spacing for the centre weight')
    h = np.broadcast_to(np.asarray(spacing, dtype=float), (3,))
    if not (math.isclose(h[0], h[1], rel_tol=1e-12) and math.isclose(h[0], h[2], rel_tol=1e-12)):
        raise ConfigurationError(
            f'unsoftened kernel quadrature requires cubic cells, got spacing {tuple(h)}; use softening > 0'
        )
    return float(h[0])


def _offsets(grid, padding):
    '''Minimum-image displacement mesh of the (padded) convolution grid.'''
    axes = []
    for n, h in zip(grid.n, grid.spacing):
        size = padding * n
        m = np.arange(size)
        m = np.where(m < (size + 1) // 2, m, m - size)
        axes.append(m * h)
    return np.stack(np.meshgrid(*axes, indexing='ij'))


@lru_cache(maxsize=4)
def kernel_spectrum(grid, name, padding, softening):
    '''FFT of the sampled kernel (times dV) on the convolution grid.'''
    samples = evaluate_kernel(name, _offsets(grid, padding), softening, grid.spacing)
    return sp_fft.fftn(samples * grid.dV, axes=SPATIAL_AXES, workers=settings.FFT_WORKERS)


def _embed(grid, padding, data):
    if padding == 1:
        return data
    shape = data.shape[:-3] + tuple(padding * n for n in grid.n)
    out = np.zeros(shape, dtype=data.dtype)
    out[..., :grid.n[0], :grid.n[1], :grid.n[2]] = data
    return out


def _crop(grid, data):
    return data[..., :grid.n[0], :grid.n[1], :grid.n[2]]


def check_wraparound(grid, data, padding, notes=None):
    '''Flags sources that reach the box boundary when the periodic box is used for a free-space kernel.'''
    if padding != 1:
        return False
    peak = np.max(np.abs(data))
    if peak == 0.0:
        return False
    faces = max(
        np.max(np.abs(data[..., 0, :, :])), np.max(np.abs(data[..., -1, :, :])),
        np.max(np.abs(data[..., :, 0, :])), np.max(np.abs(data[..., :, -1, :])),
        np.max(np.abs(data[..., :, :, 0])), np.max(np.abs(data[..., :, :, -1])),
    )
    ratio = faces / peak
    if ratio > settings.BOUNDARY_DENSITY_WARNING:
        message = f'kernel convolution without padding: boundary/peak source ratio {ratio:.2e} (periodic images wrap around)'
        logger.warning(message)
        if notes is not None:
            notes.append(message)
        return True
    return False


def convolve(grid, name, data, padding=2, softening=0.0, notes=None):
    '''
    Discrete convolution sum over x' of K(x - x') data(x') dV.

    `data` is a scalar array for 'coulomb', 'contact' and 'odd', and a (3,) vector array
    for 'darwin' and 'dipolar' (contracted with the second kernel index).
    '''
    rank = kernel_rank(name)
    check_wraparound(grid, data, padding, notes)
    spectrum = kernel_spectrum(grid, name, padding, float(softening))
    data_hat = sp_fft.fftn(_embed(grid, padding, data), axes=SPATIAL_AXES, workers=settings.FFT_WORKERS)
    if rank == 0:
        out_hat = spectrum * data_hat
    elif rank == 1:
        out_hat = spectrum * data_hat[None]
    else:
        out_hat = np.einsum('ab...,b...->a...', spectrum, data_hat)
    out = sp_fft.ifftn(out_hat, axes=SPATIAL_AXES, workers=settings.FFT_WORKERS).real
    return np.ascontiguousarray(_crop(grid, out))


def odd_field(grid, data, padding=2, softening=0.0, notes=None):
    '''
    O[f](x) = integral of f(x') (x - x') / |x - x'|**3. Without softening the
    lattice correction (Z/3) h**2 grad f(x) is added, grad f by central
    differences.
    '''
    out = convolve(grid, 'odd', data, padding, softening, notes)
    if float(softening) == 0.0:
        h = _cubic_spacing(grid.spacing)
        out = out + (ZETA_CUBIC / 3.0) * h * h * np.stack(np.gradient(data, *grid.spacing))
    return out


def direct_convolve(grid, name, data, softening=0.0, budget=1 << 22):
    '''
    Free-space double sum of the same sampled kernel, O(M**2). Reference
    quadrature for small grids; capped at BP_DIRECT_SUM_MAX_POINTS points.
    '''
    if grid.size > settings.BP_DIRECT_SUM_MAX_POINTS:
        raise ConfigurationError(
            f'direct double-sum quadrature is capped at {settings.BP_DIRECT_SUM_MAX_POINTS} points, grid has {grid.size}'
        )
    rank = kernel_rank(name)
    points = grid.coordinates.reshape(3, -1)
    flat = data.reshape(data.shape[:-3] + (-1,))
    out = np.zeros(((3,) if rank else ()) + (points.shape[1],))
    chunk = max(1, budget // (points.shape[1] * 3 ** max(rank, 1)))
    for start in range(0, points.shape[1], chunk):
        targets = points[:, start:start + chunk]
        r = targets[:, :, None] - points[:, None, :]
        k = evaluate_kernel(name, r, softening, grid.spacing)
        if rank == 0:
            out[start:start + chunk] = k @ flat
        elif rank == 1:
            out[:, start:start + chunk] = k @ flat
        else:
            out[:, start:start + chunk] = np.einsum('abts,bs->at', k, flat)
    out *= grid.dV
    return out.reshape(out.shape[:-1] + grid.shape)


def direct_odd_field(grid, data, softening=0.0):
    out = direct_convolve(grid, 'odd', data, softening)
    if float(softening) == 0.0:
        h = _cubic_spacing(grid.spacing)
        out = out + (ZETA_CUBIC / 3.0) * h * h * np.stack(np.gradient(data, *grid.spacing))
    return out
