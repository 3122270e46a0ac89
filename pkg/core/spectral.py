'''
Fourier-differentiation operators on the periodic grid and the spinor bilinears
built from them.

The `*_array` helpers take a Grid3 and raw arrays whose last three axes are
spatial, so they also work on padded grids and on stacks of orbitals. The
public operators wrap them for the field containers.
'''
import numpy as np
from scipy import fft as sp_fft

from core.fields import ScalarField, SpinorField, VectorField
from femto_pauli import settings

SPATIAL_AXES = (-3, -2, -1)


def forward(a):
    return sp_fft.fftn(a, axes=SPATIAL_AXES, workers=settings.FFT_WORKERS)


def inverse(a_hat, real=False):
    out = sp_fft.ifftn(a_hat, axes=SPATIAL_AXES, workers=settings.FFT_WORKERS)
    return out.real if real else out


def gradient_array(grid, f):
    '''(3,) + f.shape array of partial derivatives.'''
    f_hat = forward(f)
    k = grid.k_derivative
    out = np.stack([inverse(1j * k[d] * f_hat, real=np.isrealobj(f)) for d in range(3)])
    return out


def divergence_array(grid, v):
    k = grid.k_derivative
    total = sum(1j * k[d] * forward(v[d]) for d in range(3))
    return inverse(total, real=np.isrealobj(v))


def curl_array(grid, v):
    k = grid.k_derivative
    v_hat = [forward(v[d]) for d in range(3)]
    real = np.isrealobj(v)
    return np.stack([
        inverse(1j * (k[1] * v_hat[2] - k[2] * v_hat[1]), real=real),
        inverse(1j * (k[2] * v_hat[0] - k[0] * v_hat[2]), real=real),
        inverse(1j * (k[0] * v_hat[1] - k[1] * v_hat[0]), real=real),
    ])


def laplacian_array(grid, f):
    return inverse(-grid.k_squared * forward(f), real=np.isrealobj(f))


def transverse_project_array(grid, v):
    '''
    Helmholtz split v = v_T + v_L in Fourier space. Uses the derivative
    wavevectors so that the divergence of v_T and the curl of v_L vanish to
    round-off under the operators above. The k = 0 mode is kept in v_T.
    '''
    k = grid.k_derivative
    k2 = grid.k_derivative_squared
    safe = np.where(k2 == 0.0, 1.0, k2)
    v_hat = np.stack([forward(v[d]) for d in range(3)])
    k_dot_v = np.sum(k * v_hat, axis=0) / safe
    real = np.isrealobj(v)
    longitudinal = np.stack([inverse(k[d] * k_dot_v, real=real) for d in range(3)])
    return v - longitudinal, longitudinal


def gradient(f):
    return VectorField(f.grid, gradient_array(f.grid, f.data))


def divergence(v):
    return ScalarField(v.grid, divergence_array(v.grid, v.data))


def curl(v):
    return VectorField(v.grid, curl_array(v.grid, v.data))


def laplacian(f):
    return ScalarField(f.grid, laplacian_array(f.grid, f.data))


# Pauli matrices, sigma_z diagonal
SIGMA = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


def density_array(phi):
    '''phi^dagger phi for arrays with the spinor axis at position -4.'''
    return np.sum(np.abs(phi) ** 2, axis=-4)


def spin_density_array(phi):
    '''phi^dagger sigma phi, shape (3,) + spatial (summed over any leading orbital axis).'''
    up, down = phi[..., 0, :, :, :], phi[..., 1, :, :, :]
    cross = np.conj(up) * down
    s = np.stack([2.0 * cross.real, 2.0 * cross.imag, np.abs(up) ** 2 - np.abs(down) ** 2])
    if s.ndim > 4:
        s = s.sum(axis=tuple(range(1, s.ndim - 3)))
    return s


def sigma_apply(a, phi):
    '''sigma_a acting on the spinor axis (-4) of phi.'''
    up, down = phi[..., 0, :, :, :], phi[..., 1, :, :, :]
    if a == 0:
        return np.stack([down, up], axis=-4)
    if a == 1:
        return np.stack([-1j * down, 1j * up], axis=-4)
    return np.stack([up, -down], axis=-4)


def sigma_dot(w):
    '''
    sum_a sigma_a w_a for w of shape (3, 2, ...) where w[a] is a spinor-valued
    array (for example V_a * phi or a derivative of phi).
    '''
    wx, wy, wz = w[0], w[1], w[2]
    return np.stack([
        wz[0] + wx[1] - 1j * wy[1],
        wx[0] + 1j * wy[0] - wz[1],
    ])


def sigma_dot_field(b, phi):
    '''(sigma . b) phi for a real vector field b of shape (3,) + spatial (or (3,) uniform).'''
    b = np.asarray(b)
    if b.ndim == 1:
        b = b.reshape(3, 1, 1, 1)
    return sigma_dot(b[:, None] * phi[None])


def momentum_array(grid, phi, hbar=1.0):
    '''p phi = -i hbar grad phi, shape (3,) + phi.shape.'''
    return -1j * hbar * gradient_array(grid, phi)


def probability_density(phi):
    return ScalarField(phi.grid, density_array(phi.data))


def spin_density(phi):
    return VectorField(phi.grid, spin_density_array(phi.data))


def momentum_apply(phi, hbar=1.0):
    p_phi = momentum_array(phi.grid, phi.data, hbar)
    return [SpinorField(phi.grid, p_phi[d]) for d in range(3)]
