import math

import numpy as np

from core.fields import SpinorField
from core.spectral import density_array, spin_density_array
from utils.errors import ConfigurationError, GridMismatchError


class SpinorOrbitalSet:
    '''
    N two-component orbitals on one grid, stored as a single complex array of
    shape (N, 2, nx, ny, nz).
    '''

    def __init__(self, grid, data):
        data = np.asarray(data, dtype=complex)
        if data.ndim == 4:
            data = data[None]
        if data.ndim != 5 or data.shape[1] != 2 or data.shape[2:] != grid.shape:
            raise GridMismatchError(
                f'orbital array of shape {data.shape} does not fit (N, 2) + {grid.shape}'
            )
        self.grid = grid
        self.data = data

    @classmethod
    def from_fields(cls, fields):
        if not fields:
            raise ConfigurationError('an orbital set needs at least one orbital')
        grid = fields[0].grid
        for f in fields[1:]:
            grid.require_same(f.grid)
        return cls(grid, np.stack([f.data for f in fields]))

    @property
    def count(self):
        return self.data.shape[0]

    def __len__(self):
        return self.count

    def orbital(self, index):
        return SpinorField(self.grid, self.data[index])

    def __iter__(self):
        for index in range(self.count):
            yield self.orbital(index)

    def with_data(self, data):
        return SpinorOrbitalSet(self.grid, data)

    def copy(self):
        return self.with_data(self.data.copy())

    def subset(self, indices):
        return self.with_data(self.data[list(indices)])

    def norms(self):
        return np.sqrt(np.sum(np.abs(self.data) ** 2, axis=(1, 2, 3, 4)) * self.grid.dV)

    def magnetizations(self):
        '''Integrated spin density per orbital, shape (N, 3).'''
        return np.stack([spin_density_array(phi).sum(axis=(1, 2, 3)) * self.grid.dV for phi in self.data])

    def density(self):
        return density_array(self.data).sum(axis=0)

    def max_difference(self, other):
        return float(np.max(np.abs(self.data - other.data)))


def spin_vector(direction):
    '''
    Spinor (cos(theta/2), exp(i phi) sin(theta/2)) pointing along `direction`,
    given either as a 3-vector or as "up"/"down"/"+x"/... shorthand.
    '''
    named = {
        'up': (0, 0, 1), '+z': (0, 0, 1), 'down': (0, 0, -1), '-z': (0, 0, -1),
        '+x': (1, 0, 0), '-x': (-1, 0, 0), '+y': (0, 1, 0), '-y': (0, -1, 0),
    }
    if isinstance(direction, str):
        if direction not in named:
            raise ConfigurationError(f'unknown spin direction {direction!r}')
        direction = named[direction]
    v = np.asarray(direction, dtype=float)
    length = np.linalg.norm(v)
    if v.shape != (3,) or length == 0.0:
        raise ConfigurationError(f'spin direction must be a non-zero 3-vector, got {direction!r}')
    v = v / length
    theta = math.acos(max(-1.0, min(1.0, v[2])))
    phi = math.atan2(v[1], v[0])
    return np.array([math.cos(theta / 2.0), np.exp(1j * phi) * math.sin(theta / 2.0)])


def gaussian_packet(grid, center, width, momentum=(0.0, 0.0, 0.0), spin='up', hbar=1.0):
    '''
    Normalized Gaussian wave packet

        (2 pi sigma^2)^(-3/4) exp(-|x - x0|^2 / (4 sigma^2)) exp(i k.(x - x0)) chi

    with sigma = `width` the standard deviation of the density, k = momentum/hbar
    and chi the spinor along `spin`. Displacements use the minimum image, and
    the result is renormalized on the grid.
    '''
    if width <= 0.0:
        raise ConfigurationError(f'packet width must be positive, got {width}')
    d = grid.minimum_image(center)
    r2 = np.sum(d ** 2, axis=0)
    k = np.asarray(momentum, dtype=float) / hbar
    phase = np.exp(1j * np.tensordot(k, d, axes=1))
    envelope = (2.0 * math.pi * width ** 2) ** -0.75 * np.exp(-r2 / (4.0 * width ** 2))
    chi = spin_vector(spin)
    data = chi.reshape(2, 1, 1, 1) * (envelope * phase)[None]
    field = SpinorField(grid, data)
    return field.normalized()


def free_packet_width(width, t, m=1.0, hbar=1.0):
    '''Density standard deviation of a free Gaussian packet after time t.'''
    return math.sqrt(width ** 2 + (hbar * t / (2.0 * m * width)) ** 2)
