from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
from scipy import fft as sp_fft

from utils.errors import ConfigurationError, GridMismatchError


@dataclass(frozen=True)
class Grid3:
    '''
    Uniform periodic grid on a rectangular box centred at the origin.

    Fields:
        n (tuple[int, int, int]): points per axis.
        box (tuple[float, float, float]): box edge lengths (atomic units).

    Coordinates run from -L/2 to L/2 - h on every axis. Wavevectors follow the
    standard FFT layout, so the zero mode is the first entry of each axis.
    '''
    n: tuple
    box: tuple

    def __post_init__(self):
        n = tuple(int(v) for v in np.broadcast_to(self.n, (3,)))
        box = tuple(float(v) for v in np.broadcast_to(self.box, (3,)))
        if any(v < 2 for v in n):
            raise ConfigurationError(f'grid needs at least 2 points per axis, got {n}')
        if any(not math.isfinite(v) or v <= 0.0 for v in box):
            raise ConfigurationError(f'box edges must be positive, got {box}')
        object.__setattr__(self, 'n', n)
        object.__setattr__(self, 'box', box)

    @property
    def shape(self):
        return self.n

    @property
    def size(self):
        return self.n[0] * self.n[1] * self.n[2]

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.box, self.n))

    @property
    def dV(self):
        hx, hy, hz = self.spacing
        return hx * hy * hz

    @property
    def volume(self):
        return self.box[0] * self.box[1] * self.box[2]

    @property
    def is_cubic_cell(self):
        h = self.spacing
        return math.isclose(h[0], h[1], rel_tol=1e-12) and math.isclose(h[0], h[2], rel_tol=1e-12)

    @cached_property
    def axes(self):
        return tuple(-L / 2.0 + h * np.arange(n) for L, h, n in zip(self.box, self.spacing, self.n))

    @cached_property
    def coordinates(self):
        return np.stack(np.meshgrid(*self.axes, indexing='ij'))

    @cached_property
    def wavevectors(self):
        '''Per-axis angular wavenumbers 2*pi*fftfreq(n, h).'''
        return tuple(2.0 * np.pi * sp_fft.fftfreq(n, d=h) for n, h in zip(self.n, self.spacing))

    @cached_property
    def k_derivative(self):
        '''
        Wavevector mesh used by first derivatives: the Nyquist entry of an even
        axis is zeroed so derivatives of real fields stay real.
        '''
        axes = []
        for n, k in zip(self.n, self.wavevectors):
            k = k.copy()
            if n % 2 == 0:
                k[n // 2] = 0.0
            axes.append(k)
        return np.stack(np.meshgrid(*axes, indexing='ij'))

    @cached_property
    def k_squared(self):
        '''Full |k|**2 (Nyquist kept), the symbol of -Laplacian.'''
        kx, ky, kz = np.meshgrid(*self.wavevectors, indexing='ij')
        return kx ** 2 + ky ** 2 + kz ** 2

    @cached_property
    def k_derivative_squared(self):
        return np.sum(self.k_derivative ** 2, axis=0)

    def minimum_image(self, center):
        '''Displacement x - center folded into the periodic cell, shape (3, nx, ny, nz).'''
        d = self.coordinates - np.asarray(center, dtype=float).reshape(3, 1, 1, 1)
        box = np.asarray(self.box).reshape(3, 1, 1, 1)
        return d - box * np.round(d / box)

    def padded(self, factor):
        '''Grid with `factor` times the points and box at the same spacing.'''
        return Grid3(n=tuple(factor * v for v in self.n), box=tuple(factor * v for v in self.box))

    def require_same(self, other):
        if other != self:
            raise GridMismatchError(f'grid mismatch: {self.describe()} vs {other.describe()}')

    def describe(self):
        return f'{self.n[0]}x{self.n[1]}x{self.n[2]} over {self.box}'

    def as_dict(self):
        return {'n': list(self.n), 'box': list(self.box), 'spacing': list(self.spacing)}

    @classmethod
    def cubic(cls, n, box):
        return cls(n=(n, n, n), box=(box, box, box))
