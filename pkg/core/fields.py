'''
Field containers attached to a Grid3. Arithmetic between fields on different
grids raises GridMismatchError.
'''
import numpy as np

from utils.errors import GridMismatchError


class Field:
    '''
    Array of values sampled on a grid.

    Attributes:
        grid (Grid3): the grid the samples live on.
        data (np.ndarray): samples; leading axis holds components when the
            field has more than one.
    '''
    components = None

    def __init__(self, grid, data):
        data = np.asarray(data)
        expected = grid.shape if self.components is None else (self.components,) + grid.shape
        if data.shape != expected:
            raise GridMismatchError(
                f'{type(self).__name__} expects shape {expected}, got {data.shape}',
                grid=grid.describe(),
            )
        self.grid = grid
        self.data = data

    @classmethod
    def zeros(cls, grid, dtype=float):
        shape = grid.shape if cls.components is None else (cls.components,) + grid.shape
        return cls(grid, np.zeros(shape, dtype=dtype))

    @classmethod
    def uniform(cls, grid, value):
        value = np.asarray(value)
        if cls.components is None:
            return cls(grid, np.full(grid.shape, value))
        data = np.empty((cls.components,) + grid.shape, dtype=np.result_type(value, float))
        data[...] = value.reshape((cls.components, 1, 1, 1))
        return cls(grid, data)

    def _operand(self, other):
        if isinstance(other, Field):
            self.grid.require_same(other.grid)
            if isinstance(other, ScalarField) and self.components is not None:
                return other.data[None]
            return other.data
        return other

    def _wrap(self, data):
        return type(self)(self.grid, data)

    def __add__(self, other):
        return self._wrap(self.data + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.data - self._operand(other))

    def __neg__(self):
        return self._wrap(-self.data)

    def __mul__(self, other):
        if isinstance(self, ScalarField) and isinstance(other, Field) and other.components is not None:
            return other.__mul__(self)
        return self._wrap(self.data * self._operand(other))

    __rmul__ = __mul__

    def __truediv__(self, value):
        return self._wrap(self.data / value)

    def copy(self):
        return self._wrap(self.data.copy())

    def integrate(self):
        '''Integral over the box; one value per component.'''
        return np.sum(self.data, axis=(-3, -2, -1)) * self.grid.dV

    def l2_norm(self):
        return float(np.sqrt(np.sum(np.abs(self.data) ** 2) * self.grid.dV))

    def max_abs(self):
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def is_zero(self):
        return not np.any(self.data)

    def __repr__(self):
        return f'{type(self).__name__}({self.grid.describe()}, dtype={self.data.dtype})'


class ScalarField(Field):
    pass


class VectorField(Field):
    components = 3

    def dot(self, other):
        return ScalarField(self.grid, np.sum(self.data * self._operand(other), axis=0))

    def cross(self, other):
        return VectorField(self.grid, np.cross(self.data, self._operand(other), axis=0))

    def magnitude(self):
        return ScalarField(self.grid, np.sqrt(np.sum(self.data ** 2, axis=0)))


class SpinorField(Field):
    components = 2

    def __init__(self, grid, data):
        super().__init__(grid, np.asarray(data, dtype=complex))

    @classmethod
    def zeros(cls, grid, dtype=complex):
        return super().zeros(grid, dtype=dtype)

    def inner(self, other):
        '''<self|other> = sum over components of the integral of conj(self) * other.'''
        return complex(np.vdot(self.data, self._operand(other)) * self.grid.dV)

    def norm(self):
        return float(np.sqrt(np.real(self.inner(self))))

    def normalized(self):
        return self / self.norm()
