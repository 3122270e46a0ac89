import math

import numpy as np
from django.test import SimpleTestCase
from scipy import constants as codata

from core.constants import PhysicalConstants
from core.fields import ScalarField, SpinorField, VectorField
from core.grid import Grid3
from core import spectral
from core.spinors import SpinorOrbitalSet, gaussian_packet, spin_vector
from core.units import convert, parse_quantity, to_atomic, to_si
from utils.errors import ConfigurationError, GridMismatchError


def smooth_random_field(grid, seed, components=None, modes=3):
    '''Sum of a few low Fourier modes with random amplitudes.'''
    rng = np.random.default_rng(seed)
    x, y, z = grid.coordinates
    shape = grid.shape if components is None else (components,) + grid.shape
    out = np.zeros(shape)
    for _ in range(modes):
        kx, ky, kz = (2.0 * np.pi * rng.integers(-2, 3, size=3) / np.array(grid.box))
        a = rng.normal(size=() if components is None else (components, 1, 1, 1))
        out = out + a * np.cos(kx * x + ky * y + kz * z + rng.uniform(0, 2 * np.pi))
    return out


class PhysicalConstantsTests(SimpleTestCase):

    def test_permeability_relation(self):
        for constants in (PhysicalConstants.atomic(), PhysicalConstants.si()):
            self.assertAlmostEqual(constants.mu0 * constants.eps0 * constants.c ** 2, 1.0, delta=1e-12)

    def test_atomic_units(self):
        constants = PhysicalConstants.atomic()
        self.assertEqual((constants.hbar, constants.m, constants.e, constants.q), (1.0, 1.0, 1.0, -1.0))
        self.assertAlmostEqual(constants.c, 1.0 / codata.fine_structure, places=9)
        self.assertAlmostEqual(constants.fine_structure, codata.fine_structure, places=12)

    def test_compton_wavelength(self):
        constants = PhysicalConstants.si()
        self.assertAlmostEqual(constants.lambda_C / 2.42e-12, 1.0, delta=5e-3)
        self.assertAlmostEqual(constants.omega_C, 2.0 * math.pi * constants.c / constants.lambda_C)

    def test_custom_speed_of_light(self):
        constants = PhysicalConstants.atomic(c=10.0)
        self.assertEqual(constants.c, 10.0)
        self.assertAlmostEqual(constants.mu0, 4.0 * math.pi / 100.0)


class UnitConversionTests(SimpleTestCase):

    def test_bohr(self):
        self.assertAlmostEqual(to_si(1.0, 'length') / 5.29177e-11, 1.0, delta=1e-5)

    def test_zero(self):
        for dimension in ('length', 'time', 'energy', 'electric_field', 'fluence', 'frequency'):
            self.assertEqual(convert(0.0, dimension), 0.0)

    def test_round_trip(self):
        for dimension, value in [('length', 800e-9), ('time', 50e-15), ('energy', 1.6e-19),
                                 ('electric_field', 4e8), ('fluence', 10.0), ('frequency', 2.3e15)]:
            back = convert(convert(value, dimension, 'atomic'), dimension, 'si')
            self.assertAlmostEqual(back / value, 1.0, delta=1e-12)

    def test_wavelength_in_bohr(self):
        self.assertAlmostEqual(parse_quantity('800nm', 'length'), 800e-9 / codata.physical_constants['Bohr radius'][0])

    def test_parse_units(self):
        self.assertAlmostEqual(parse_quantity('50 fs', 'time', system='si'), 50e-15)
        self.assertAlmostEqual(parse_quantity('1 mJ/cm2', 'fluence', system='si'), 10.0)
        self.assertAlmostEqual(parse_quantity('1 au', 'electric_field'), 1.0)
        self.assertAlmostEqual(parse_quantity(1e-10, 'length', system='si'), 1e-10)
        self.assertAlmostEqual(parse_quantity('1 Hz', 'frequency', system='si'), 2.0 * math.pi)

    def test_unknown_dimension(self):
        with self.assertRaises(ConfigurationError):
            convert(1.0, 'temperature')
        with self.assertRaises(ConfigurationError):
            to_atomic(1.0, 'luminosity')

    def test_unknown_unit(self):
        with self.assertRaises(ConfigurationError):
            parse_quantity('3 furlong', 'length')
        with self.assertRaises(ConfigurationError):
            parse_quantity('fast', 'time')


class Grid3Tests(SimpleTestCase):

    def test_spacing(self):
        grid = Grid3(n=(8, 10, 12), box=(4.0, 5.0, 9.0))
        self.assertEqual(grid.spacing, (0.5, 0.5, 0.75))
        self.assertAlmostEqual(grid.dV, 0.5 * 0.5 * 0.75)
        self.assertEqual(grid.coordinates.shape, (3, 8, 10, 12))

    def test_wavevectors(self):
        grid = Grid3(n=(8, 9, 16), box=(4.0, 4.0, 4.0))
        for n, k in zip(grid.n, grid.wavevectors):
            self.assertEqual(len(k), n)
            self.assertEqual(int(np.sum(k == 0.0)), 1)
            self.assertEqual(k[0], 0.0)

    def test_rejects_bad_grid(self):
        with self.assertRaises(ConfigurationError):
            Grid3(n=(1, 8, 8), box=(1.0, 1.0, 1.0))
        with self.assertRaises(ConfigurationError):
            Grid3(n=8, box=(1.0, -1.0, 1.0))

    def test_minimum_image(self):
        grid = Grid3.cubic(8, 8.0)
        d = grid.minimum_image((3.5, 0.0, 0.0))
        self.assertLessEqual(np.max(np.abs(d)), 4.0)


class FieldContainerTests(SimpleTestCase):

    def test_mixed_grid_arithmetic(self):
        a = ScalarField.zeros(Grid3.cubic(8, 4.0))
        b = ScalarField.zeros(Grid3.cubic(8, 5.0))
        with self.assertRaises(GridMismatchError):
            a + b

    def test_shape_checked(self):
        with self.assertRaises(GridMismatchError):
            VectorField(Grid3.cubic(8, 4.0), np.zeros((8, 8, 8)))

    def test_vector_times_scalar(self):
        grid = Grid3.cubic(8, 4.0)
        v = VectorField.uniform(grid, (1.0, 2.0, 3.0))
        s = ScalarField.uniform(grid, 2.0)
        self.assertTrue(np.allclose((s * v).data[2], 6.0))
        self.assertTrue(np.allclose((v * s).data[1], 4.0))

    def test_spinor_norm(self):
        grid = Grid3.cubic(16, 16.0)
        phi = gaussian_packet(grid, (0, 0, 0), 1.5)
        self.assertAlmostEqual(phi.norm(), 1.0, places=12)


class SpectralOperatorTests(SimpleTestCase):

    def setUp(self):
        self.grid = Grid3(n=(16, 16, 20), box=(6.0, 6.0, 8.0))

    def test_gradient_of_constant(self):
        g = spectral.gradient(ScalarField.uniform(self.grid, 3.0))
        self.assertLess(g.max_abs(), 1e-12)

    def test_laplacian_eigenfunction(self):
        x = self.grid.coordinates[0]
        L = self.grid.box[0]
        f = ScalarField(self.grid, np.sin(2 * np.pi * x / L))
        lap = spectral.laplacian(f)
        self.assertTrue(np.allclose(lap.data, -(2 * np.pi / L) ** 2 * f.data, atol=1e-10))

    def test_div_curl_and_curl_grad(self):
        v = VectorField(self.grid, smooth_random_field(self.grid, 1, components=3))
        f = ScalarField(self.grid, smooth_random_field(self.grid, 2))
        scale = v.max_abs()
        self.assertLess(spectral.divergence(spectral.curl(v)).max_abs(), 1e-10 * scale)
        self.assertLess(spectral.curl(spectral.gradient(f)).max_abs(), 1e-10 * f.max_abs())

    def test_parseval(self):
        f = smooth_random_field(self.grid, 3) + 0.1 * np.random.default_rng(4).normal(size=self.grid.shape)
        grid_sum = np.sum(f ** 2)
        spectral_sum = np.sum(np.abs(spectral.forward(f)) ** 2) / self.grid.size
        self.assertAlmostEqual(grid_sum / spectral_sum, 1.0, delta=1e-10)

    def test_translation_commutes(self):
        f = np.random.default_rng(5).normal(size=self.grid.shape)
        shifted = np.roll(f, (3, -2, 5), axis=(0, 1, 2))
        a = spectral.gradient_array(self.grid, shifted)
        b = np.roll(spectral.gradient_array(self.grid, f), (3, -2, 5), axis=(1, 2, 3))
        self.assertTrue(np.allclose(a, b, atol=1e-10))

    def test_transverse_projection(self):
        v = smooth_random_field(self.grid, 6, components=3)
        t, l = spectral.transverse_project_array(self.grid, v)
        self.assertTrue(np.allclose(t + l, v))
        self.assertLess(np.max(np.abs(spectral.divergence_array(self.grid, t))), 1e-10 * np.max(np.abs(v)))
        self.assertLess(np.max(np.abs(spectral.curl_array(self.grid, l))), 1e-10 * np.max(np.abs(v)))


class SpinorBilinearTests(SimpleTestCase):

    def setUp(self):
        self.grid = Grid3.cubic(16, 10.0)
        self.g = np.exp(-np.sum(self.grid.coordinates ** 2, axis=0) / 4.0)

    def test_spin_up(self):
        phi = SpinorField(self.grid, np.stack([self.g, 0 * self.g]))
        s = spectral.spin_density(phi).data
        self.assertTrue(np.allclose(s[0], 0) and np.allclose(s[1], 0))
        self.assertTrue(np.allclose(s[2], self.g ** 2))

    def test_spin_x(self):
        phi = SpinorField(self.grid, np.stack([self.g, self.g]) / math.sqrt(2))
        s = spectral.spin_density(phi).data
        self.assertTrue(np.allclose(s[0], self.g ** 2))
        self.assertTrue(np.allclose(s[1:], 0))

    def test_plane_wave_momentum(self):
        k = 2 * np.pi * 2 / self.grid.box[0]
        x = self.grid.coordinates[0]
        wave = np.exp(1j * k * x) / math.sqrt(self.grid.volume)
        phi = SpinorField(self.grid, np.stack([wave, 0 * wave]))
        px = spectral.momentum_apply(phi)[0]
        self.assertTrue(np.allclose(px.data, k * phi.data, atol=1e-12))

    def test_density_bounds_on_random_spinor(self):
        rng = np.random.default_rng(7)
        data = rng.normal(size=(2,) + self.grid.shape) + 1j * rng.normal(size=(2,) + self.grid.shape)
        phi = SpinorField(self.grid, data)
        rho = spectral.probability_density(phi).data
        s = spectral.spin_density(phi).data
        self.assertTrue(np.all(rho >= 0))
        self.assertTrue(np.all(np.sqrt(np.sum(s ** 2, axis=0)) <= rho * (1 + 1e-12)))
        self.assertLessEqual(np.sum(s * s), np.sum(rho ** 2) * (1 + 1e-12))

    def test_sigma_dot_matches_matrices(self):
        rng = np.random.default_rng(8)
        phi = rng.normal(size=(2,) + self.grid.shape) + 1j * rng.normal(size=(2,) + self.grid.shape)
        b = rng.normal(size=3)
        expected = np.einsum('aij,a,j...->i...', spectral.SIGMA, b, phi)
        self.assertTrue(np.allclose(spectral.sigma_dot_field(b, phi), expected))
        for a in range(3):
            self.assertTrue(np.allclose(spectral.sigma_apply(a, phi), np.einsum('ij,j...->i...', spectral.SIGMA[a], phi)))


class SpinorOrbitalSetTests(SimpleTestCase):

    def test_gaussian_packet_spin(self):
        grid = Grid3.cubic(16, 16.0)
        orbitals = SpinorOrbitalSet.from_fields([
            gaussian_packet(grid, (0, 0, 0), 1.5, spin='+x'),
            gaussian_packet(grid, (2, 0, 0), 1.5, spin=(0, 0, -1)),
        ])
        self.assertEqual(orbitals.count, 2)
        self.assertTrue(np.allclose(orbitals.norms(), 1.0))
        m = orbitals.magnetizations()
        self.assertTrue(np.allclose(m[0], (1, 0, 0), atol=1e-12))
        self.assertTrue(np.allclose(m[1], (0, 0, -1), atol=1e-12))

    def test_spin_vector(self):
        chi = spin_vector((0, 1, 0))
        self.assertAlmostEqual(abs(chi[0]), abs(chi[1]))
        with self.assertRaises(ConfigurationError):
            spin_vector((0, 0, 0))

    def test_packet_center_and_momentum(self):
        grid = Grid3.cubic(24, 16.0)
        phi = gaussian_packet(grid, (1.0, -1.0, 0.5), 1.5, momentum=(0.5, 0.0, 0.0))
        rho = spectral.probability_density(phi).data
        center = np.array([np.sum(grid.coordinates[d] * rho) * grid.dV for d in range(3)])
        self.assertTrue(np.allclose(center, (1.0, -1.0, 0.5), atol=1e-4))
        p = spectral.momentum_apply(phi)[0]
        self.assertAlmostEqual(phi.inner(p).real, 0.5, delta=1e-4)
