import math

import numpy as np
from django.test import SimpleTestCase, tag
from scipy import special

from core.constants import ATOMIC
from core.fields import ScalarField, VectorField
from core.grid import Grid3
from core.spectral import curl_array, divergence_array, gradient_array
from core.spinors import SpinorOrbitalSet, gaussian_packet
from field_solvers import kernels
from field_solvers.assemble import PotentialSet, assemble_potentials
from field_solvers.config import SolverConfig
from field_solvers.poisson import (
    greens_kernel_scalar, greens_kernel_vector, scalar_potential, solve_scalar_poisson,
    solve_vector_potential, transverse_project, vector_potential,
)
from sources.densities import build_sources
from utils.errors import ConfigurationError

C = ATOMIC
PERIODIC = SolverConfig()
ISOLATED = SolverConfig(padding_factor=3)
KERNEL = SolverConfig(method='green-kernel', padding_factor=2)


def unit_gaussian(grid, width=1.0, center=(0.0, 0.0, 0.0)):
    d = grid.minimum_image(center)
    r = np.sqrt(np.sum(d ** 2, axis=0))
    return (2 * math.pi * width ** 2) ** -1.5 * np.exp(-r ** 2 / (2 * width ** 2)), d, r


def gaussian_potential(r, width):
    '''Potential of a unit Gaussian charge, without the q / (4 pi eps0) factor.'''
    safe = np.where(r == 0.0, 1.0, r)
    return np.where(r == 0.0, math.sqrt(2 / math.pi) / width, special.erf(safe / (math.sqrt(2) * width)) / safe)


def interior(a, shell=2):
    return a[..., shell:-shell, shell:-shell, shell:-shell]


class SolverConfigTests(SimpleTestCase):

    def test_validation(self):
        with self.assertRaises(ConfigurationError):
            SolverConfig(method='multigrid')
        with self.assertRaises(ConfigurationError):
            SolverConfig(zero_mode_policy='keep')
        with self.assertRaises(ConfigurationError):
            SolverConfig(padding_factor=4)
        with self.assertRaises(ConfigurationError):
            SolverConfig(softening=-0.1)

    def test_from_dict(self):
        cfg = SolverConfig.from_dict({'method': 'green-kernel', 'padding_factor': 2, 'softening': 0.3})
        self.assertEqual(cfg, SolverConfig('green-kernel', 'drop', 2, 0.3))
        self.assertTrue(cfg.isolated)
        with self.assertRaises(ConfigurationError):
            SolverConfig.from_dict({'tolerance': 1e-3})


class ScalarPoissonTests(SimpleTestCase):

    def setUp(self):
        self.grid = Grid3(n=(16, 16, 24), box=(8.0, 8.0, 12.0))

    def test_zero_source(self):
        phi = solve_scalar_poisson(ScalarField.zeros(self.grid))
        self.assertTrue(phi.is_zero())

    def test_cosine_mode(self):
        x, y, z = self.grid.coordinates
        k = np.array([2 * math.pi / 8.0, 2 * math.pi * 2 / 8.0, 2 * math.pi / 12.0])
        source = ScalarField(self.grid, 0.3 * np.cos(k[0] * x + k[1] * y + k[2] * z))
        notes = []
        phi = solve_scalar_poisson(source, PERIODIC, notes=notes)
        expected = (C.q / C.eps0) * source.data / np.sum(k ** 2)
        self.assertTrue(np.allclose(phi.data, expected, atol=1e-12))
        self.assertEqual(notes, [])
        self.assertAlmostEqual(float(phi.integrate()), 0.0, delta=1e-10)

    def test_non_neutral_source_is_flagged(self):
        rho, _, _ = unit_gaussian(self.grid)
        notes = []
        phi = solve_scalar_poisson(ScalarField(self.grid, rho), PERIODIC, notes=notes)
        self.assertEqual(len(notes), 1)
        self.assertIn('non-neutral', notes[0])
        self.assertAlmostEqual(float(phi.integrate()), 0.0, delta=1e-10)
        quiet = []
        neutral = solve_scalar_poisson(ScalarField(self.grid, rho), SolverConfig(zero_mode_policy='neutralizing-background'), notes=quiet)
        self.assertEqual(quiet, [])
        self.assertTrue(np.allclose(neutral.data, phi.data))

    def test_isolated_gaussian(self):
        grid = Grid3.cubic(32, 16.0)
        rho, _, r = unit_gaussian(grid)
        phi = solve_scalar_poisson(ScalarField(grid, rho), ISOLATED)
        centre = phi.data[16, 16, 16]
        expected = C.q / (4 * math.pi * C.eps0) * math.sqrt(2 / math.pi)
        self.assertAlmostEqual(centre / expected, 1.0, delta=1e-3)
        profile = C.q / (4 * math.pi * C.eps0) * gaussian_potential(r, 1.0)
        self.assertLess(np.max(np.abs(phi.data - profile)), 1e-3 * abs(expected))

    def test_linear_scaling(self):
        rho, _, _ = unit_gaussian(self.grid)
        one = scalar_potential(self.grid, rho, ISOLATED)[0]
        three = scalar_potential(self.grid, 3.0 * rho, ISOLATED)[0]
        self.assertTrue(np.allclose(three, 3.0 * one, rtol=1e-12, atol=0))


class TransverseProjectionTests(SimpleTestCase):

    def setUp(self):
        self.grid = Grid3.cubic(16, 8.0)
        rng = np.random.default_rng(11)
        self.f = np.zeros(self.grid.shape)
        x, y, z = self.grid.coordinates
        for _ in range(4):
            k = 2 * math.pi * rng.integers(-2, 3, size=3) / 8.0
            self.f += rng.normal() * np.sin(k[0] * x + k[1] * y + k[2] * z + rng.uniform(0, 6))

    def test_transverse_input(self):
        rho, _, _ = unit_gaussian(self.grid)
        j = VectorField(self.grid, curl_array(self.grid, np.stack([0 * rho, 0 * rho, rho])))
        j_t, j_l = transverse_project(j)
        self.assertTrue(np.allclose(j_t.data, j.data, atol=1e-14))
        self.assertLess(j_l.max_abs(), 1e-14)

    def test_longitudinal_input(self):
        j = VectorField(self.grid, gradient_array(self.grid, self.f))
        j_t, j_l = transverse_project(j)
        self.assertLess(j_t.max_abs(), 1e-12 * j.max_abs())
        self.assertTrue(np.allclose(j_l.data, j.data))

    def test_random_field(self):
        rng = np.random.default_rng(12)
        j = VectorField(self.grid, rng.normal(size=(3,) + self.grid.shape))
        j_t, j_l = transverse_project(j)
        self.assertTrue(np.allclose((j_t + j_l).data, j.data))
        self.assertLess(np.abs(divergence_array(self.grid, j_t.data)).max(), 1e-10 * j.max_abs())
        self.assertLess(np.abs(curl_array(self.grid, j_l.data)).max(), 1e-10 * j.max_abs())
        again, _ = transverse_project(j_t)
        self.assertTrue(np.allclose(again.data, j_t.data))


class VectorPotentialTests(SimpleTestCase):

    def setUp(self):
        self.grid = Grid3.cubic(16, 8.0)

    def test_zero_current(self):
        self.assertTrue(solve_vector_potential(VectorField.zeros(self.grid)).is_zero())

    def test_solenoidal_mode(self):
        x = self.grid.coordinates[0]
        k = 2 * math.pi / 8.0
        j = np.zeros((3,) + self.grid.shape)
        j[1] = np.cos(k * x)
        a = solve_vector_potential(VectorField(self.grid, j), PERIODIC)
        expected = C.q / (C.eps0 * C.c ** 2) * j / k ** 2
        self.assertTrue(np.allclose(a.data, expected, atol=1e-14))

    def test_gauge(self):
        rho, d, _ = unit_gaussian(self.grid)
        j = np.stack([rho * d[1], -rho * d[0] + 0.3 * rho, rho])
        a = solve_vector_potential(VectorField(self.grid, j), PERIODIC)
        div = divergence_array(self.grid, a.data)
        self.assertLess(np.linalg.norm(div), 1e-10 * np.linalg.norm(a.data))

    def test_periodic_curl_matches_spectral_curl(self):
        rho, d, _ = unit_gaussian(self.grid)
        j = np.stack([rho * d[1], -rho * d[0], 0 * rho])
        a, b = vector_potential(self.grid, j, PERIODIC, with_curl=True)
        self.assertTrue(np.allclose(b, curl_array(self.grid, a), atol=1e-14))


class RouteEquivalenceTests(SimpleTestCase):
    '''Spectral solves on a padded box against sampled-kernel convolution.'''

    def setUp(self):
        self.grid = Grid3.cubic(40, 10.0)
        self.rho, self.d, self.r = unit_gaussian(self.grid)

    def test_scalar_routes(self):
        spectral = solve_scalar_poisson(ScalarField(self.grid, self.rho), ISOLATED).data
        kernel = greens_kernel_scalar(ScalarField(self.grid, self.rho), KERNEL).data
        scale = np.max(np.abs(spectral))
        self.assertLess(np.max(np.abs(interior(spectral - kernel, 1))), 1e-3 * scale)

    def test_vector_routes(self):
        up = gaussian_packet(self.grid, (0, 0, 0), 1.0, spin='up')
        sources = build_sources(SpinorOrbitalSet.from_fields([up]))
        spectral = solve_vector_potential(sources.j_spin, ISOLATED).data
        kernel = greens_kernel_vector(sources.j_spin, KERNEL).data
        scale = np.max(np.abs(spectral))
        self.assertLess(np.max(np.abs(interior(spectral - kernel, 1))), 1e-3 * scale)

    def test_gradient_and_odd_kernel(self):
        _, grad = scalar_potential(self.grid, self.rho, ISOLATED, with_gradient=True)
        _, grad_kernel = scalar_potential(self.grid, self.rho, KERNEL, with_gradient=True)
        r = np.where(self.r == 0.0, 1.0, self.r)
        enclosed = special.erf(r / math.sqrt(2)) - math.sqrt(2 / math.pi) * r * np.exp(-r ** 2 / 2)
        exact = -C.q / (4 * math.pi * C.eps0) * self.d * np.where(self.r == 0.0, 0.0, enclosed / r ** 3)
        scale = np.max(np.abs(exact))
        self.assertLess(np.max(np.abs(interior(grad - exact))), 1e-3 * scale)
        self.assertLess(np.max(np.abs(interior(grad_kernel - exact))), 1e-3 * scale)

    def test_curl_routes(self):
        j = np.stack([self.rho * self.d[1], -self.rho * self.d[0], 0 * self.rho])
        _, b_spectral = vector_potential(self.grid, j, ISOLATED, with_curl=True)
        _, b_kernel = vector_potential(self.grid, j, KERNEL, with_curl=True)
        scale = np.max(np.abs(b_spectral))
        self.assertLess(np.max(np.abs(interior(b_spectral - b_kernel))), 1e-3 * scale)


@tag('slow')
class ReferenceResolutionRouteTests(SimpleTestCase):
    '''Both solver routes on a padded 64**3 box.'''
    # a centred source only needs separations up to half the diagonal, inside the padding-2 radius
    isolated = SolverConfig(padding_factor=2)

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.grid = Grid3.cubic(64, 16.0)
        cls.rho, _, _ = unit_gaussian(cls.grid)

    def test_scalar_routes(self):
        spectral = solve_scalar_poisson(ScalarField(self.grid, self.rho), self.isolated).data
        kernel = greens_kernel_scalar(ScalarField(self.grid, self.rho), KERNEL).data
        scale = np.max(np.abs(spectral))
        self.assertLess(np.max(np.abs(interior(spectral - kernel, 1))), 1e-3 * scale)

    def test_vector_routes(self):
        up = gaussian_packet(self.grid, (0, 0, 0), 1.0, spin='up')
        sources = build_sources(SpinorOrbitalSet.from_fields([up]))
        spectral = solve_vector_potential(sources.j_spin, self.isolated).data
        kernel = greens_kernel_vector(sources.j_spin, KERNEL).data
        scale = np.max(np.abs(spectral))
        self.assertLess(np.max(np.abs(interior(spectral - kernel, 1))), 1e-3 * scale)


class KernelTests(SimpleTestCase):

    def test_coulomb_samples(self):
        r = np.array([[1.0, 0.0, 2.0], [0.0, 3.0, 2.0], [0.0, 0.0, 1.0]])
        values = kernels.evaluate_kernel('coulomb', r, spacing=0.5)
        self.assertTrue(np.allclose(values, [1.0, 1.0 / 3.0, 1.0 / 3.0]))
        self.assertTrue(np.allclose(values, kernels.evaluate_kernel('coulomb', -r, spacing=0.5)))

    def test_centre_weights(self):
        origin = np.zeros((3, 1))
        self.assertAlmostEqual(kernels.evaluate_kernel('coulomb', origin, spacing=0.5)[0], -kernels.ZETA_CUBIC / 0.5)
        self.assertTrue(np.allclose(kernels.evaluate_kernel('odd', origin, spacing=0.5), 0.0))
        with self.assertRaises(ConfigurationError):
            kernels.evaluate_kernel('coulomb', origin, spacing=(0.5, 0.5, 0.6))

    def test_softened_kernels(self):
        r = np.array([[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]])
        a = 0.5
        self.assertTrue(np.allclose(kernels.evaluate_kernel('coulomb', r, a), [1 / a, 1 / math.sqrt(1.25)]))
        darwin = kernels.evaluate_kernel('darwin', r, a)
        self.assertAlmostEqual(darwin[0, 0, 1], 0.5 / math.sqrt(1.25) + 0.5 / 1.25 ** 1.5)
        self.assertAlmostEqual(darwin[1, 1, 1], 0.5 / math.sqrt(1.25))
        dipolar = kernels.evaluate_kernel('dipolar', r, a)
        self.assertAlmostEqual(dipolar[0, 0, 1], (1 - 3 - 2 * a * a) / 1.25 ** 2.5)
        self.assertAlmostEqual(dipolar[0, 1, 1], 0.0)

    def test_contact_kernel(self):
        r = np.array([[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]])
        a = 0.5
        expected = [3.0 / (4.0 * math.pi * a ** 3), 3.0 * a * a / (4.0 * math.pi * 1.25 ** 2.5)]
        self.assertTrue(np.allclose(kernels.evaluate_kernel('contact', r, a), expected))
        grid = Grid3.cubic(8, 4.0)
        rho, _, _ = unit_gaussian(grid, 0.8)
        self.assertTrue(np.allclose(kernels.convolve(grid, 'contact', rho, 2), rho, rtol=1e-10, atol=1e-14))

    def test_unknown_kernel(self):
        with self.assertRaises(ConfigurationError):
            kernels.evaluate_kernel('yukawa', np.ones((3, 1)))

    def test_direct_sum_matches_convolution(self):
        grid = Grid3.cubic(10, 5.0)
        rho, d, _ = unit_gaussian(grid, 0.8)
        j = np.stack([rho * d[1], -rho * d[0], 0.5 * rho])
        for softening in (0.0, 0.4):
            self.assertTrue(np.allclose(
                kernels.direct_convolve(grid, 'coulomb', rho, softening),
                kernels.convolve(grid, 'coulomb', rho, 2, softening), rtol=1e-10, atol=1e-14))
            self.assertTrue(np.allclose(
                kernels.direct_convolve(grid, 'darwin', j, softening),
                kernels.convolve(grid, 'darwin', j, 2, softening), rtol=1e-10, atol=1e-14))
            self.assertTrue(np.allclose(
                kernels.direct_odd_field(grid, rho, softening),
                kernels.odd_field(grid, rho, 2, softening), rtol=1e-10, atol=1e-14))

    def test_wraparound_flag(self):
        grid = Grid3.cubic(16, 8.0)
        rho, _, _ = unit_gaussian(grid, 1.5)
        notes = []
        greens_kernel_scalar(ScalarField(grid, rho), SolverConfig(method='green-kernel', padding_factor=1), notes=notes)
        self.assertEqual(len(notes), 1)
        quiet = []
        greens_kernel_scalar(ScalarField(grid, rho), KERNEL, notes=quiet)
        self.assertEqual(quiet, [])


class AssemblePotentialsTests(SimpleTestCase):

    def setUp(self):
        self.grid = Grid3.cubic(32, 16.0)
        self.up = gaussian_packet(self.grid, (0, 0, 0), 1.0, spin='up')
        self.k = 2 * math.pi * 2 / 16.0
        self.moving = gaussian_packet(self.grid, (0.5, 0, 0), 1.0, momentum=(self.k, 0, 0), spin='+x')

    def test_vacuum(self):
        orbitals = SpinorOrbitalSet.from_fields([self.up])
        potentials = assemble_potentials(build_sources(orbitals, exclusion=0), (0.1, 0, 0))
        self.assertTrue(potentials.is_zero())
        self.assertEqual(potentials.a0_int, 0.0)

    def test_field_parts_vanish_without_field(self):
        orbitals = SpinorOrbitalSet.from_fields([self.up, self.moving])
        potentials = assemble_potentials(build_sources(orbitals), None, ISOLATED)
        self.assertTrue(potentials.phi2_field.is_zero())
        self.assertTrue(potentials.a2_field.is_zero())
        self.assertTrue(potentials.curl_a2_field.is_zero())
        self.assertFalse(potentials.a2_spin.is_zero())

    def test_single_gaussian(self):
        orbitals = SpinorOrbitalSet.from_fields([self.up])
        potentials = assemble_potentials(build_sources(orbitals), None, ISOLATED)
        _, _, r = unit_gaussian(self.grid)
        expected = C.q / (4 * math.pi * C.eps0) * gaussian_potential(r, 1.0)
        self.assertLess(np.max(np.abs(potentials.phi0.data - expected)), 1e-3 * np.max(np.abs(expected)))
        self.assertLess(potentials.a2_orb.max_abs(), 1e-12)
        self.assertTrue(np.allclose(potentials.laplacian_phi0.data, -(C.q / C.eps0) * orbitals.density()))

    def test_field_parts_linear(self):
        orbitals = SpinorOrbitalSet.from_fields([self.up, self.moving])
        one = assemble_potentials(build_sources(orbitals, (0.1, 0.0, 0.05)), (0.1, 0.0, 0.05))
        two = assemble_potentials(build_sources(orbitals, (0.2, 0.0, 0.1)), (0.2, 0.0, 0.1))
        for name in ('phi2_field', 'a2_field', 'curl_a2_field'):
            self.assertTrue(np.allclose(getattr(two, name).data, 2 * getattr(one, name).data, rtol=1e-10, atol=1e-20), name)

    def test_gauge_of_all_currents(self):
        orbitals = SpinorOrbitalSet.from_fields([self.up, self.moving])
        potentials = assemble_potentials(build_sources(orbitals, (0.1, 0.2, 0.0)), (0.1, 0.2, 0.0))
        for a in (potentials.a2_orb, potentials.a2_spin, potentials.a2_field):
            div = divergence_array(self.grid, a.data)
            self.assertLess(np.linalg.norm(div), 1e-10 * np.linalg.norm(a.data))

    def test_potential_set_arithmetic(self):
        orbitals = SpinorOrbitalSet.from_fields([self.moving])
        p = assemble_potentials(build_sources(orbitals, (0.1, 0, 0)), (0.1, 0, 0))
        total = p + p
        self.assertTrue(np.allclose(total.phi0.data, 2 * p.phi0.data))
        self.assertTrue((p - p).is_zero())
        self.assertTrue(PotentialSet.zeros(self.grid).is_zero())
