import math

import numpy as np
from django.test import SimpleTestCase

from core.constants import ATOMIC
from core.grid import Grid3
from core.spectral import divergence_array, forward, gradient_array, inverse
from core.spinors import SpinorOrbitalSet, gaussian_packet
from sources.densities import (
    TimeDerivativeContext, build_sources, charge_density0, continuity_residual,
    current2_diagnostic, density_rate, field_current, orbital_current, rho2_field, rho2_orbital,
    rho2_spin, spin_current,
)
from utils.errors import ConfigurationError, MissingSnapshotError

C = ATOMIC
SIGMA = 1.0


def gaussian_density(grid, center=(0.0, 0.0, 0.0), width=SIGMA):
    d = grid.minimum_image(center)
    return (2 * math.pi * width ** 2) ** -1.5 * np.exp(-np.sum(d ** 2, axis=0) / (2 * width ** 2)), d


def free_evolve(phi, t, grid):
    '''Exact free propagation of a spinor array on the grid.'''
    return inverse(np.exp(-0.5j * grid.k_squared * t) * forward(phi))


class SourceTestMixin:

    def setUp(self):
        self.grid = Grid3.cubic(32, 16.0)
        self.k = 2 * math.pi * 2 / 16.0
        self.up = gaussian_packet(self.grid, (0, 0, 0), SIGMA, spin='up')
        self.moving = gaussian_packet(self.grid, (0.5, 0, 0), SIGMA, momentum=(self.k, 0, 0), spin='+x')
        self.tilted = gaussian_packet(self.grid, (-0.5, 0.5, 0), SIGMA, momentum=(0, self.k, -self.k), spin=(1, 1, 0))


class ChargeDensityTests(SourceTestMixin, SimpleTestCase):

    def test_single_gaussian(self):
        rho = charge_density0(SpinorOrbitalSet.from_fields([self.up]))
        self.assertAlmostEqual(float(rho.integrate()), 1.0, delta=1e-10)
        self.assertTrue(np.all(rho.data >= 0))
        expected, _ = gaussian_density(self.grid)
        self.assertTrue(np.allclose(rho.data, expected, atol=1e-6 * expected.max()))

    def test_identical_orbitals_double(self):
        single = charge_density0(SpinorOrbitalSet.from_fields([self.up]))
        double = charge_density0(SpinorOrbitalSet.from_fields([self.up, self.up]))
        self.assertTrue(np.allclose(double.data, 2 * single.data))

    def test_exclusion(self):
        orbitals = SpinorOrbitalSet.from_fields([self.up, self.moving])
        rho = charge_density0(orbitals, exclusion=0)
        self.assertTrue(np.allclose(rho.data, charge_density0(SpinorOrbitalSet.from_fields([self.moving])).data))
        with self.assertRaises(ConfigurationError):
            charge_density0(orbitals, exclusion=2)


class CurrentTests(SourceTestMixin, SimpleTestCase):

    def test_real_orbital_has_no_current(self):
        j = orbital_current(SpinorOrbitalSet.from_fields([self.up]))
        self.assertLess(j.max_abs(), 1e-14)

    def test_plane_wave_current(self):
        x = self.grid.coordinates[0]
        wave = np.exp(1j * self.k * x) / math.sqrt(self.grid.volume)
        orbitals = SpinorOrbitalSet(self.grid, np.stack([wave, 0 * wave]))
        j = orbital_current(orbitals).data
        self.assertTrue(np.allclose(j[0], self.k / self.grid.volume, atol=1e-14))
        self.assertTrue(np.allclose(j[1:], 0.0, atol=1e-14))

    def test_boosted_gaussian_current(self):
        orbitals = SpinorOrbitalSet.from_fields([self.moving])
        j = orbital_current(orbitals).data
        rho = charge_density0(orbitals).data
        self.assertTrue(np.allclose(j[0], self.k * rho, atol=1e-6 * rho.max()))

    def test_spin_current_of_spin_up_gaussian(self):
        orbitals = SpinorOrbitalSet.from_fields([self.up])
        j = spin_current(orbitals).data
        rho, d = gaussian_density(self.grid)
        d_rho_dx, d_rho_dy = -d[0] / SIGMA ** 2 * rho, -d[1] / SIGMA ** 2 * rho
        scale = np.abs(d_rho_dx).max()
        self.assertTrue(np.allclose(j[0], 0.5 * d_rho_dy, atol=1e-5 * scale))
        self.assertTrue(np.allclose(j[1], -0.5 * d_rho_dx, atol=1e-5 * scale))
        self.assertLess(np.abs(j[2]).max(), 1e-14)

    def test_spin_current_divergence_free(self):
        orbitals = SpinorOrbitalSet.from_fields([self.up, self.moving, self.tilted])
        j = spin_current(orbitals)
        self.assertLess(np.abs(divergence_array(self.grid, j.data)).max(), 1e-10 * j.max_abs())

    def test_uniform_spin_has_no_spin_current(self):
        uniform = np.full(self.grid.shape, 1 / math.sqrt(self.grid.volume))
        orbitals = SpinorOrbitalSet(self.grid, np.stack([uniform, 0 * uniform]))
        self.assertLess(spin_current(orbitals).max_abs(), 1e-14)

    def test_field_current(self):
        orbitals = SpinorOrbitalSet.from_fields([self.up])
        rho = charge_density0(orbitals).data
        self.assertTrue(field_current(orbitals, None).is_zero())
        j = field_current(orbitals, (0.3, 0, 0)).data
        self.assertTrue(np.allclose(j[0], -(C.q / C.m) * rho * 0.3))
        j2 = field_current(orbitals, (0.6, 0, 0)).data
        self.assertTrue(np.allclose(j2, 2 * j))


class SecondOrderDensityTests(SourceTestMixin, SimpleTestCase):

    def test_integrals_vanish(self):
        orbitals = SpinorOrbitalSet.from_fields([self.up, self.moving, self.tilted])
        a = (0.2, -0.1, 0.4)
        for rho2 in (rho2_orbital(orbitals), rho2_spin(orbitals), rho2_field(orbitals, a)):
            self.assertLess(abs(float(rho2.integrate())), 1e-10)

    def test_constant_density(self):
        uniform = np.full(self.grid.shape, 1 / math.sqrt(self.grid.volume))
        orbitals = SpinorOrbitalSet(self.grid, np.stack([uniform, 0 * uniform]))
        self.assertLess(rho2_orbital(orbitals).max_abs(), 1e-18)

    def test_field_term_vanishes_without_field(self):
        orbitals = SpinorOrbitalSet.from_fields([self.moving])
        self.assertTrue(rho2_field(orbitals, None).is_zero())
        self.assertTrue(rho2_field(orbitals, (0, 0, 0)).is_zero())

    def test_field_term_of_spin_up_gaussian(self):
        a0 = 0.7
        orbitals = SpinorOrbitalSet.from_fields([self.up])
        rho, d = gaussian_density(self.grid)
        d_rho_dy = -d[1] / SIGMA ** 2 * rho
        expected = -(C.q * C.hbar / (4 * C.m ** 2 * C.c ** 2)) * a0 * d_rho_dy
        got = rho2_field(orbitals, (a0, 0, 0)).data
        self.assertTrue(np.allclose(got, expected, atol=1e-5 * np.abs(expected).max()))

    def test_linear_in_field(self):
        orbitals = SpinorOrbitalSet.from_fields([self.tilted])
        one = rho2_field(orbitals, (0.1, 0.2, 0.3)).data
        two = rho2_field(orbitals, (0.2, 0.4, 0.6)).data
        self.assertTrue(np.allclose(two, 2 * one, rtol=0, atol=1e-14 * np.abs(one).max()))


class SourceSetTests(SourceTestMixin, SimpleTestCase):

    def test_union_is_sum(self):
        a = (0.1, 0.0, -0.2)
        left = SpinorOrbitalSet.from_fields([self.up])
        right = SpinorOrbitalSet.from_fields([self.moving, self.tilted])
        union = SpinorOrbitalSet.from_fields([self.up, self.moving, self.tilted])
        s_l, s_r, s_u = (build_sources(o, a) for o in (left, right, union))
        for name in ('rho0', 'j_orb', 'j_spin', 'j_field', 'rho2_orb', 'rho2_spin', 'rho2_field'):
            total = getattr(s_l, name).data + getattr(s_r, name).data
            self.assertTrue(np.allclose(getattr(s_u, name).data, total, atol=1e-13), name)

    def test_matches_individual_operations(self):
        orbitals = SpinorOrbitalSet.from_fields([self.up, self.moving, self.tilted])
        a = (0.0, 0.3, 0.1)
        sources = build_sources(orbitals, a, exclusion=1)
        self.assertEqual(sources.count, 2)
        self.assertTrue(np.allclose(sources.j_orb.data, orbital_current(orbitals, 1).data))
        self.assertTrue(np.allclose(sources.rho2_spin.data, rho2_spin(orbitals, 1).data))
        self.assertTrue(np.allclose(sources.rho2_field.data, rho2_field(orbitals, a, 1).data))
        self.assertAlmostEqual(float(sources.rho0.integrate()), 2.0, delta=1e-10)

    def test_empty_set(self):
        orbitals = SpinorOrbitalSet.from_fields([self.up])
        sources = build_sources(orbitals, exclusion=0)
        self.assertEqual(sources.count, 0)
        self.assertTrue(sources.rho0.is_zero())


class SecondOrderCurrentTests(SourceTestMixin, SimpleTestCase):

    def test_static_without_fields(self):
        orbitals = SpinorOrbitalSet.from_fields([self.moving])
        context = TimeDerivativeContext(dt=0.1, previous=orbitals, following=orbitals)
        self.assertLess(current2_diagnostic(orbitals, dt_context=context).max_abs(), 1e-20)

    def test_spin_cross_field(self):
        e0 = 0.05
        orbitals = SpinorOrbitalSet.from_fields([self.up])
        j2 = current2_diagnostic(orbitals, E=(e0, 0, 0), time_derivatives=False).data
        rho = charge_density0(orbitals).data
        cso = C.q * C.hbar / (4 * C.m ** 2 * C.c ** 2)
        self.assertTrue(np.allclose(j2[1], -cso * rho * e0))
        self.assertLess(np.abs(j2[[0, 2]]).max(), 1e-20)

    def test_missing_snapshots(self):
        orbitals = SpinorOrbitalSet.from_fields([self.up])
        with self.assertRaises(MissingSnapshotError):
            current2_diagnostic(orbitals)
        with self.assertRaises(MissingSnapshotError):
            current2_diagnostic(orbitals, dt_context=TimeDerivativeContext(dt=0.1))

    def test_breathing_gaussian(self):
        dt = 0.05
        packets = [SpinorOrbitalSet.from_fields([gaussian_packet(self.grid, (0, 0, 0), w, spin='up')])
                   for w in (0.95, 1.0, 1.05)]
        context = TimeDerivativeContext(dt=dt, previous=packets[0], following=packets[2])
        j2 = current2_diagnostic(packets[1], dt_context=context).data
        grads = [gradient_array(self.grid, charge_density0(p).data) for p in packets]
        expected = -(C.hbar ** 2 / (8 * C.m ** 2 * C.c ** 2)) * (grads[2] - grads[0]) / (2 * dt)
        self.assertTrue(np.allclose(j2, expected, atol=1e-12 * np.abs(expected).max()))

        forward_only = TimeDerivativeContext(dt=dt, following=packets[2])
        j2_forward = current2_diagnostic(packets[1], dt_context=forward_only).data
        expected_forward = -(C.hbar ** 2 / (8 * C.m ** 2 * C.c ** 2)) * (grads[2] - grads[1]) / dt
        self.assertTrue(np.allclose(j2_forward, expected_forward, atol=1e-12 * np.abs(expected_forward).max()))


class ContinuityTests(SourceTestMixin, SimpleTestCase):

    def test_free_packet_satisfies_continuity(self):
        delta = 1e-3
        orbitals = SpinorOrbitalSet.from_fields([self.moving, self.tilted])
        before = orbitals.with_data(free_evolve(orbitals.data, -delta, self.grid))
        after = orbitals.with_data(free_evolve(orbitals.data, delta, self.grid))
        drho_dt = (after.density() - before.density()) / (2 * delta)
        self.assertLess(continuity_residual(orbitals, drho_dt), 1e-5)

    def test_density_rate_from_kinetic_action(self):
        orbitals = SpinorOrbitalSet.from_fields([self.moving, self.tilted])
        h_phi = inverse(0.5 * self.grid.k_squared * forward(orbitals.data))
        rate = density_rate(orbitals, h_phi)
        delta = 1e-3
        before = orbitals.with_data(free_evolve(orbitals.data, -delta, self.grid))
        after = orbitals.with_data(free_evolve(orbitals.data, delta, self.grid))
        centred = (after.density() - before.density()) / (2 * delta)
        self.assertLess(np.linalg.norm(rate - centred), 1e-5 * np.linalg.norm(rate))
        self.assertLess(continuity_residual(orbitals, rate), 1e-5)
        with self.assertRaises(ConfigurationError):
            density_rate(orbitals, h_phi[:1])

    def test_detects_wrong_rate(self):
        orbitals = SpinorOrbitalSet.from_fields([self.moving])
        after = orbitals.with_data(free_evolve(orbitals.data, 1e-3, self.grid))
        drho_dt = (after.density() - orbitals.density()) / 2e-3
        self.assertGreater(continuity_residual(orbitals, drho_dt), 0.1)
