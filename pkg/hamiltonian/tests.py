import math

import numpy as np
from django.test import SimpleTestCase

from core.constants import ATOMIC
from core.fields import SpinorField
from core.grid import Grid3
from core.spinors import SpinorOrbitalSet, gaussian_packet
from core.units import to_si
from field_solvers.assemble import PotentialSet, assemble_potentials
from hamiltonian.operators import (
    apply_coherent, apply_external, apply_hamiltonian, apply_internal, apply_kinetic,
    apply_pauli_hamiltonian, apply_term, term_energies, term_energy,
)
from hamiltonian.pulse import ExternalFieldSample, LaserPulse, evaluate_pulse
from hamiltonian.terms import (
    A_EXT_EXPONENT, ALL_TERMS, COH_TERMS, EXT_TERMS, INT_TERMS, MECHANISMS, TABLE_CELLS,
    TermId, TermToggles, group_of,
)
from sources.densities import build_sources
from utils.errors import ConfigurationError

C = ATOMIC
CSO = C.q * C.hbar / (4 * C.m ** 2 * C.c ** 2)


def uniform_sample(A=(0, 0, 0), E=(0, 0, 0), B=(0, 0, 0), t=0.0):
    return ExternalFieldSample(t, np.array(A, float), np.array(E, float), np.array(B, float), 0.0)


class LaserPulseTests(SimpleTestCase):

    def test_carrier_frequency(self):
        pulse = LaserPulse(A0=0.1, wavelength=100.0, envelope='flat')
        self.assertAlmostEqual(pulse.omega, 2 * math.pi * C.c / 100.0)
        self.assertAlmostEqual(pulse.peak_field, 0.1 * pulse.omega)

    def test_flat_envelope(self):
        pulse = LaserPulse(A0=0.1, polarization=(0, 0, 2), wavelength=100.0, envelope='flat')
        for t in (0.0, 0.3, 1.7):
            sample = evaluate_pulse(pulse, t)
            self.assertTrue(np.allclose(sample.A, [0, 0, 0.1 * math.cos(pulse.omega * t)]))
            self.assertTrue(np.allclose(sample.E, [0, 0, 0.1 * pulse.omega * math.sin(pulse.omega * t)]))
            self.assertFalse(np.any(sample.B))

    def test_electric_field_is_minus_time_derivative(self):
        pulse = LaserPulse(A0=0.2, wavelength=200.0, envelope='gaussian', duration=30.0, t0=10.0, carrier_phase=0.4)
        delta = 1e-4
        for t in (-5.0, 8.0, 12.5, 30.0):
            a_plus = evaluate_pulse(pulse, t + delta).A
            a_minus = evaluate_pulse(pulse, t - delta).A
            e = evaluate_pulse(pulse, t).E
            self.assertTrue(np.allclose(-(a_plus - a_minus) / (2 * delta), e, rtol=1e-6, atol=1e-9))

    def test_sin2_envelope(self):
        pulse = LaserPulse(A0=1.0, wavelength=100.0, envelope='sin2', duration=40.0, t0=50.0)
        self.assertAlmostEqual(float(pulse.envelope_value(50.0)), 1.0)
        self.assertEqual(float(pulse.envelope_value(71.0)), 0.0)
        self.assertEqual(float(pulse.envelope_derivative(29.0)), 0.0)
        self.assertTrue(evaluate_pulse(pulse, 90.0).is_zero())

    def test_far_outside_envelope(self):
        pulse = LaserPulse(A0=0.5, wavelength=100.0, envelope='gaussian', duration=20.0, t0=0.0)
        sample = evaluate_pulse(pulse, 200.0)
        self.assertLess(np.max(np.abs(sample.A)), 1e-12 * pulse.A0)
        self.assertLess(np.max(np.abs(sample.E)), 1e-12 * pulse.peak_field)

    def test_fluence_defined_pulse(self):
        pulse = LaserPulse.from_dict({'fluence': '1 mJ/cm2', 'duration': '50fs', 'wavelength': '800nm'})
        field = to_si(pulse.peak_field, 'electric_field')
        self.assertAlmostEqual(field / 4e8, 1.0, delta=0.05)
        self.assertAlmostEqual(field / 3.88e8, 1.0, delta=0.005)
        self.assertIsNotNone(pulse.fluence)

    def test_from_dict_errors(self):
        with self.assertRaises(ConfigurationError):
            LaserPulse.from_dict({'wavelength': '800nm', 'duration': '10fs'})
        with self.assertRaises(ConfigurationError):
            LaserPulse.from_dict({'A0': '0.1 au', 'E0': '1e9 V/m', 'wavelength': '800nm', 'duration': '10fs'})
        with self.assertRaises(ConfigurationError):
            LaserPulse.from_dict({'A0': '0.1 au', 'duration': '10fs'})
        with self.assertRaises(ConfigurationError):
            LaserPulse.from_dict({'A0': '0.1 au', 'wavelength': '800nm', 'duration': '10fs', 'chirp': 1})
        with self.assertRaises(ConfigurationError):
            LaserPulse(A0=0.1, envelope='lorentzian')

    def test_plane_wave(self):
        with self.assertRaises(ConfigurationError):
            LaserPulse(A0=0.1, polarization=(1, 0, 1), propagation=(0, 0, 1), spatial_dependence='plane-wave')
        grid = Grid3.cubic(8, 8.0)
        pulse = LaserPulse(A0=0.1, polarization=(1, 0, 0), wavelength=8.0, envelope='flat',
                           spatial_dependence='plane-wave', propagation=(0, 0, 1))
        sample = evaluate_pulse(pulse, 0.01, grid)
        self.assertEqual(sample.E.shape, (3,) + grid.shape)
        self.assertTrue(np.allclose(np.linalg.norm(sample.E, axis=0), C.c * np.linalg.norm(sample.B, axis=0)))
        self.assertTrue(np.allclose(sample.B[0], 0.0))
        self.assertTrue(np.allclose(np.sum(sample.E * sample.B, axis=0), 0.0))
        with self.assertRaises(ConfigurationError):
            evaluate_pulse(pulse, 0.0)

    def test_static_field(self):
        sample = uniform_sample(A=(0.1, 0, 0)).with_static_field((0, 0, 0.3))
        self.assertTrue(np.allclose(sample.B, [0, 0, 0.3]))
        self.assertTrue(evaluate_pulse(None, 3.0).is_zero())


class TermRegistryTests(SimpleTestCase):

    def test_groups(self):
        self.assertEqual((len(EXT_TERMS), len(INT_TERMS), len(COH_TERMS)), (6, 9, 7))
        self.assertEqual(len(set(ALL_TERMS)), len(ALL_TERMS))
        self.assertEqual(group_of('soc-ext-int'), 'COH')
        self.assertEqual(group_of(TermId.HARTREE), 'INT')

    def test_table_is_a_bijection_with_the_coherent_terms(self):
        self.assertEqual(sorted(TABLE_CELLS.values()), sorted(COH_TERMS))
        self.assertEqual(set(A_EXT_EXPONENT), set(COH_TERMS))
        self.assertEqual(TABLE_CELLS[('j_field', 'zeeman')], MECHANISMS['A1'])
        self.assertEqual(TABLE_CELLS[('rho0', 'spin-orbit')], MECHANISMS['A2'])

    def test_unknown_term(self):
        with self.assertRaises(ConfigurationError):
            TermId.parse('breit')

    def test_toggles(self):
        toggles = TermToggles.from_dict({'zeeman-ext': False, 'spin-spin': False})
        self.assertNotIn('zeeman-ext', toggles)
        self.assertIn(TermId.HARTREE, toggles)
        only = TermToggles.from_dict({'preset': 'none', 'only': ['hartree'], 'soc-int': True})
        self.assertEqual(set(only), {TermId.HARTREE, TermId.SOC_INT})
        self.assertEqual(set(TermToggles.leading_order().restricted('INT')), {TermId.HARTREE})
        with self.assertRaises(ConfigurationError):
            TermToggles.from_dict({'hartree': 'yes'})
        with self.assertRaises(ConfigurationError):
            TermToggles.from_dict({'preset': 'most'})


class OperatorTests(SimpleTestCase):

    def setUp(self):
        self.grid = Grid3.cubic(16, 8.0)
        self.k = 2 * math.pi * 2 / 8.0
        self.target = gaussian_packet(self.grid, (-1.0, 0.5, 0.0), 1.0, momentum=(self.k, 0, 0), spin=(1, 1, 1))
        self.other = gaussian_packet(self.grid, (1.0, 0.0, 0.0), 1.0, momentum=(0, self.k, 0), spin='up')
        self.orbitals = SpinorOrbitalSet.from_fields([self.target, self.other])

    def potentials(self, A):
        sources = build_sources(self.orbitals, A, exclusion=0)
        return assemble_potentials(sources, A)

    def test_zero_fields(self):
        out = apply_external(self.target, ExternalFieldSample.zero())
        self.assertTrue(out.is_zero())
        zero = PotentialSet.zeros(self.grid)
        self.assertTrue(apply_internal(self.target, zero).is_zero())
        for term in ALL_TERMS:
            self.assertEqual(term_energy(term, self.target, zero, ExternalFieldSample.zero()), 0.0)

    def test_zeeman_eigenstate(self):
        up = gaussian_packet(self.grid, (0, 0, 0), 1.0, spin='up')
        B0 = 0.02
        out = apply_external(up, uniform_sample(B=(0, 0, B0)), toggles=TermToggles.only('zeeman-ext'))
        self.assertTrue(np.allclose(out.data, -(C.q * C.hbar / (2 * C.m)) * B0 * up.data))

    def test_soc_on_plane_wave(self):
        x = self.grid.coordinates[0]
        data = np.zeros((2,) + self.grid.shape, dtype=complex)
        data[0] = np.exp(1j * self.k * x) / math.sqrt(self.grid.volume)
        phi = SpinorField(self.grid, data)
        E0 = 0.7
        out = apply_term('soc-ext', phi, sample=uniform_sample(E=(0, E0, 0)))
        # sigma . (E0 y x hbar k x) = -E0 hbar k sigma_z
        self.assertTrue(np.allclose(out.data, CSO * E0 * C.hbar * self.k * data, atol=1e-14))

    def test_diamagnetic_energy(self):
        A0 = 0.3
        energy = term_energy('diamagnetic-AA', self.target, sample=uniform_sample(A=(0, A0, 0)))
        self.assertAlmostEqual(energy, C.q ** 2 * A0 ** 2 / (2 * C.m) * self.target.norm() ** 2, places=12)

    def test_hartree_is_local(self):
        potentials = self.potentials(None)
        out = apply_internal(self.target, potentials, toggles=TermToggles.only('hartree'))
        self.assertTrue(np.allclose(out.data, C.q * potentials.phi0.data[None] * self.target.data))

    def test_missing_potentials(self):
        with self.assertRaises(ConfigurationError):
            apply_term('hartree', self.target)
        with self.assertRaises(ConfigurationError):
            apply_internal(self.target, None)

    def test_coherent_sector_vanishes_without_field(self):
        potentials = self.potentials(None)
        self.assertTrue(potentials.phi2_field.is_zero())
        out = apply_coherent(self.target, potentials, ExternalFieldSample.zero())
        self.assertTrue(out.is_zero())
        energies = term_energies(self.target, potentials, ExternalFieldSample.zero(), terms=COH_TERMS)
        self.assertTrue(all(v == 0.0 for v in energies.values()))

    def test_coherent_sum(self):
        A = (0.05, 0.0, 0.02)
        potentials = self.potentials(A)
        sample = uniform_sample(A=A)
        energies = term_energies(self.target, potentials, sample, terms=COH_TERMS)
        total = self.target.inner(apply_coherent(self.target, potentials, sample)).real
        self.assertAlmostEqual(sum(energies.values()) / total, 1.0, delta=1e-10)

    def test_field_scaling_exponents(self):
        A = np.array([0.05, 0.0, 0.02])
        one = term_energies(self.target, self.potentials(A), uniform_sample(A=A), terms=COH_TERMS)
        two = term_energies(self.target, self.potentials(2 * A), uniform_sample(A=2 * A), terms=COH_TERMS)
        for term, exponent in A_EXT_EXPONENT.items():
            if abs(one[term]) > 1e-30:
                self.assertAlmostEqual(two[term] / one[term], 2.0 ** exponent, delta=1e-8 * 2 ** exponent, msg=str(term))
        self.assertNotEqual(one[TermId.AA_FIELD], 0.0)
        self.assertNotEqual(one[TermId.PA_FIELD], 0.0)
        self.assertNotEqual(one[TermId.SOC_EXT_INT], 0.0)

    def test_hermiticity(self):
        rng = np.random.default_rng(5)
        shape = (2,) + self.grid.shape
        psi = SpinorField(self.grid, rng.normal(size=shape) + 1j * rng.normal(size=shape))
        phi = SpinorField(self.grid, rng.normal(size=shape) + 1j * rng.normal(size=shape))
        pulse = LaserPulse(A0=0.05, polarization=(1, 0, 0), wavelength=8.0, envelope='flat',
                           spatial_dependence='plane-wave', propagation=(0, 0, 1))
        sample = evaluate_pulse(pulse, 0.003, self.grid).with_static_field((0.0, 0.01, 0.02))
        potentials = self.potentials(sample.A)
        for term in ALL_TERMS:
            a = psi.inner(apply_term(term, phi, potentials, sample))
            b = phi.inner(apply_term(term, psi, potentials, sample))
            scale = max(abs(a), abs(b), 1e-300)
            self.assertLess(abs(a - np.conj(b)) / scale, 1e-9, msg=str(term))
        self.assertAlmostEqual(phi.inner(apply_kinetic(psi)), np.conj(psi.inner(apply_kinetic(phi))))

    def test_energies_are_real(self):
        A = (0.05, 0.0, 0.02)
        potentials = self.potentials(A)
        sample = uniform_sample(A=A, E=(0.1, 0, 0.04), B=(0, 0, 0.01))
        for term in ALL_TERMS:
            value = self.target.inner(apply_term(term, self.target, potentials, sample))
            self.assertLessEqual(abs(value.imag), 1e-10 * max(abs(value), 1e-300), msg=str(term))

    def test_term_bookkeeping(self):
        A = np.array([0.05, 0.0, 0.02])
        potentials = self.potentials(A)
        sample = uniform_sample(A=A, E=3.0 * A, B=(0, 0, 0.01))
        split = apply_hamiltonian(self.target, potentials, sample)
        direct = apply_pauli_hamiltonian(self.target, potentials, sample)
        scale = np.max(np.abs(split.data))
        self.assertLess(np.max(np.abs(split.data - direct.data)), 1e-12 * scale)

    def test_toggles_restrict_groups(self):
        potentials = self.potentials(None)
        only_hartree = apply_hamiltonian(self.target, potentials, ExternalFieldSample.zero(), toggles=TermToggles.only('hartree'))
        expected = apply_kinetic(self.target).data + C.q * potentials.phi0.data[None] * self.target.data
        self.assertTrue(np.allclose(only_hartree.data, expected))
