import csv
import io
import json
import math
from pathlib import Path
import tempfile

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, tag

from breit_pauli.equivalence import EquivalenceReport, EquivalenceRow, equivalence_report, route1_energies
from breit_pauli.pair import PairConfiguration, PairDensities
from breit_pauli.reduction import (
    BLOCKS, FIELD_ADDENDS, bp_field_corrections, bp_pair_energy, check_field_corrections, coupling,
    hartree_reduce,
)
from core.constants import ATOMIC
from core.grid import Grid3
from core.spinors import SpinorOrbitalSet, gaussian_packet
from hamiltonian.terms import COH_TERMS, INT_TERMS, TermId
from utils.errors import ConfigurationError, ValidationFailure

A_FIELD = np.array([0.0, 0.5, 0.0])


def spin_pair(grid, width=0.7, separation=3.0, shift=(0.0, 0.0, 0.0), momenta=True):
    '''Two spin-up packets along x; momenta commensurate with the box keep the phases periodic.'''
    k0 = 2.0 * math.pi / grid.box[0] if momenta else 0.0
    sx, sy, sz = shift
    left = gaussian_packet(grid, (-0.5 * separation + sx, sy, sz), width, (0.0, k0, 0.0), 'up')
    right = gaussian_packet(grid, (0.5 * separation + sx, sy, sz), width, (0.0, -k0, k0), 'up')
    return SpinorOrbitalSet.from_fields([left, right])


class PairConfigurationTests(SimpleTestCase):

    def setUp(self):
        self.grid = Grid3.cubic(12, 8.0)
        self.orbitals = spin_pair(self.grid, 0.8, 2.4)

    def test_default_softening(self):
        pair = PairConfiguration(self.orbitals)
        self.assertAlmostEqual(pair.softening, 2.0 * 8.0 / 12)
        self.assertEqual(pair.partners, [1])
        self.assertTrue(np.array_equal(pair.A, np.zeros(3)))

    def test_rejects_bad_input(self):
        with self.assertRaises(ConfigurationError):
            PairConfiguration(self.orbitals, target=2)
        with self.assertRaises(ConfigurationError):
            PairConfiguration(self.orbitals, quadrature='monte-carlo')
        with self.assertRaises(ConfigurationError):
            PairConfiguration(self.orbitals, softening=-1.0)
        with self.assertRaises(ConfigurationError):
            PairConfiguration(self.orbitals.with_data(2.0 * self.orbitals.data))
        with self.assertRaises(ConfigurationError):
            PairConfiguration(self.orbitals, A_ext=np.zeros((3,) + self.grid.shape))

    def test_swapped(self):
        pair = PairConfiguration(self.orbitals)
        self.assertEqual(pair.swapped().target, 1)
        with self.assertRaises(ConfigurationError):
            PairConfiguration(self.orbitals.subset([0])).swapped()

    def test_substituted_densities(self):
        densities = PairDensities.of(self.grid, self.orbitals.data[0])
        moved = densities.substituted(A_FIELD, ATOMIC.q)
        self.assertTrue(np.allclose(moved.pi[1], densities.pi[1] + A_FIELD[1] * densities.rho))
        self.assertTrue(np.allclose(moved.T[2, 1], densities.T[2, 1] + A_FIELD[1] * densities.s[2]))
        self.assertTrue(np.array_equal(moved.T[2, 0], densities.T[2, 0]))


class ReductionTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.grid = Grid3.cubic(24, 12.0)
        cls.orbitals = spin_pair(cls.grid)
        cls.pair = PairConfiguration(cls.orbitals, A_ext=A_FIELD)

    def test_single_orbital_gives_zero_fields(self):
        lone = PairConfiguration(self.orbitals.subset([0]), A_ext=A_FIELD)
        reduction = hartree_reduce(lone)
        self.assertTrue(all(c.is_empty() for c in reduction.fields.values()))
        self.assertTrue(all(value == 0.0 for value in reduction.energies.values()))
        self.assertEqual(bp_pair_energy(lone, check_softening=False).total, 0.0)

    def test_zero_field_gives_zero_corrections(self):
        corrections = bp_field_corrections(self.pair, np.zeros(3))
        self.assertEqual(set(corrections.addends), set(COH_TERMS))
        self.assertTrue(all(value == 0.0 for value in corrections.addends.values()))
        reduction = hartree_reduce(self.pair, np.zeros(3))
        self.assertTrue(all(reduction.fields[t].is_empty() for t in COH_TERMS))

    def test_field_scaling(self):
        once = bp_field_corrections(self.pair, A_FIELD, check_softening=False).addends
        twice = bp_field_corrections(self.pair, 2.0 * A_FIELD, check_softening=False).addends
        for term in COH_TERMS:
            factor = 4.0 if term is TermId.AA_FIELD else 2.0
            self.assertNotEqual(once[term], 0.0, term)
            self.assertTrue(np.isclose(twice[term], factor * once[term], rtol=1e-10), term)

    def test_corrections_sum_to_pair_energy_difference(self):
        self.assertLess(check_field_corrections(self.pair), 1e-8)

    def test_corrections_match_coherent_mean_fields(self):
        corrections = bp_field_corrections(self.pair, check_softening=False)
        energies = hartree_reduce(self.pair).energies
        for term in COH_TERMS:
            self.assertTrue(np.isclose(corrections.addends[term], energies[term], rtol=1e-10, atol=0.0), term)
        self.assertEqual(set(corrections.labelled()), set(FIELD_ADDENDS.values()))

    def test_swap_symmetry(self):
        forward = bp_pair_energy(self.pair, check_softening=False)
        backward = bp_pair_energy(self.pair.swapped(), check_softening=False)
        self.assertEqual(set(forward.blocks), set(BLOCKS))
        for block in BLOCKS:
            self.assertTrue(np.isclose(forward.blocks[block], backward.blocks[block], rtol=1e-8, atol=1e-14), block)

    def test_translation_invariance(self):
        h = self.grid.spacing[0]
        moved = PairConfiguration(spin_pair(self.grid, shift=(h, h, -h)), A_ext=A_FIELD)
        reference = hartree_reduce(self.pair).energies
        shifted = hartree_reduce(moved).energies
        for term in COH_TERMS + INT_TERMS:
            self.assertTrue(np.isclose(shifted[term], reference[term], rtol=1e-4, atol=1e-14), term)

    def test_softening_flag(self):
        energies = bp_pair_energy(self.pair)
        self.assertEqual(set(energies.sensitivity), set(BLOCKS))
        # the smoothed contact term follows the softening length directly
        self.assertIn('contact', energies.flagged)

    def test_direct_quadrature_matches_convolution(self):
        grid = Grid3.cubic(12, 8.0)
        orbitals = spin_pair(grid, 0.8, 2.4)
        convolved = hartree_reduce(PairConfiguration(orbitals, A_ext=A_FIELD)).energies
        direct = hartree_reduce(PairConfiguration(orbitals, A_ext=A_FIELD, quadrature='direct')).energies
        for term in COH_TERMS + INT_TERMS:
            self.assertTrue(np.isclose(direct[term], convolved[term], rtol=1e-8, atol=1e-16), term)


class PointDipoleTests(SimpleTestCase):

    def test_spin_spin_matches_point_dipoles(self):
        grid = Grid3.cubic(32, 16.0)
        R = 6.0
        orbitals = spin_pair(grid, width=0.8, separation=R, momenta=False)
        energies = bp_pair_energy(PairConfiguration(orbitals, softening=0.0))
        expected = 0.25 * ATOMIC.hbar ** 2 * coupling(PairConfiguration(orbitals)) / R ** 3
        self.assertTrue(np.isclose(energies.blocks['spin-spin'], expected, rtol=1e-2))
        self.assertLess(abs(energies.blocks['spin-orbit']), 1e-6 * abs(expected))
        self.assertEqual(energies.flagged, [])


class EquivalenceTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        grid = Grid3.cubic(24, 12.0)
        cls.pair = PairConfiguration(spin_pair(grid), A_ext=A_FIELD)
        cls.report = equivalence_report(cls.pair)

    def test_every_term_agrees(self):
        self.assertEqual([row.term for row in self.report.rows], list(COH_TERMS + INT_TERMS))
        for row in self.report.rows:
            self.assertNotEqual(row.route1, 0.0, row.term)
            self.assertLessEqual(row.deviation, 1e-3, row.term)
        self.assertTrue(self.report.passed)
        self.report.raise_for_failures()

    def test_coherent_terms_vanish_without_field(self):
        route1 = route1_energies(self.pair, np.zeros(3))
        route2 = hartree_reduce(self.pair, np.zeros(3)).energies
        for term in COH_TERMS:
            self.assertEqual(route1[term], 0.0)
            self.assertEqual(route2[term], 0.0)

    def test_spectral_route_is_reported(self):
        for row in self.report.rows:
            self.assertTrue(math.isfinite(row.spectral), row.term)
            self.assertTrue(math.isfinite(row.spectral_deviation), row.term)
        self.assertLessEqual(self.report.row(TermId.HARTREE).spectral_deviation, 1e-3)
        spectral = route1_energies(self.pair, np.zeros(3), 'spectral-poisson')
        for term in COH_TERMS:
            self.assertEqual(spectral[term], 0.0)
        self.assertNotEqual(spectral[TermId.HARTREE], 0.0)

    def test_spectral_route_can_be_skipped(self):
        report = equivalence_report(self.pair, spectral=False)
        self.assertTrue(all(row.spectral is None for row in report.rows))
        self.assertEqual(report.row(TermId.HARTREE).route1, self.report.row(TermId.HARTREE).route1)

    def test_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = self.report.write_csv(Path(tmp) / 'report.csv')
            with open(path, newline='') as handle:
                rows = list(csv.DictReader(handle))
        self.assertEqual(len(rows), len(COH_TERMS) + len(INT_TERMS))
        self.assertEqual(rows[0]['term'], COH_TERMS[0].value)
        self.assertEqual({r['passed'] for r in rows}, {'pass'})
        self.assertTrue(all(r['spectral'] for r in rows))

    def test_failures_raise(self):
        rows = [
            EquivalenceRow(TermId.HARTREE, 1.0, 1.0, 0.0, True),
            EquivalenceRow(TermId.SPIN_SPIN, 1.0, 1.1, 0.1, False),
        ]
        report = EquivalenceReport(rows, 0, 0.5, 'grid-convolution', 1e-3)
        with self.assertRaises(ValidationFailure) as raised:
            report.raise_for_failures()
        self.assertEqual(raised.exception.context['failed'], ['spin-spin'])
        self.assertEqual(raised.exception.exit_code, 6)


@tag('slow')
class ReferenceResolutionEquivalenceTests(SimpleTestCase):

    def test_every_term_agrees_at_64(self):
        grid = Grid3.cubic(64, 16.0)
        pair = PairConfiguration(spin_pair(grid, width=1.0), A_ext=A_FIELD)
        report = equivalence_report(pair, spectral=False)
        for row in report.rows:
            self.assertNotEqual(row.route1, 0.0, row.term)
            self.assertLessEqual(row.deviation, 1e-3, row.term)
        self.assertTrue(report.passed)


class ValidateCommandTests(SimpleTestCase):

    def write_scenario(self, directory):
        payload = {
            'name': 'bp-pair',
            'grid': {'n': 16, 'box': 12},
            'orbitals': [
                {'center': [-1.5, 0, 0], 'width': 1.5, 'spin': 'up'},
                {'center': [1.5, 0, 0], 'width': 1.5, 'spin': '+x'},
            ],
            'pulse': {'A0': 0.5, 'wavelength': 15117.8, 'envelope': 'flat', 'polarization': [0, 1, 0]},
            'dt': 0.05,
            't_end': 0,
        }
        path = Path(directory) / 'pair.json'
        path.write_text(json.dumps(payload))
        return path

    def test_report_written(self):
        with tempfile.TemporaryDirectory() as tmp:
            scenario = self.write_scenario(tmp)
            output = Path(tmp) / 'bp.csv'
            stdout = io.StringIO()
            call_command('validate_bp', str(scenario), '--output', str(output), '--tolerance', '1', stdout=stdout)
            with open(output, newline='') as handle:
                rows = list(csv.DictReader(handle))
        self.assertEqual([r['term'] for r in rows], [t.value for t in COH_TERMS + INT_TERMS])
        self.assertIn('all terms agree', stdout.getvalue())
        self.assertIn('spectral', stdout.getvalue())
        self.assertTrue(all(r['spectral_deviation'] for r in rows))
        self.assertIn('pair energy blocks', stdout.getvalue())

    def test_failure_exit_code(self):
        with tempfile.TemporaryDirectory() as tmp:
            scenario = self.write_scenario(tmp)
            with self.assertRaises(CommandError) as raised:
                call_command('validate_bp', str(scenario), '--tolerance', '0', stdout=io.StringIO())
        self.assertEqual(raised.exception.returncode, 6)
        self.assertTrue(str(raised.exception).startswith('[validation]'))

    def test_bad_target(self):
        with tempfile.TemporaryDirectory() as tmp:
            scenario = self.write_scenario(tmp)
            with self.assertRaises(CommandError) as raised:
                call_command('validate_bp', str(scenario), '--target', '5', stdout=io.StringIO())
        self.assertEqual(raised.exception.returncode, 2)
