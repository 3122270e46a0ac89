import csv
import io
import json
import math
from pathlib import Path
import tempfile

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from analysis.decompose import decompose, decompose_snapshot, decompose_trajectory
from analysis.estimates import (
    EtaInputs, REFERENCE_POINTS, SI, eta, fluence_to_field, magnitude_estimates, reference_table,
)
from analysis.mechanisms import REPORT_COLUMNS, mechanism_report, mechanism_table, write_report
from hamiltonian.terms import COH_TERMS, DIRECT_SPIN_TERMS, MECHANISMS, TABLE_CELLS, TermId
from propagator.observables import read_csv
from propagator.runner import run
from propagator.scenario import Scenario
from utils.errors import ConfigurationError


def pair_payload(**overrides):
    payload = {
        'name': 'pair',
        'grid': {'n': 16, 'box': 12},
        'orbitals': [
            {'center': [-1.5, 0, 0], 'width': 1.5, 'spin': '+x'},
            {'center': [1.5, 0, 0], 'width': 1.5, 'momentum': [0, 0.3, 0], 'spin': 'up'},
        ],
        'pulse': {'A0': 0.5, 'wavelength': 15117.8, 'envelope': 'flat', 'polarization': [0, 1, 0]},
        'dt': 0.05,
        't_end': 0.1,
    }
    payload.update(overrides)
    return payload


class EstimatesTests(SimpleTestCase):

    def test_fluence_to_field(self):
        E = fluence_to_field(1.0, 50e-15)
        self.assertLess(abs(E - 4e8) / 4e8, 0.05)
        self.assertAlmostEqual(E / 3.88e8, 1.0, places=2)
        self.assertAlmostEqual(fluence_to_field(4.0, 50e-15) / E, 2.0)
        self.assertGreater(fluence_to_field(1.0, 25e-15), E)
        with self.assertRaises(ConfigurationError):
            fluence_to_field(0.0, 50e-15)

    def test_reference_points(self):
        rows = reference_table()
        self.assertEqual(len(rows), len(REFERENCE_POINTS))
        for row, allowed in zip(rows, (0.015, 0.015, 0.03)):
            self.assertLess(abs(row['eta_exact'] - row['eta_quoted']), allowed, row['point'])

    def test_eta_is_linear(self):
        base = eta(EtaInputs(1e-10, 4e8, 800e-9))
        self.assertAlmostEqual(eta(EtaInputs(3e-10, 4e8, 800e-9)) / base, 3.0)
        self.assertAlmostEqual(eta(EtaInputs(1e-10, 8e8, 800e-9)) / base, 2.0)
        self.assertAlmostEqual(eta(EtaInputs(1e-10, 4e8, 400e-9)) / base, 0.5)
        self.assertEqual(eta(EtaInputs(1e-10, 0.0, 800e-9)), 0.0)
        with self.assertRaises(ConfigurationError):
            EtaInputs(0.0, 4e8, 800e-9)

    def test_magnitude_estimates(self):
        estimates = magnitude_estimates(1e-10, 1, 4e8, 800e-9)
        U_ext = estimates.U_ext
        self.assertAlmostEqual(U_ext[1] / U_ext[0] / 3.0e-6, 1.0, places=1)
        self.assertTrue(math.isclose(estimates.coherent_ratio, eta(EtaInputs(1e-10, 4e8, 800e-9)), rel_tol=1e-12))
        far = magnitude_estimates(1e-3, 1, 4e8, 800e-9)
        self.assertLess(far.U_int[0], 1e-6 * estimates.U_int[0])
        self.assertEqual(estimates.phi_ext, 4e8 * 800e-9)
        with self.assertRaises(ConfigurationError):
            magnitude_estimates(1e-10, 0, 4e8, 800e-9)


class MechanismTableTests(SimpleTestCase):

    def energies(self):
        return {term.value: float(index + 1) for index, term in enumerate(DIRECT_SPIN_TERMS + COH_TERMS)}

    def test_cells_pass_through(self):
        energies = self.energies()
        table = mechanism_table(energies, step=3, time=0.15)
        self.assertEqual(table.cell('j_field', 'zeeman'), energies['zeeman-field'])
        self.assertEqual(table.cell('rho0', 'spin-orbit'), energies['soc-ext-int'])
        self.assertIsNone(table.cell('rho0', 'coulomb'))
        self.assertEqual(table.mechanisms['A1'], energies['zeeman-field'])
        self.assertEqual(table.mechanisms['B2'], energies['phi2-field'])
        self.assertEqual(table.coherent_total, sum(energies[t.value] for t in COH_TERMS))
        self.assertEqual(sum(v is not None for row in table.layout() for v in row), len(TABLE_CELLS))

    def test_missing_energies(self):
        energies = self.energies()
        del energies['AA-spin']
        with self.assertRaises(ConfigurationError) as raised:
            mechanism_table(energies)
        self.assertEqual(raised.exception.context['missing'], ['AA-spin'])

    def test_report_csv(self):
        tables = mechanism_report([dict(self.energies(), step=0, time=0.0), dict(self.energies(), step=1, time=0.05)])
        with tempfile.TemporaryDirectory() as tmp:
            path = write_report(Path(tmp) / 'mechanisms.csv', tables)
            with open(path, newline='') as handle:
                rows = list(csv.DictReader(handle))
        self.assertEqual(list(rows[0]), list(REPORT_COLUMNS))
        self.assertEqual(len(rows), 2 * (len(DIRECT_SPIN_TERMS) + len(COH_TERMS)))
        a1 = [r for r in rows if r['mechanism'] == 'A1']
        self.assertEqual([r['term'] for r in a1], ['zeeman-field'] * 2)
        self.assertEqual({r['coupling'] for r in rows if r['source'] == 'external'}, {'direct'})


class MechanismReportTests(SimpleTestCase):

    def test_trajectory_tables(self):
        result = run(Scenario.from_dict(pair_payload()))
        tables = mechanism_report(result.observables)
        self.assertEqual([t.step for t in tables], [0, 1, 2])
        for table, row in zip(tables, result.observables):
            for term in COH_TERMS + DIRECT_SPIN_TERMS:
                self.assertEqual(table.energies[term], row.energies[term])
            self.assertTrue(np.isclose(table.coherent_total, row.group_energy(COH_TERMS), rtol=1e-12, atol=0.0))
        self.assertNotEqual(tables[0].mechanisms['A2'], 0.0)

    def test_no_field_no_indirect_mechanisms(self):
        result = run(Scenario.from_dict(pair_payload(pulse=None, t_end=0)))
        table = mechanism_report(result.observables)[0]
        self.assertTrue(all(value == 0.0 for value in table.mechanisms.values()))
        self.assertEqual(table.coherent_total, 0.0)


class DecomposeTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.TemporaryDirectory()
        payload = pair_payload(outputs={'every': 1, 'snapshot_every': 1, 'quantities': ['orbitals']})
        cls.result = run(Scenario.from_dict(payload), cls.tmp.name)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def test_snapshot_matches_trajectory(self):
        table = decompose_snapshot(self.tmp.name, step=1)[0]
        row = self.result.observables[1]
        self.assertEqual(table.step, 1)
        for term in COH_TERMS + DIRECT_SPIN_TERMS:
            self.assertTrue(np.isclose(table.energies[term], row.energies[term], rtol=1e-12, atol=1e-30), term)

    def test_trajectory_csv(self):
        path = Path(self.tmp.name) / 'observables.csv'
        tables = decompose_trajectory(path)
        self.assertEqual(len(tables), len(read_csv(path)))
        self.assertEqual(tables[-1].energies[TermId.ZEEMAN_FIELD], self.result.observables[-1].energies[TermId.ZEEMAN_FIELD])
        self.assertEqual([t.step for t in decompose(path, step=2)], [2])
        with self.assertRaises(ConfigurationError):
            decompose_trajectory(path, steps=[7])

    def test_decompose_command(self):
        with tempfile.TemporaryDirectory() as out:
            output = Path(out) / 'mechanisms.csv'
            stdout = io.StringIO()
            call_command('decompose', self.tmp.name, '--output', str(output), stdout=stdout)
            with open(output, newline='') as handle:
                rows = list(csv.DictReader(handle))
        self.assertEqual(len(rows), len(DIRECT_SPIN_TERMS) + len(COH_TERMS))
        self.assertEqual({r['mechanism'] for r in rows} - {''}, set(MECHANISMS))
        self.assertIn('coherent total', stdout.getvalue())

    def test_missing_snapshot(self):
        with self.assertRaises(CommandError) as raised:
            call_command('decompose', self.tmp.name, '--step', '9', stdout=io.StringIO())
        self.assertEqual(raised.exception.returncode, 2)


class EtaCommandTests(SimpleTestCase):

    def test_fluence(self):
        stdout = io.StringIO()
        call_command('eta', '--fluence', '1', '--dt', '50fs', stdout=stdout)
        self.assertIn('E_ext = 3.88', stdout.getvalue())
        self.assertNotIn('eta =', stdout.getvalue())

    def test_eta_report(self):
        with tempfile.TemporaryDirectory() as tmp:
            output = Path(tmp) / 'eta.json'
            call_command('eta', '--r', '1 A', '--E', '4e8', '--lambda', '800nm', '--output', str(output),
                         stdout=io.StringIO())
            report = json.loads(output.read_text())
        self.assertTrue(math.isclose(report['eta'], eta(EtaInputs(1e-10, 4e8, 800e-9, SI)), rel_tol=1e-12))
        self.assertTrue(math.isclose(report['estimates']['coherent_ratio'], report['eta'], rel_tol=1e-12))

    def test_reference(self):
        stdout = io.StringIO()
        call_command('eta', '--reference', stdout=stdout)
        self.assertEqual(stdout.getvalue().count('eta exact'), len(REFERENCE_POINTS))

    def test_r_needs_field_and_wavelength(self):
        with self.assertRaises(CommandError) as raised:
            call_command('eta', '--r', '1e-10', '--E', '4e8', stdout=io.StringIO())
        self.assertEqual(raised.exception.returncode, 2)
        self.assertTrue(str(raised.exception).startswith('[configuration]'))
        with self.assertRaises(CommandError):
            call_command('eta', '--E', '4e8', '--fluence', '1', '--dt', '50', stdout=io.StringIO())
