import io
import json
import math
from pathlib import Path
import tempfile

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, tag

from core.grid import Grid3
from core.spinors import SpinorOrbitalSet, gaussian_packet, free_packet_width
from femto_pauli import settings
from field_solvers.assemble import assemble_potentials
from hamiltonian.pulse import ExternalFieldSample
from hamiltonian.terms import COH_TERMS, TermToggles
from propagator.integrator import Propagator, refresh_fields
from propagator.models import SimulationRun
from propagator.observables import Observables, columns, read_csv
from propagator.runner import run
from propagator.scenario import SCFConfig, Scenario, load_scenario, stability_limit
from propagator.snapshots import load_manifest, orbitals_from_snapshot, read_snapshot
from sources.densities import build_sources, density_rate
from utils.errors import ConfigurationError, MissingSnapshotError, StabilityError


def scenario_payload(**overrides):
    payload = {
        'name': 'packet',
        'grid': {'n': 32, 'box': 32},
        'orbitals': [{'center': [0, 0, 0], 'width': 2.0, 'spin': '+x'}],
        'dt': 0.1,
        't_end': 1.0,
        'terms': {'preset': 'none'},
        'outputs': {'every': 5},
    }
    payload.update(overrides)
    return payload


DRIVE = {'A0': 0.5, 'wavelength': 15117.8, 'envelope': 'flat', 'polarization': [0, 1, 0]}


def two_orbitals(grid, width=1.5):
    return SpinorOrbitalSet.from_fields([
        gaussian_packet(grid, (-1.5, 0, 0), width, spin='+x'),
        gaussian_packet(grid, (1.5, 0, 0), width, momentum=(0, 0.3, 0), spin='up'),
    ])


def trajectory(result, key):
    return np.array([row.as_row()[key] for row in result.observables])


class ScenarioTests(SimpleTestCase):

    def test_resolves_units(self):
        scenario = Scenario.from_dict(scenario_payload(
            grid={'n': 32, 'box': '32 bohr'},
            dt='2.4189 as',
            pulse={'E0': '4e8 V/m', 'wavelength': '800nm', 'duration': '5fs', 'envelope': 'sin2'},
            static_field=[0, 0, '0.1 T'],
        ))
        self.assertEqual(scenario.grid.box, (32.0, 32.0, 32.0))
        self.assertAlmostEqual(scenario.dt, 0.1, places=4)
        self.assertAlmostEqual(scenario.pulse.wavelength, 15117.8, delta=0.5)
        self.assertAlmostEqual(scenario.static_field[2], 0.1 / 235051.757, delta=1e-9)
        self.assertEqual(scenario.steps, 10)

    def test_stability_bound(self):
        grid = Grid3.cubic(32, 32.0)
        limit = stability_limit(grid, Scenario.from_dict(scenario_payload()).constants)
        self.assertAlmostEqual(limit, 2.0 * math.sqrt(2.0) / (1.5 * math.pi ** 2), places=10)
        self.assertLess(limit, settings.RK4_STABILITY_CONSTANT)
        with self.assertRaises(ConfigurationError):
            Scenario.from_dict(scenario_payload(dt=0.195))
        Scenario.from_dict(scenario_payload(dt=0.19, t_end=0.19))

    def test_resolution_guard(self):
        with self.assertRaises(ConfigurationError):
            Scenario.from_dict(scenario_payload(orbitals=[{'center': [0, 0, 0], 'width': 1.5}]))

    def test_horizon(self):
        self.assertEqual(Scenario.from_dict(scenario_payload(t_end=0)).steps, 0)
        with self.assertRaises(ConfigurationError):
            Scenario.from_dict(scenario_payload(t_end=0.05))
        with self.assertRaises(ConfigurationError):
            Scenario.from_dict(scenario_payload(dt=0))

    def test_rejects_bad_input(self):
        with self.assertRaises(ConfigurationError):
            Scenario.from_dict(scenario_payload(laser={}))
        with self.assertRaises(ConfigurationError):
            Scenario.from_dict(scenario_payload(self_interaction='partial'))
        with self.assertRaises(ConfigurationError):
            Scenario.from_dict(scenario_payload(orbitals=[]))
        with self.assertRaises(ConfigurationError):
            Scenario.from_dict(scenario_payload(outputs={'quantities': ['wigner']}))
        with self.assertRaises(ConfigurationError):
            Scenario.from_dict(scenario_payload(constants={'system': 'si'}))
        with self.assertRaises(ConfigurationError):
            load_scenario('/nonexistent/scenario.json')

    def test_load_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'free.json'
            payload = scenario_payload()
            payload.pop('name')
            path.write_text(json.dumps(payload))
            self.assertEqual(load_scenario(path).name, 'free')
            broken = Path(tmp) / 'broken.json'
            broken.write_text('{"grid": ')
            with self.assertRaises(ConfigurationError):
                load_scenario(broken)

    def test_shipped_scenarios_load(self):
        paths = sorted((settings.BASE_DIR / 'scenarios').glob('*.json'))
        self.assertTrue(paths)
        for path in paths:
            scenario = load_scenario(path)
            self.assertGreater(len(scenario.orbitals), 0, msg=path.name)


class RefreshFieldsTests(SimpleTestCase):

    def setUp(self):
        self.grid = Grid3.cubic(16, 12.0)
        self.sample = ExternalFieldSample.zero()

    def test_single_orbital_sees_nothing(self):
        orbitals = SpinorOrbitalSet.from_fields([gaussian_packet(self.grid, (0, 0, 0), 1.5)])
        fields = refresh_fields(orbitals, self.sample)
        self.assertEqual(len(fields.potentials), 1)
        self.assertTrue(fields.potentials[0].is_zero())

    def test_exclusion(self):
        orbitals = two_orbitals(self.grid)
        fields = refresh_fields(orbitals, self.sample)
        other = assemble_potentials(build_sources(orbitals.subset([1])))
        self.assertTrue(np.allclose(fields.potentials[0].phi0.data, other.phi0.data, rtol=1e-12, atol=0.0))
        self.assertTrue(np.allclose(fields.potentials[0].a2_orb.data, other.a2_orb.data, rtol=1e-12, atol=1e-300))
        self.assertFalse(np.allclose(fields.potentials[0].phi0.data, fields.potentials[1].phi0.data))

    def test_include_is_linear(self):
        phi = gaussian_packet(self.grid, (0.5, 0, 0), 1.5, momentum=(0.2, 0, 0), spin='+y')
        single = refresh_fields(SpinorOrbitalSet.from_fields([phi]), self.sample, self_interaction='include')
        triple = refresh_fields(SpinorOrbitalSet.from_fields([phi, phi, phi]), self.sample, self_interaction='include')
        self.assertEqual(len(triple.potentials), 3)
        atol = 1e-12 * np.max(np.abs(single.potentials[0].phi0.data))
        for name in ('phi0', 'phi2_orb', 'phi2_spin', 'a2_orb', 'a2_spin', 'curl_a2_spin'):
            expected = 3.0 * getattr(single.potentials[0], name).data
            actual = getattr(triple.potentials[2], name).data
            self.assertTrue(np.allclose(actual, expected, rtol=1e-10, atol=atol), msg=name)

    def test_no_potentials_when_only_external_terms(self):
        fields = refresh_fields(two_orbitals(self.grid), self.sample, needs_potentials=False)
        self.assertEqual(fields.potentials, [None, None])


class IntegratorTests(SimpleTestCase):

    def setUp(self):
        self.grid = Grid3.cubic(32, 32.0)

    def propagate(self, propagator, phi, dt, steps):
        state = propagator.initial_state(SpinorOrbitalSet.from_fields([phi]))
        for _ in range(steps):
            state = propagator.step(state, dt)
        return state

    def test_free_packet(self):
        phi = gaussian_packet(self.grid, (-2.0, 0, 0), 2.0, momentum=(0.5, 0, 0))
        propagator = Propagator(self.grid, toggles=TermToggles.none())
        state = self.propagate(propagator, phi, 0.1, 40)
        rho = state.orbitals.density()
        x = self.grid.coordinates[0]
        dV = self.grid.dV
        center = float(np.sum(x * rho) * dV)
        spread = float(np.sum((x - center) ** 2 * rho) * dV)
        self.assertAlmostEqual(state.time, 4.0)
        self.assertAlmostEqual(center, 0.0, delta=1e-4)
        self.assertAlmostEqual(spread / free_packet_width(2.0, 4.0) ** 2, 1.0, delta=1e-4)
        self.assertAlmostEqual(float(state.orbitals.norms()[0]), 1.0, delta=1e-8)

    def test_larmor_precession(self):
        B0 = 0.05
        phi = gaussian_packet(self.grid, (0, 0, 0), 2.0, spin='+x')
        propagator = Propagator(self.grid, static_field=(0, 0, B0), toggles=TermToggles.only('zeeman-ext'))
        state = self.propagate(propagator, phi, 0.1, 100)
        m = state.orbitals.magnetizations()[0]
        angle = B0 * state.time
        self.assertTrue(np.allclose(m, [math.cos(angle), math.sin(angle), 0.0], atol=1e-6))

    def test_fourth_order_convergence(self):
        phi = gaussian_packet(self.grid, (0, 0, 0), 2.0, spin='+x')
        propagator = Propagator(self.grid, static_field=(0, 0, 4.0), toggles=TermToggles.only('zeeman-ext'))
        finals = [self.propagate(propagator, phi, 0.1 / 2 ** k, 10 * 2 ** k).orbitals.data for k in range(3)]
        ratio = np.linalg.norm(finals[0] - finals[1]) / np.linalg.norm(finals[1] - finals[2])
        self.assertGreater(ratio, 13.0)
        self.assertLess(ratio, 19.0)

    def test_stability_abort(self):
        grid = Grid3.cubic(8, 8.0)
        phi = gaussian_packet(grid, (0, 0, 0), 2.0, spin='up')
        propagator = Propagator(grid, static_field=(100.0, 0, 0), toggles=TermToggles.only('zeeman-ext'))
        state = propagator.initial_state(SpinorOrbitalSet.from_fields([phi]))
        with self.assertRaises(StabilityError) as ctx:
            propagator.step(state, 0.1)
        self.assertAlmostEqual(ctx.exception.context['time'], 0.1)
        self.assertEqual(ctx.exception.exit_code, 3)

    def test_self_consistency_modes_agree(self):
        grid = Grid3.cubic(16, 12.0)
        orbitals = two_orbitals(grid)
        toggles = TermToggles.leading_order()
        finals = []
        for scf in (SCFConfig(), SCFConfig(refresh_every_substep=True), SCFConfig(fixed_point_iters=5, tol=1e-10)):
            propagator = Propagator(grid, toggles=toggles, scf=scf)
            state = propagator.initial_state(orbitals)
            for _ in range(5):
                state = propagator.step(state, 0.05)
            finals.append(state.orbitals.data)
        scale = np.max(np.abs(finals[0]))
        self.assertLess(np.max(np.abs(finals[0] - finals[1])), 1e-4 * scale)
        self.assertLess(np.max(np.abs(finals[1] - finals[2])), 1e-4 * scale)
        self.assertGreater(np.max(np.abs(finals[0] - finals[1])), 0.0)


class ObservablesTests(SimpleTestCase):

    def row(self, norm, mx):
        return Observables(
            step=0, time=0.0, norms=np.array([norm]), magnetizations=np.array([[mx, 0.0, 0.0]]),
            dipole=np.zeros(3), kinetic=0.0, energies={}, rest_mass_energy=0.0,
        )

    def test_magnetization_bounded_by_squared_norm(self):
        norm = 1.0 - 1e-8
        self.assertEqual(self.row(norm, norm ** 2).violations(), [])
        self.assertEqual(self.row(1.0, 1.0 + 1e-12).violations(), [])
        problems = self.row(norm, norm).violations()
        self.assertEqual(len(problems), 1)
        self.assertIn('exceeds its squared norm', problems[0])

    def test_norm_bound(self):
        self.assertEqual(len(self.row(1.0 + 1e-5, 0.0).violations()), 1)
        self.assertEqual(len(self.row(0.0, 0.0).violations()), 1)


class RunTests(SimpleTestCase):

    def test_zero_horizon(self):
        result = run(Scenario.from_dict(scenario_payload(t_end=0)))
        self.assertEqual(len(result.observables), 1)
        self.assertEqual(result.status, 'completed')
        self.assertIsNotNone(result.observables[0].continuity_residual)
        self.assertEqual(result.final_state.step, 0)

    def test_free_run_is_stationary(self):
        scenario = Scenario.from_dict(scenario_payload())
        result = run(scenario)
        self.assertEqual([row.step for row in result.observables], [0, 5, 10])
        for key in ('norm_0', 'mx_0', 'my_0', 'mz_0', 'kinetic', 'total_expectation'):
            values = trajectory(result, key)
            self.assertLess(np.max(np.abs(values - values[0])), 1e-8, msg=key)
        self.assertAlmostEqual(result.observables[0].rest_mass_energy, scenario.constants.c ** 2)
        self.assertAlmostEqual(result.observables[0].mean_field_energy, result.observables[0].kinetic)

    def test_continuity_residual(self):
        payload = scenario_payload(
            orbitals=[{'center': [0, 0, 0], 'width': 2.0, 'momentum': [0.5, 0, 0]}],
            outputs={'every': 1},
        )
        result = run(Scenario.from_dict(payload))
        residuals = [row.continuity_residual for row in result.observables]
        self.assertEqual(len(residuals), 11)
        self.assertTrue(all(r < 1e-6 for r in residuals))

    def test_continuity_on_driven_trajectory(self):
        payload = scenario_payload(
            grid={'n': 32, 'box': 16},
            orbitals=[{'center': [0, 0, 0], 'width': 1.0, 'momentum': [0.4, 0, 0], 'spin': 'up'}],
            pulse=DRIVE,
            dt=0.04,
            t_end=0.2,
            terms={'preset': 'leading-order'},
            self_interaction='include',
            outputs={'every': 1},
        )
        result = run(Scenario.from_dict(payload))
        self.assertEqual([row.step for row in result.observables], [0, 1, 2, 3, 4, 5])
        self.assertGreater(np.max(np.abs(trajectory(result, 'diamagnetic-AA'))), 0.0)
        for row in result.observables:
            self.assertLessEqual(row.continuity_residual, 1e-6, row.step)

    def test_centred_difference_approaches_density_rate(self):
        payload = scenario_payload(
            grid={'n': 32, 'box': 16},
            orbitals=[{'center': [0, 0, 0], 'width': 1.0, 'momentum': [0.4, 0, 0], 'spin': 'up'}],
            pulse=DRIVE,
            dt=0.04,
            terms={'preset': 'none', 'only': ['dipole-pA', 'diamagnetic-AA']},
        )
        scenario = Scenario.from_dict(payload)
        propagator = Propagator.from_scenario(scenario)

        def discrepancy(dt):
            start = propagator.initial_state(scenario.initial_orbitals())
            middle = propagator.step(start, dt)
            end = propagator.step(middle, dt)
            centred = (end.orbitals.density() - start.orbitals.density()) / (2.0 * dt)
            h_phi = propagator.hamiltonian(middle.orbitals.data, middle.fields, middle.fields.sample)
            exact = density_rate(middle.orbitals, h_phi, scenario.constants)
            return np.linalg.norm(centred - exact) / np.linalg.norm(exact)

        coarse, fine = discrepancy(0.04), discrepancy(0.02)
        self.assertLess(coarse, 1e-2)
        self.assertGreater(coarse / fine, 2.5)

    def test_polarized_driven_run_has_no_warnings(self):
        payload = scenario_payload(
            grid={'n': 32, 'box': 16},
            orbitals=[{'center': [0, 0, 0], 'width': 1.0, 'spin': '+x'}],
            pulse=DRIVE,
            dt=0.04,
            t_end=0.4,
            terms={'preset': 'none', 'only': ['dipole-pA', 'diamagnetic-AA']},
            outputs={'every': 1},
        )
        result = run(Scenario.from_dict(payload))
        self.assertEqual(result.warnings, [])
        self.assertEqual(result.manifest['warnings'], [])
        for row in result.observables:
            self.assertEqual(row.warnings, [])
            self.assertAlmostEqual(np.linalg.norm(row.magnetizations[0]), row.norms[0] ** 2, places=9)


    def test_coherent_terms_act_only_with_field(self):
        def magnetization(A0, only):
            payload = scenario_payload(
                grid={'n': 16, 'box': 12},
                orbitals=[
                    {'center': [-1.5, 0, 0], 'width': 1.5, 'spin': '+x'},
                    {'center': [1.5, 0, 0], 'width': 1.5, 'spin': 'up'},
                ],
                pulse={'A0': A0, 'wavelength': 15117.8, 'envelope': 'flat', 'polarization': [0, 1, 0]},
                dt=0.05,
                t_end=0.5,
                terms={'preset': 'none', 'only': only},
                outputs={'every': 2},
            )
            result = run(Scenario.from_dict(payload))
            return np.stack([trajectory(result, k) for k in ('mx_0', 'my_0', 'mz_0')])

        coherent = [t.value for t in COH_TERMS]
        off = magnetization(1.0, [])
        full = np.max(np.abs(magnetization(1.0, coherent) - off))
        half = np.max(np.abs(magnetization(0.5, coherent) - off))
        self.assertGreater(full, 1e-10)
        self.assertLess(half, full)
        self.assertTrue(np.array_equal(magnetization(0.0, coherent), magnetization(0.0, [])))

    def test_energy_conservation(self):
        payload = scenario_payload(
            grid={'n': 36, 'box': 18},
            orbitals=[{'center': [0, 0, 0], 'width': 1.0, 'momentum': [0.3, 0, 0], 'spin': '+z'}],
            dt=0.02,
            t_end=0.5,
            terms={'preset': 'leading-order'},
            self_interaction='include',
            scf={'refresh_every_substep': True},
            outputs={'every': 25},
        )
        result = run(Scenario.from_dict(payload))
        energies = trajectory(result, 'mean_field_energy')
        self.assertNotEqual(trajectory(result, 'hartree')[0], 0.0)
        self.assertLess(abs(energies[-1] - energies[0]), 1e-6 * abs(energies[0]))

    def test_files(self):
        payload = scenario_payload(outputs={'every': 5, 'snapshot_every': 5, 'quantities': ['orbitals', 'rho0', 'phi0']})
        with tempfile.TemporaryDirectory() as tmp:
            result = run(Scenario.from_dict(payload), tmp)
            rows = read_csv(Path(tmp) / 'observables.csv')
            self.assertEqual(list(rows[0]), columns(1))
            self.assertEqual(len(rows), 3)
            manifest = load_manifest(tmp)
            self.assertEqual(manifest['status'], 'completed')
            self.assertEqual(manifest['grid']['n'], [32, 32, 32])
            self.assertTrue(manifest['deviations'])
            orbitals, time, step = orbitals_from_snapshot(manifest)
            self.assertEqual(step, 10)
            self.assertAlmostEqual(time, 1.0)
            self.assertTrue(np.array_equal(orbitals.data, result.final_state.orbitals.data))
            rho, entry = read_snapshot(manifest, 'rho0', 5)
            self.assertEqual(entry['dtype'], '<f8')
            self.assertEqual(rho.shape, (32, 32, 32))
            with self.assertRaises(MissingSnapshotError):
                read_snapshot(manifest, 'rho0', 3)

    def test_abort_is_recorded(self):
        payload = scenario_payload(
            orbitals=[{'center': [0, 0, 0], 'width': 2.0, 'spin': 'up'}],
            static_field=[100.0, 0, 0],
            terms={'preset': 'none', 'only': ['zeeman-ext']},
        )
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(StabilityError):
                run(Scenario.from_dict(payload), tmp)
            manifest = load_manifest(tmp)
            self.assertEqual(manifest['status'], 'aborted')
            self.assertEqual(manifest['error']['category'], 'stability')


@tag('slow')
class LongRunTests(SimpleTestCase):
    '''1000 RK4 steps at 32**3 with every term on and a static field.'''

    def test_norm_and_energy_are_conserved(self):
        payload = scenario_payload(
            grid={'n': 32, 'box': 16},
            orbitals=[
                {'center': [-1.5, 0, 0], 'width': 1.2, 'spin': '+x'},
                {'center': [1.5, 0, 0], 'width': 1.2, 'momentum': [0, 0.3, 0], 'spin': 'up'},
            ],
            static_field=[0, 0, 0.05],
            dt=0.02,
            t_end=20.0,
            terms={'preset': 'all'},
            scf={'refresh_every_substep': True},
            outputs={'every': 100},
        )
        scenario = Scenario.from_dict(payload)
        self.assertEqual(scenario.steps, 1000)
        result = run(scenario)
        self.assertEqual(result.final_state.step, 1000)
        for key in ('norm_0', 'norm_1'):
            self.assertLessEqual(np.max(np.abs(trajectory(result, key) - 1.0)), 1e-6, key)
        energies = trajectory(result, 'mean_field_energy')
        self.assertNotEqual(trajectory(result, 'hartree')[0], 0.0)
        self.assertLessEqual(np.max(np.abs(energies - energies[0])), 1e-6 * abs(energies[0]))


class SimulateCommandTests(TestCase):

    def write(self, directory, payload):
        path = Path(directory) / f'{payload["name"]}.json'
        path.write_text(json.dumps(payload))
        return str(path)

    def test_records_run(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = self.write(tmp, scenario_payload(t_end=0.2, outputs={'every': 1}))
            call_command('simulate', path, '--output', str(Path(tmp) / 'out'), stdout=io.StringIO())
            record = SimulationRun.objects.get()
            self.assertTrue(record.run_id.startswith('RUN-'))
            self.assertEqual(record.status, 'completed')
            self.assertEqual(record.steps, 2)
            self.assertEqual(record.manifest['run_id'], record.run_id)
            self.assertTrue(record.is_finished)
            self.assertGreaterEqual(record.wall_time, 0.0)
            self.assertEqual(record.output_dir, str(Path(tmp) / 'out'))
            self.assertTrue((Path(tmp) / 'out' / 'observables.csv').exists())

    def test_run_ids_increase(self):
        first = SimulationRun.objects.create(scenario_name='a', output_dir='x')
        second = SimulationRun.objects.create(scenario_name='b', output_dir='y')
        self.assertEqual(int(second.run_id.split('-')[1]), int(first.run_id.split('-')[1]) + 1)

    def test_lifecycle(self):
        record = SimulationRun.objects.create(scenario_name='a', output_dir='x')
        self.assertFalse(record.is_finished)
        self.assertIsNone(record.wall_time)
        record.scenario_name = 'not saved'
        record.mark_finished('failed', final_time=0.5, error=StabilityError('drift'))
        record.refresh_from_db()
        self.assertEqual(record.scenario_name, 'a')
        self.assertEqual(record.status, 'failed')
        self.assertEqual(record.error_category, 'stability')
        self.assertEqual(record.final_time, 0.5)
        self.assertTrue(record.is_finished)
        self.assertGreaterEqual(record.finished_at, record.created_at)

    def test_no_record(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = self.write(tmp, scenario_payload(t_end=0))
            call_command('simulate', path, '--output', str(Path(tmp) / 'out'), '--no-record',
                         stdout=io.StringIO())
            self.assertFalse(SimulationRun.objects.exists())

    def test_errors_carry_category(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('simulate', '/nonexistent/scenario.json', '--no-record')
        self.assertTrue(str(ctx.exception).startswith('[configuration]'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_abort_marks_record(self):
        payload = scenario_payload(
            orbitals=[{'center': [0, 0, 0], 'width': 2.0, 'spin': 'up'}],
            static_field=[100.0, 0, 0],
            terms={'preset': 'none', 'only': ['zeeman-ext']},
        )
        with tempfile.TemporaryDirectory() as tmp:
            path = self.write(tmp, payload)
            with self.assertRaises(CommandError) as ctx:
                call_command('simulate', path, '--output', str(Path(tmp) / 'out'))
            self.assertEqual(ctx.exception.returncode, 3)
            record = SimulationRun.objects.get()
            self.assertEqual(record.status, 'aborted')
            self.assertEqual(record.error_category, 'stability')
            self.assertIsNotNone(record.finished_at)
