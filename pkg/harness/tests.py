import json
import math
import tempfile
from contextlib import contextmanager
from io import StringIO
from pathlib import Path

from django.conf import settings
from django.contrib.auth.models import User
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings
from django.urls import reverse

from .checks import (
    SUITES, check_area_bookkeeping, check_concentration, check_constant_scenario, check_determinism,
    check_ramp_robustness, check_shrinking_circle,
)
from .exceptions import ScenarioError, UnknownSuiteError
from .exporters import format_cell, output_prefix, suffixed, to_csv, to_json
from .forms import load_scenario, parse_scenario
from .management.commands.extlab import parse_lambdas
from .models import CheckResult, ScenarioRun
from .reports import CheckOutcome, CheckReport
from .scenario import run_scenario
from .suite import check_suite, report_path, suite_tasks

SCENARIO_DIR = Path(settings.BASE_DIR) / 'scenarios'


def scenario(**changes):
    document = {
        'version': 'v1',
        'name': 'small_circle',
        'background': 't3_flat',
        'curve': {'kind': 'circle', 'r': 1.0},
        'N': 64,
        'interval': [0.0, 0.25],
        'samples': 6,
        'checks': ['circle_length_oracle'],
    }
    document.update(changes)
    return {key: value for key, value in document.items() if value is not None}


@contextmanager
def temporary_output():
    """Sends every scenario and report file into a fresh temporary directory."""
    with tempfile.TemporaryDirectory() as directory:
        root = Path(directory)
        with override_settings(EXTLAB=dict(settings.EXTLAB, OUTPUT_PREFIX=str(root), REPORT_DIR=root / 'reports')):
            yield root


class ExporterTests(SimpleTestCase):
    def test_floats_keep_seventeen_digits(self):
        self.assertEqual(format_cell(0.1), '0.10000000000000001')
        self.assertEqual(float(format_cell(math.pi)), math.pi)
        self.assertEqual(format_cell(True), 'true')
        self.assertEqual(format_cell(None), '')

    def test_csv_header_and_rows(self):
        lines = to_csv(['t', 'L'], [[0.0, 2.0], {'t': 0.5, 'L': 1.0}]).splitlines()
        self.assertEqual(lines, ['t,L', '0,2', '0.5,1'])

    def test_json_sorts_keys_and_spells_non_finite(self):
        text = to_json({'b': float('nan'), 'a': [float('inf'), 1.5]})
        self.assertLess(text.index('"a"'), text.index('"b"'))
        self.assertEqual(json.loads(text), {'a': ['inf', 1.5], 'b': 'nan'})
        self.assertTrue(text.endswith('\n'))

    def test_environment_prefix_wins(self):
        with override_settings(EXTLAB=dict(settings.EXTLAB, OUTPUT_PREFIX='/tmp/extlab')):
            self.assertEqual(output_prefix('cap', 'out/elsewhere'), Path('/tmp/extlab/cap'))
        with override_settings(EXTLAB=dict(settings.EXTLAB, OUTPUT_PREFIX='')):
            self.assertEqual(output_prefix('cap', ''), Path('out/cap'))
            self.assertEqual(output_prefix('cap', 'runs/cap1'), Path('runs/cap1'))
        self.assertEqual(suffixed(Path('runs/cap1'), 'monitors.csv'), Path('runs/cap1_monitors.csv'))


class ReportTests(SimpleTestCase):
    def test_runtime_stays_out_of_the_report(self):
        report = CheckReport('csf', [CheckOutcome('a', True, 0.1, 0.5, runtime=3.0), CheckOutcome('b', False)])
        self.assertFalse(report.passed)
        self.assertEqual(report.exit_code, 1)
        self.assertEqual([check.name for check in report.failed], ['b'])
        self.assertNotIn('runtime', json.dumps(report.as_dict()))
        self.assertEqual(report.as_dict()['checks'][0]['status'], 'pass')


class ScenarioFormTests(SimpleTestCase):
    def test_bundled_scenarios_are_valid(self):
        paths = sorted(SCENARIO_DIR.glob('*.json'))
        self.assertTrue(paths)
        for path in paths:
            with self.subTest(path=path.name):
                cfg = load_scenario(path)
                self.assertEqual(cfg.name, path.stem)

    def test_lookup_by_name(self):
        cfg = load_scenario('shrinking_circle')
        self.assertEqual(cfg.N, 256)
        self.assertEqual(cfg.interval, (0.0, 0.375))
        self.assertEqual(cfg.checks, ('circle_length_oracle', 'length_identity', 'growth_envelope'))

    def test_lambda_key(self):
        cfg = parse_scenario(scenario(**{'lambda': 0.1, 'checks': ['ramp_positive']}))
        self.assertEqual(cfg.lam, 0.1)
        self.assertEqual(cfg.as_dict()['lambda'], 0.1)
        with self.assertRaisesMessage(ScenarioError, 'Unknown scenario key "lam"'):
            parse_scenario(scenario(lam=0.1))

    def test_family_key(self):
        cfg = load_scenario('cap_family')
        self.assertEqual([spec['kind'] for spec in cfg.family], ['constant', 'cap_circle', 'cap_circle'])
        self.assertEqual(cfg.as_dict()['family'][2], {'kind': 'cap_circle', 'phi': 0.15})
        self.assertNotIn('family', parse_scenario(scenario()).as_dict())

    def test_rejected_documents(self):
        cases = {
            'too_few_vertices': scenario(N=8),
            'unknown_key': scenario(colour='red'),
            'unknown_check': scenario(checks=['no_such_check']),
            'unknown_background': scenario(background='h3'),
            'unknown_curve': scenario(curve={'kind': 'trefoil'}),
            'bad_curve_parameter': scenario(curve={'kind': 'circle', 'radius': 1.0}),
            'reversed_interval': scenario(interval=[0.2, 0.1]),
            'interval_leaves_domain': scenario(background='s3_shrinking', curve={'kind': 'great_circle'},
                                               interval=[0.0, 0.3], checks=[]),
            'lambda_out_of_range': scenario(**{'lambda': 1.5, 'checks': []}),
            'ramp_check_without_lambda': scenario(checks=['ramp_positive']),
            'oracle_with_lambda': scenario(**{'lambda': 0.1}),
            'fixed_parameter_check_with_redistribution': scenario(checks=['speed_identity']),
            'oracle_off_the_torus': scenario(background='s3_shrinking', curve={'kind': 'great_circle'},
                                             interval=[0.0, 0.1]),
            'missing_version': scenario(version=None),
            'wrong_version': scenario(version='v2'),
            'family_without_lambda': scenario(family=[{'kind': 'circle', 'r': 0.5}], checks=[]),
            'family_of_unknown_curves': scenario(family=[{'kind': 'trefoil'}], checks=[], **{'lambda': 0.1}),
            'family_not_a_list': scenario(family={'kind': 'circle'}, checks=[], **{'lambda': 0.1}),
        }
        for label, document in cases.items():
            with self.subTest(label):
                with self.assertRaises(ScenarioError):
                    parse_scenario(document)

    def test_not_an_object(self):
        with self.assertRaises(ScenarioError):
            parse_scenario(['name', 'circle'])

    def test_missing_file(self):
        with self.assertRaises(ScenarioError):
            load_scenario('no/such/scenario.json')


class ParseLambdasTests(SimpleTestCase):
    def test_decreasing_list(self):
        self.assertEqual(parse_lambdas('0.2,0.1,0.05'), [0.2, 0.1, 0.05])

    def test_rejections(self):
        for text in ('0.2,0.1', '0.1,0.2,0.05', '0.2,0.1,0.1', '1.5,0.1,0.05', 'a,b,c'):
            with self.subTest(text):
                with self.assertRaises(ScenarioError):
                    parse_lambdas(text)


class RunScenarioTests(SimpleTestCase):
    def test_shrinking_circle_matches_oracle(self):
        with temporary_output() as out:
            result = run_scenario(parse_scenario(scenario()))
            self.assertEqual(result.exit_code, 0)
            self.assertEqual(result.summary['status'], 'completed')
            names = sorted(Path(path).name for path in result.files)
            self.assertEqual(names, ['small_circle_monitors.csv', 'small_circle_summary.json'])
            summary = json.loads((out / 'small_circle_summary.json').read_text())
            self.assertEqual(summary['checks'][0]['status'], 'pass')
            rows = (out / 'small_circle_monitors.csv').read_text().splitlines()
            self.assertEqual(rows[0], 't,L,theta,k2int,k_max,status')
            self.assertEqual(len(rows), 1 + 7)
        self.assertAlmostEqual(result.summary['final_length'], 2 * math.pi * math.sqrt(0.5), delta=5e-3 * 4.5)

    def test_failed_check_sets_exit_code(self):
        # A 16-gon is already 0.6% shorter than its circle.
        with temporary_output():
            result = run_scenario(parse_scenario(scenario(N=16, interval=[0.0, 0.01], samples=2)))
        self.assertEqual(result.exit_code, 1)
        self.assertFalse(result.checks[0].passed)

    def test_ramp_scenario_writes_ramp_csv(self):
        cfg = parse_scenario(scenario(
            name='helix', curve={'kind': 'circle', 'r': 0.5}, interval=[0.0, 0.01], N=32, samples=3,
            redistribute=False, checks=['ramp_positive', 'projection_monotone'], **{'lambda': 0.1},
        ))
        with temporary_output() as out:
            result = run_scenario(cfg)
            rows = (out / 'helix_ramp.csv').read_text().splitlines()
        self.assertEqual(result.exit_code, 0)
        self.assertEqual(rows[0], 't,u_min,ku_max,ramp_length,projected_length,min_separation')
        self.assertEqual(len(rows), 1 + 4)
        self.assertEqual(result.summary['ramp']['lambda'], 0.1)

    def test_snapshots(self):
        with temporary_output() as out:
            result = run_scenario(parse_scenario(scenario(interval=[0.0, 0.01], snapshot_stride=5, checks=[])))
            snapshots = sorted((out / 'small_circle_snapshots').glob('*.txt'))
            self.assertTrue(snapshots)
            self.assertEqual(len(snapshots[0].read_text().splitlines()), 1 + 64)
        self.assertEqual(result.exit_code, 0)

    def test_constant_loop_stays_put(self):
        outcome = check_constant_scenario()
        self.assertTrue(outcome.passed, outcome.detail)

    def test_outputs_are_byte_identical(self):
        outcome = check_determinism()
        self.assertTrue(outcome.passed, outcome.detail)


# One cheap check from every suite, including checks with several outcomes.
CHEAP_CHECKS = [
    'ricci_flow_residual', 'scalar_bound_equality', 'product_with_circle',
    'curvature_inequality',
    'lambda_convergence',
    'cap_sharpness', 'gauss_bonnet', 'extinction_monotone',
    'constant_scenario',
]


class CheckSuiteTests(SimpleTestCase):
    def test_unknown_suite(self):
        with self.assertRaises(UnknownSuiteError):
            suite_tasks('astrology')

    def test_all_covers_every_suite(self):
        suites = {suite for suite, _ in suite_tasks('all')}
        self.assertEqual(suites, {'geometry', 'csf', 'ramp', 'comparison', 'harness'})

    def test_geometry_report_is_reproducible(self):
        with temporary_output():
            first = check_suite('geometry')
            text = report_path('geometry').read_text()
            second = check_suite('geometry', jobs=2)
            self.assertEqual(report_path('geometry').read_text(), text)
        self.assertTrue(first.passed, [check.summary for check in first.failed])
        self.assertEqual([c.name for c in first.checks], [c.name for c in second.checks])

    def test_every_suite_report_is_reproducible(self):
        with temporary_output():
            serial = check_suite('all', only=CHEAP_CHECKS)
            text = report_path('all').read_text()
            parallel = check_suite('all', jobs=3, only=CHEAP_CHECKS)
            self.assertEqual(report_path('all').read_text(), text)
        self.assertEqual({check.suite for check in serial.checks}, set(SUITES))
        self.assertEqual([c.name for c in serial.checks], [c.name for c in parallel.checks])
        self.assertTrue(serial.passed, [check.summary for check in serial.failed])

    def test_selection_keeps_suite_order(self):
        tasks = suite_tasks('comparison', only=['gauss_bonnet', 'cap_sharpness'])
        self.assertEqual(tasks, [('comparison', 0), ('comparison', 1)])
        with self.assertRaises(UnknownSuiteError):
            suite_tasks('geometry', only=['gauss_bonnet'])


class CheckTests(SimpleTestCase):
    def test_shrinking_circle_over_budget_fails(self):
        with override_settings(EXTLAB=dict(settings.EXTLAB, RUNTIME_BUDGET=0.0)):
            outcome = check_shrinking_circle()
        self.assertFalse(outcome.passed)
        self.assertLessEqual(outcome.measured, 5e-3)
        self.assertEqual(outcome.detail, 'completed, over the 0s budget')

    def test_concentration_report_is_written(self):
        with temporary_output() as out:
            outcome = check_concentration()
            report = json.loads((out / 'reports' / 'concentration.json').read_text())
        self.assertTrue(outcome.passed, outcome.detail)
        self.assertEqual(report['I_B'][0][0], 0.0)
        self.assertEqual(report['status'], 'completed')
        self.assertAlmostEqual(report['swept_area'], 2 * math.pi * 0.45, delta=2e-2)

    def test_area_bookkeeping(self):
        outcomes = check_area_bookkeeping()
        self.assertEqual([outcome.name for outcome in outcomes], ['swept_area', 'disk_area_rate'])
        for outcome in outcomes:
            self.assertTrue(outcome.passed, outcome.summary)

    def test_ramp_robustness(self):
        outcome = check_ramp_robustness()
        self.assertTrue(outcome.passed, outcome.detail)
        self.assertIn('direct curvature_blowup after 0 steps', outcome.detail)


class ExtlabCommandTests(TestCase):
    def write_config(self, directory, document):
        path = Path(directory) / f'{document.get("name", "config")}.json'
        path.write_text(json.dumps(document))
        return str(path)

    def test_run_and_record(self):
        with temporary_output() as out:
            path = self.write_config(out, scenario())
            stdout = StringIO()
            call_command('extlab', 'run', path, '--record', stdout=stdout)
        self.assertIn('Scenario "small_circle" completed', stdout.getvalue())
        run = ScenarioRun.objects.get()
        self.assertEqual(run.slug, 'small_circle')
        self.assertEqual(run.exit_code, 0)
        self.assertEqual(run.config['checks'], ['circle_length_oracle'])
        self.assertEqual(list(run.checks.values_list('name', 'passed')), [('circle_length_oracle', True)])

    def test_bad_config_exits_with_2(self):
        with temporary_output() as out:
            path = self.write_config(out, scenario(N=4))
            with self.assertRaises(CommandError) as ctx:
                call_command('extlab', 'run', path, stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)

    def test_failed_check_exits_with_1(self):
        with temporary_output() as out:
            path = self.write_config(out, scenario(N=16, interval=[0.0, 0.01], samples=2))
            with self.assertRaises(CommandError) as ctx:
                call_command('extlab', 'run', path, stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 1)

    def test_bad_lambda_list_exits_with_2(self):
        with temporary_output() as out:
            path = self.write_config(out, scenario(checks=[]))
            with self.assertRaises(CommandError) as ctx:
                call_command('extlab', 'sweep', path, '--lambda', '0.1,0.2', stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)

    def test_unknown_suite_exits_with_2(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('extlab', 'check', 'astrology', stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)

    def test_family_writes_its_report(self):
        with temporary_output() as out:
            stdout = StringIO()
            call_command('extlab', 'family', 'cap_family', stdout=stdout)
            rows = json.loads((out / 'cap_family_family.json').read_text())
        self.assertEqual([row['verdict'] for row in rows], ['short', 'width_bounded', 'short'])
        self.assertEqual(set(rows[0]), {'curve_id', 'verdict', 'final_L', 'bound'})
        self.assertEqual(set(rows[1]), {'curve_id', 'verdict', 'final_A', 'bound'})
        self.assertLessEqual(rows[1]['final_A'], rows[1]['bound'])
        self.assertIn('Family "cap_family"', stdout.getvalue())

    def test_family_needs_a_family_key(self):
        with temporary_output() as out:
            path = self.write_config(out, scenario(checks=[], **{'lambda': 0.1}))
            with self.assertRaises(CommandError) as ctx:
                call_command('extlab', 'family', path, stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)

    def test_unknown_check_name_exits_with_2(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('extlab', 'check', 'geometry', '--only', 'gauss_bonnet', stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)

    def test_check_records_outcomes(self):
        with temporary_output() as out:
            call_command('extlab', 'check', 'geometry', '--record', stdout=StringIO())
            self.assertTrue((out / 'reports' / 'geometry.json').is_file())
        self.assertEqual(CheckResult.objects.filter(suite='geometry').count(), len(suite_tasks('geometry')))
        self.assertFalse(CheckResult.objects.filter(passed=False).exists())


class ListViewTests(TestCase):
    def setUp(self):
        run = ScenarioRun.objects.create(
            name='cap_s3', background='s3_shrinking', config={'N': 128}, status='completed',
            exit_code=0, final_time=0.15, final_length=3.2, output_prefix='out/cap_s3',
        )
        CheckResult.objects.create(suite='scenario', name='lemma', passed=True, measured=-0.5, tolerance=0.01, run=run)

    def test_login_required(self):
        response = self.client.get(reverse('runs-list'))
        self.assertEqual(response.status_code, 302)
        self.assertIn(reverse('admin:login'), response['Location'])

    def test_lists_and_exports(self):
        self.client.force_login(User.objects.create_user('analyst', password='secret'))
        response = self.client.get(reverse('runs-list'))
        self.assertEqual(response.status_code, 200)
        self.assertContains(response, 'cap_s3')

        response = self.client.get(reverse('checks-list'), {'passed': 'true', '_export': 'csv'})
        self.assertEqual(response.status_code, 200)
        self.assertIn('lemma', response.content.decode())

    def test_filter_by_status(self):
        self.client.force_login(User.objects.create_user('analyst', password='secret'))
        response = self.client.get(reverse('runs-list'), {'status': 'failed'})
        self.assertEqual(response.status_code, 200)
        self.assertNotContains(response, 'out/cap_s3')
