import csv
import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.conf import settings
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase, override_settings

from numerics.exceptions import DomainError

EXAMPLE_FILE = Path(settings.BASE_DIR) / 'docs' / 'example.json'

CONSTANT_CONFIG = {
    'family': 'custom',
    'mu': 2.0,
    'omega': 1.0,
    'R': 2.0,
    'functions': {'f': "1", 'q': "1", 'u': "1", 'v': "0", 'gamma': "1"},
    'solver': {'grid_size': 101, 'm_schedule': [2, 4]},
}

FAST = {'CONDITION_SAMPLES': 2000}


def fbvp(*args):
    out = StringIO()
    call_command('fbvp', *[str(a) for a in args], stdout=out, stderr=StringIO())
    return out.getvalue()


def read_csv(path):
    with open(path, encoding='utf-8', newline='') as fh:
        return list(csv.reader(fh))


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.out = Path(tmp.name)

    def write_config(self, data, name='problem.json'):
        path = self.out / name
        path.write_text(data if isinstance(data, str) else json.dumps(data), encoding='utf-8')
        return path

    def assertExitStatus(self, status, *args):
        with self.assertRaises(CommandError) as ctx:
            fbvp(*args)
        self.assertEqual(ctx.exception.returncode, status, str(ctx.exception))
        return ctx.exception


class MittagLefflerCommandTests(CommandTestCase):
    def test_prints_one_value(self):
        value = fbvp('ml', '--mu', 1, '--nu', 1, '--x', 1).strip()
        self.assertTrue(value.startswith("2.71828182845904"), value)
        self.assertTrue(value.endswith("e+00"))
        self.assertEqual(fbvp('ml', '--mu', 2, '--nu', 1, '--x', 0).strip(), "1.0000000000000000e+00")

    def test_domain_errors_are_usage_errors(self):
        self.assertExitStatus(2, 'ml', '--mu', 0, '--nu', 1, '--x', 1)
        self.assertExitStatus(2, 'ml', '--mu', 1, '--nu', 1, '--x', -1)

    def test_missing_flag(self):
        with self.assertRaises(CommandError):
            fbvp('ml', '--mu', 1)


class ExampleCommandTests(CommandTestCase):
    def test_constants_table(self):
        stdout = fbvp('example', '--lambda', 0.009, '--R', 1, '--out', self.out)
        rows = read_csv(self.out / 'example_constants.csv')
        self.assertEqual(rows[0], ['name', 'computed', 'published', 'deviation'])
        published = {name: float(p) for name, _, p, _ in rows[1:]}
        self.assertEqual(published, {
            'int_q': 3.07853, 'int_q_u': 4.37043, 'gamma': 1.94308, 'chi': 5.21001,
            'ratio_denominator': 7.94329, 'window_ratio': 13.3352, 'window_threshold': 3.59596,
        })
        for name, _, _, deviation in rows[1:]:
            self.assertLess(float(deviation), 1e-3, name)
        self.assertIn("lambda window", stdout)

    def test_json_table(self):
        fbvp('example', '--lambda', 0.009, '--R', 1, '--out', self.out, '--format', 'json')
        records = json.loads((self.out / 'example_constants.json').read_text(encoding='utf-8'))
        self.assertEqual(len(records), 7)
        self.assertEqual(sorted(records[0]), ['computed', 'deviation', 'name', 'published'])

    def test_rejects_nonpositive_parameters(self):
        self.assertExitStatus(2, 'example', '--lambda', 0, '--R', 1, '--out', self.out)


class GreenCommandTests(CommandTestCase):
    def test_grid_is_written_deterministically(self):
        fbvp('green', '--mu', 1.9, '--omega', 2, '--nodes', 11, '--out', self.out)
        path = self.out / 'green.csv'
        first = path.read_bytes()
        rows = read_csv(path)
        self.assertEqual(rows[0], ['t', 'tau', 'G'])
        self.assertEqual(len(rows), 1 + 11 * 11)
        # G(1, tau) = 0
        self.assertTrue(all(float(g) == 0.0 for t, _, g in rows[1:] if float(t) == 1.0))
        self.assertNotIn(b'\r\n', first)

        fbvp('green', '--mu', 1.9, '--omega', 2, '--nodes', 11, '--out', self.out)
        self.assertEqual(path.read_bytes(), first)

    def test_invalid_kernel(self):
        self.assertExitStatus(2, 'green', '--mu', 2.5, '--out', self.out)
        self.assertExitStatus(2, 'green', '--nodes', 1, '--out', self.out)


@override_settings(FBVP=FAST)
class CheckCommandTests(CommandTestCase):
    def test_example_passes(self):
        stdout = fbvp('check', '--lambda', 0.009, '--R', 1, '--out', self.out)
        report = json.loads((self.out / 'conditions.json').read_text(encoding='utf-8'))
        self.assertTrue(report['passed'])
        self.assertTrue(all(report['verdicts'].values()))
        self.assertNotEqual(report['epsilon_max'], 'nan')
        self.assertIn("conditions pass", stdout)

    def test_lambda_outside_the_window_fails(self):
        self.assertExitStatus(1, 'check', '--lambda', 0.03, '--R', 1, '--out', self.out)
        report = json.loads((self.out / 'conditions.json').read_text(encoding='utf-8'))
        self.assertFalse(report['verdicts']['A2_ratio'])

    def test_needs_a_problem(self):
        self.assertExitStatus(2, 'check', '--R', 1, '--out', self.out)


@override_settings(FBVP=FAST)
class SolveCommandTests(CommandTestCase):
    def test_constant_problem_is_certified_and_reproducible(self):
        config = self.write_config(CONSTANT_CONFIG)
        fbvp('solve', '--config', config, '--out', self.out / 'a')
        fbvp('solve', '--config', config, '--out', self.out / 'b')

        rows = read_csv(self.out / 'a' / 'solution.csv')
        self.assertEqual(rows[0], ['t', 'x', 'lower_bound', 'residual'])
        self.assertEqual(len(rows), 102)
        self.assertEqual(float(rows[-1][1]), 0.0)
        self.assertEqual(rows[1][3], 'nan')
        for name in ('solution.csv', 'solve_report.json'):
            self.assertEqual((self.out / 'a' / name).read_bytes(), (self.out / 'b' / name).read_bytes(), name)

        report = json.loads((self.out / 'a' / 'solve_report.json').read_text(encoding='utf-8'))
        self.assertTrue(report['converged'])
        self.assertEqual(report['grid_size'], 101)
        self.assertEqual([s['m'] for s in report['steps']], [2, 4])
        self.assertEqual(set(report['checks']['residual']), {'passed', 'margin'})

    def test_flags_override_the_config(self):
        config = self.write_config(CONSTANT_CONFIG)
        fbvp('solve', '--config', config, '--out', self.out, '--nodes', 51, '--schedule', 2, 4, 8, '--format', 'json')
        records = json.loads((self.out / 'solution.json').read_text(encoding='utf-8'))
        self.assertEqual(len(records), 51)
        report = json.loads((self.out / 'solve_report.json').read_text(encoding='utf-8'))
        self.assertEqual([s['m'] for s in report['steps']], [2, 4, 8])

    def test_config_errors_exit_with_2(self):
        self.assertExitStatus(2, 'solve', '--config', self.out / 'missing.json', '--out', self.out)
        self.assertExitStatus(2, 'solve', '--config', self.write_config("{not json"), '--out', self.out)
        self.assertExitStatus(2, 'solve', '--config', self.write_config("[1, 2]"), '--out', self.out)

        bad_expr = dict(CONSTANT_CONFIG, functions=dict(CONSTANT_CONFIG['functions'], f="2**x"))
        error = self.assertExitStatus(2, 'solve', '--config', self.write_config(bad_expr), '--out', self.out)
        self.assertIn('offset 1', str(error))

        self.assertExitStatus(2, 'solve', '--config', self.write_config(dict(CONSTANT_CONFIG, mu=2.5)), '--out', self.out)
        bad_schedule = dict(CONSTANT_CONFIG, solver={'m_schedule': [1, 2]})
        self.assertExitStatus(2, 'solve', '--config', self.write_config(bad_schedule), '--out', self.out)

    def test_failing_conditions_exit_with_1(self):
        config = self.write_config(dict(CONSTANT_CONFIG, R=1.0))
        self.assertExitStatus(1, 'solve', '--config', config, '--out', self.out)
        self.assertTrue((self.out / 'conditions.json').exists())
        self.assertFalse((self.out / 'solution.csv').exists())

    def test_failed_certification_exits_with_1_and_keeps_artifacts(self):
        config = self.write_config(CONSTANT_CONFIG)
        with override_settings(FBVP=dict(FAST, RESIDUAL_TOL=1e-30)):
            error = self.assertExitStatus(1, 'solve', '--config', config, '--out', self.out)
        self.assertIn('residual', str(error))
        report = json.loads((self.out / 'solve_report.json').read_text(encoding='utf-8'))
        self.assertFalse(report['converged'])
        self.assertEqual(report['violated'], ['residual'])

    def test_numeric_failure_exits_with_3(self):
        config = self.write_config(CONSTANT_CONFIG)
        with override_settings(FBVP=dict(FAST, MAX_ITER=1, FIXED_POINT_TOL=1e-300)):
            self.assertExitStatus(3, 'solve', '--config', config, '--out', self.out)

    def test_shipped_example(self):
        fbvp('solve', '--config', EXAMPLE_FILE, '--out', self.out)
        rows = read_csv(self.out / 'solution.csv')[1:]
        x = [float(r[1]) for r in rows]
        self.assertLessEqual(abs(x[-1]), 1e-8)
        self.assertTrue(all(v > 0 for v in x[:-1]))
        report = json.loads((self.out / 'solve_report.json').read_text(encoding='utf-8'))
        self.assertTrue(report['converged'], report['violated'])

    def test_one_entry_schedule(self):
        config = self.write_config(CONSTANT_CONFIG)
        fbvp('solve', '--config', config, '--out', self.out, '--schedule', 4)
        report = json.loads((self.out / 'solve_report.json').read_text(encoding='utf-8'))
        self.assertTrue(report['converged'])
        self.assertEqual([s['m'] for s in report['steps']], [4])

    def test_domain_error_during_computation_exits_with_3(self):
        config = self.write_config(CONSTANT_CONFIG)
        failure = DomainError("residual needs x strictly positive on the window")
        with mock.patch('bvp.management.commands.fbvp.solve', side_effect=failure):
            error = self.assertExitStatus(3, 'solve', '--config', config, '--out', self.out)
        self.assertIn('numerical failure', str(error))
        with mock.patch('bvp.management.commands.fbvp.check_A2', side_effect=failure):
            self.assertExitStatus(3, 'check', '--config', config, '--out', self.out)

    def test_domain_error_in_the_problem_file_exits_with_2(self):
        config = self.write_config(dict(CONSTANT_CONFIG, mu=2.5))
        error = self.assertExitStatus(2, 'solve', '--config', config, '--out', self.out)
        self.assertNotIn('numerical failure', str(error))
