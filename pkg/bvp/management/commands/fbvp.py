import json
import logging
from contextlib import contextmanager
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from numerics.exceptions import DomainError, NumericsError
from numerics.green import KernelParams, green_matrix
from numerics.specfun import MLIndex, mittag_leffler

from bvp.conditions import EXAMPLE_PARAMS, check_A2, example_constants, lambda_window
from bvp.exceptions import BVPError, ConditionsError, ExpressionError, ScheduleError
from bvp.serializers import (
    ConditionReportSerializer,
    ConstantRowSerializer,
    ProblemConfigSerializer,
    SolveReportSerializer,
    format_float,
)
from bvp.solver import solve
from bvp.writers import write_json, write_table

logger = logging.getLogger('bvp.cli')

# exit statuses
CONFIG_ERROR = 2
NOT_CERTIFIED = 1
NUMERIC_ERROR = 3

CONSTANT_TOLERANCE = 1e-3
GREEN_DEFAULT_NODES = 21


class Command(BaseCommand):
    help = "Solve, check and tabulate singular Caputo boundary value problems."

    def add_arguments(self, parser):
        sub = parser.add_subparsers(dest='action', required=True)

        solve_p = sub.add_parser('solve', help="solve and certify a problem")
        self._problem_flags(solve_p)
        solve_p.add_argument('--nodes', type=int, help="grid size (overrides the config)")
        solve_p.add_argument('--tol', type=float, help="certification tolerance (overrides the config)")
        solve_p.add_argument('--schedule', type=int, nargs='+', help="regularization indices m")
        self._output_flags(solve_p)

        check_p = sub.add_parser('check', help="check the structural conditions of a problem")
        self._problem_flags(check_p)
        self._output_flags(check_p)

        green_p = sub.add_parser('green', help="tabulate the Green's function on a grid")
        green_p.add_argument('--mu', type=float, default=EXAMPLE_PARAMS.mu)
        green_p.add_argument('--omega', type=float, default=EXAMPLE_PARAMS.omega)
        green_p.add_argument('--nodes', type=int, default=GREEN_DEFAULT_NODES)
        self._output_flags(green_p)

        ml_p = sub.add_parser('ml', help="print one Mittag-Leffler value E_{mu,nu}(x)")
        ml_p.add_argument('--mu', type=float, required=True)
        ml_p.add_argument('--nu', type=float, required=True)
        ml_p.add_argument('--x', type=float, required=True)

        example_p = sub.add_parser('example', help="recompute the example family's constants")
        example_p.add_argument('--lambda', dest='lam', type=float, default=0.009)
        example_p.add_argument('--R', type=float, default=1.0)
        self._output_flags(example_p)

    def _problem_flags(self, parser):
        parser.add_argument('--config', help="problem file (JSON)")
        parser.add_argument('--lambda', dest='lam', type=float, help="example family lambda (without --config)")
        parser.add_argument('--R', type=float)
        parser.add_argument('--mu', type=float)
        parser.add_argument('--omega', type=float)

    def _output_flags(self, parser):
        parser.add_argument('--out', help="output directory")
        parser.add_argument('--format', choices=('csv', 'json'))

    def handle(self, *args, **options):
        action = options['action']
        try:
            return getattr(self, f'handle_{action}')(options)
        except (ExpressionError, ScheduleError) as exc:
            raise CommandError(str(exc), returncode=CONFIG_ERROR) from exc
        except ConditionsError as exc:
            raise CommandError(str(exc), returncode=NOT_CERTIFIED) from exc
        except (NumericsError, BVPError) as exc:
            logger.exception("%s failed", action)
            raise CommandError(f"numerical failure: {exc}", returncode=NUMERIC_ERROR) from exc

    # --- configuration ------------------------------------------------------

    @contextmanager
    def _reading_input(self):
        """DomainError while turning arguments or a problem file into objects is a usage error."""
        try:
            yield
        except DomainError as exc:
            raise CommandError(str(exc), returncode=CONFIG_ERROR) from exc

    def _load_config(self, options):
        if options.get('config'):
            try:
                data = json.loads(Path(options['config']).read_text(encoding='utf-8'))
            except OSError as exc:
                raise CommandError(f"cannot read {options['config']}: {exc}", returncode=CONFIG_ERROR) from exc
            except json.JSONDecodeError as exc:
                raise CommandError(f"{options['config']} is not valid JSON: {exc}", returncode=CONFIG_ERROR) from exc
            if not isinstance(data, dict):
                raise CommandError("problem file must hold a JSON object", returncode=CONFIG_ERROR)
        else:
            if options.get('lam') is None or options.get('R') is None:
                raise CommandError("give --config, or --lambda and --R for the example family", returncode=CONFIG_ERROR)
            data = {'family': 'example', 'lambda': options['lam'], 'R': options['R']}

        for key in ('mu', 'omega', 'R'):
            if options.get(key) is not None:
                data[key] = options[key]
        if options.get('lam') is not None and data.get('family') == 'example':
            data['lambda'] = options['lam']

        solver = dict(data.get('solver') or {})
        if options.get('nodes') is not None:
            solver['grid_size'] = options['nodes']
        if options.get('tol') is not None:
            solver['tol'] = options['tol']
        if options.get('schedule'):
            solver['m_schedule'] = options['schedule']
        data['solver'] = solver

        serializer = ProblemConfigSerializer(data=data)
        if not serializer.is_valid():
            raise CommandError(f"invalid problem file: {json.dumps(serializer.errors, sort_keys=True)}",
                               returncode=CONFIG_ERROR)
        try:
            with self._reading_input():
                return serializer.save()
        except serializers.ValidationError as exc:
            raise CommandError(f"invalid problem file: {exc.detail}", returncode=CONFIG_ERROR) from exc

    def _out_dir(self, options, config=None):
        out = options.get('out') or (config.output.get('dir') if config else None) or settings.OUTPUT_DIR
        return Path(out)

    def _format(self, options, config=None):
        return options.get('format') or (config.output.get('format') if config else None) or 'csv'

    # --- actions ------------------------------------------------------------

    def handle_solve(self, options):
        config = self._load_config(options)
        problem = config.problem
        out = self._out_dir(options, config)
        fmt = self._format(options, config)

        conditions = check_A2(problem)
        if not conditions.passed:
            write_json(out / 'conditions.json', ConditionReportSerializer(conditions).data)
            raise CommandError(f"conditions fail: {', '.join(conditions.failed)}", returncode=NOT_CERTIFIED)

        report = solve(
            problem,
            m_schedule=config.solver.get('m_schedule'),
            grid_size=config.solver.get('grid_size'),
            tol=config.solver.get('tol'),
            damping=config.solver.get('damping'),
            interp=config.solver.get('interp'),
            conditions=conditions,
            strict=False,
        )
        x = report.solution
        rows = zip(x.nodes, x.values, report.lower_bound, report.residual_profile)
        write_table(out / 'solution', ['t', 'x', 'lower_bound', 'residual'], rows, fmt)
        write_json(out / 'solve_report.json', SolveReportSerializer(report).data)

        if not report.converged:
            raise CommandError(f"certification failed: {', '.join(report.violated)}", returncode=NOT_CERTIFIED)
        self.stdout.write(self.style.SUCCESS(
            f"certified: epsilon={format_float(report.epsilon)} residual={format_float(report.residual)}"
        ))

    def handle_check(self, options):
        config = self._load_config(options)
        report = check_A2(config.problem)
        write_json(self._out_dir(options, config) / 'conditions.json', ConditionReportSerializer(report).data)
        for name, ok in report.verdicts.items():
            self.stdout.write(f"{name}: {'pass' if ok else 'FAIL'}")
        if not report.passed:
            raise CommandError(f"conditions fail: {', '.join(report.failed)}", returncode=NOT_CERTIFIED)
        self.stdout.write(self.style.SUCCESS(f"conditions pass, epsilon_max={format_float(report.epsilon_max)}"))

    def handle_green(self, options):
        if options['nodes'] < 2:
            raise CommandError("--nodes must be at least 2", returncode=CONFIG_ERROR)
        with self._reading_input():
            params = KernelParams(options['mu'], options['omega'])
        grid = np.linspace(0.0, 1.0, options['nodes'])
        values = green_matrix(params, grid, grid)
        tt, ss = np.meshgrid(grid, grid, indexing='ij')
        rows = zip(tt.ravel(), ss.ravel(), values.ravel())
        path = write_table(self._out_dir(options) / 'green', ['t', 'tau', 'G'], rows, self._format(options))
        self.stdout.write(f"wrote {path}")

    def handle_ml(self, options):
        with self._reading_input():
            value = mittag_leffler(MLIndex(options['mu'], options['nu']), options['x'])
        self.stdout.write(format_float(value))

    def handle_example(self, options):
        lam, R = options['lam'], options['R']
        if not (lam > 0 and R > 0):
            raise CommandError("--lambda and --R must be positive", returncode=CONFIG_ERROR)
        table = example_constants(lam, R)
        data = ConstantRowSerializer(table, many=True).data
        rows = [(r.name, r.computed, r.published, r.deviation) for r in table]
        write_table(self._out_dir(options) / 'example_constants',
                    ['name', 'computed', 'published', 'deviation'], rows, self._format(options))

        for row in data:
            self.stdout.write(f"{row['name']:<18} {row['computed']}  {row['published']}  {row['deviation']}")
        _, hi = lambda_window(R)
        self.stdout.write(f"lambda window at R={format_float(R)}: (0, {format_float(hi)})")

        off = [r.name for r in table if not r.deviation < CONSTANT_TOLERANCE]
        if off:
            raise CommandError(f"constants deviate by more than {CONSTANT_TOLERANCE:g}: {', '.join(off)}",
                               returncode=NOT_CERTIFIED)
