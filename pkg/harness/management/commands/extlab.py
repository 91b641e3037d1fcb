from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from comparison.family import Verdict
from harness.exceptions import HarnessError, ScenarioError
from harness.forms import load_scenario
from harness.scenario import run_family, run_scenario, run_sweep
from harness.suite import ALL, check_suite, record_report

CONFIG_ERROR = 2
INVARIANT_VIOLATION = 1


def parse_lambdas(text):
    try:
        lambdas = [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise ScenarioError(f'--lambda expects comma separated numbers, got "{text}"')
    if len(lambdas) < 3:
        raise ScenarioError(f'A sweep needs at least 3 lambdas, got {len(lambdas)}')
    if any(not 0.0 < lam < 1.0 for lam in lambdas):
        raise ScenarioError(f'Every lambda must lie in (0, 1), got {lambdas}')
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise ScenarioError(f'Lambdas must decrease strictly, got {lambdas}')
    return lambdas


class Command(BaseCommand):
    help = (
        'Run a scenario config, sweep it over lambda, deform its family, or run the bundled check suites. '
        'Exit status: 0 success, 1 invariant violation or failed check, 2 bad configuration.'
    )

    def add_arguments(self, parser):
        actions = parser.add_subparsers(dest='action', required=True)

        run = actions.add_parser('run', help='Run one scenario and export its files')
        run.add_argument('config', type=str, help='Scenario JSON file, or a name in EXTLAB["SCENARIO_DIR"]')
        run.add_argument('--record', action='store_true', help='Store the run and its checks')

        sweep = actions.add_parser('sweep', help='Ramp runs of the scenario loop for several lambdas')
        sweep.add_argument('config', type=str, help='Scenario JSON file')
        sweep.add_argument('--lambda', dest='lambdas', type=str, required=True, help='Decreasing list, e.g. 0.2,0.1,0.05')
        sweep.add_argument('--jobs', type=int, default=None, help='Worker processes')

        family = actions.add_parser('family', help='Width-or-short verdicts for the scenario family')
        family.add_argument('config', type=str, help='Scenario JSON file with a "family" key')
        family.add_argument('--jobs', type=int, default=None, help='Worker processes')

        check = actions.add_parser('check', help='Run the bundled acceptance checks')
        check.add_argument('suite', nargs='?', default=ALL, help='geometry, csf, ramp, comparison, harness or all')
        check.add_argument('--jobs', type=int, default=None, help='Worker processes')
        check.add_argument('--only', type=str, default=None, help='Comma separated check names, e.g. gauss_bonnet,cap_sharpness')
        check.add_argument('--record', action='store_true', help='Store every outcome')

    def handle(self, *args, **options):
        handler = getattr(self, f'handle_{options["action"]}')
        try:
            handler(options)
        except HarnessError as exc:
            raise CommandError(str(exc), returncode=CONFIG_ERROR)
        except (ValueError, RuntimeError, ArithmeticError) as exc:
            raise CommandError(f'{type(exc).__name__}: {exc}', returncode=INVARIANT_VIOLATION)

    def _jobs(self, options):
        jobs = options.get('jobs') or settings.EXTLAB['DEFAULT_JOBS']
        if jobs < 1:
            raise ScenarioError(f'--jobs must be at least 1, got {jobs}')
        return jobs

    def handle_run(self, options):
        cfg = load_scenario(options['config'])
        result = run_scenario(cfg, record=options['record'])
        summary = result.summary
        self.stdout.write(
            f'{cfg.name}: {summary["status"]} at t={summary["final_time"]:.6g}, '
            f'L={summary["final_length"]:.6g} ({summary["steps"]} steps)'
        )
        for check in result.checks:
            style = self.style.SUCCESS if check.passed else self.style.ERROR
            self.stdout.write(style(check.summary))
        for path in result.files:
            self.stdout.write(f'  wrote {path}')
        if result.exit_code:
            failed = ', '.join(check.name for check in result.checks if not check.passed)
            raise CommandError(f'{cfg.name}: failed checks {failed}', returncode=INVARIANT_VIOLATION)
        self.stdout.write(self.style.SUCCESS(f'Scenario "{cfg.name}" completed'))

    def handle_sweep(self, options):
        cfg = load_scenario(options['config'])
        lambdas = parse_lambdas(options['lambdas'])
        report, path = run_sweep(cfg, lambdas, jobs=self._jobs(options))
        for member, distance in zip(report.members, report.distances or [None] * len(report.members)):
            gap = '-' if distance is None else f'{distance:.3e}'
            self.stdout.write(
                f'  lambda={member.lam:g}: L={member.summary["final_length"]:.6g}, '
                f'u_min in [{member.summary["u_min_min"]:.4g}, {member.summary["u_min_max"]:.4g}], distance {gap}'
            )
        order = 'n/a' if report.order is None else f'{report.order:.3f}'
        self.stdout.write(self.style.SUCCESS(f'Sweep "{cfg.name}": fitted order {order}, wrote {path}'))

    def handle_family(self, options):
        cfg = load_scenario(options['config'])
        outcome, path = run_family(cfg, jobs=self._jobs(options))
        for member in outcome.members:
            final = member.final_A if member.verdict == Verdict.WIDTH_BOUNDED else member.final_L
            self.stdout.write(f'  {member.curve_id}: {member.verdict.value} ({final:.6g} against {member.bound:.6g})')
        self.stdout.write(self.style.SUCCESS(f'Family "{cfg.name}": xi={outcome.xi:.4g}, wrote {path}'))

    def handle_check(self, options):
        only = [name.strip() for name in options['only'].split(',') if name.strip()] if options.get('only') else None
        report = check_suite(options['suite'], jobs=self._jobs(options), only=only)
        for check in report.checks:
            style = self.style.SUCCESS if check.passed else self.style.ERROR
            self.stdout.write(style(check.summary))
        if options['record']:
            record_report(report)
        self.stdout.write(f'Report written to {report.path}')
        if not report.passed:
            raise CommandError(
                f'{len(report.failed)} of {len(report.checks)} checks failed', returncode=INVARIANT_VIOLATION,
            )
        self.stdout.write(self.style.SUCCESS(f'All {len(report.checks)} checks of "{options["suite"]}" passed'))
