"""
Module: suite.py

Runs the bundled check suites, one check per worker process, and merges
the outcomes in suite order.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from django.conf import settings

from .checks import SUITES
from .exceptions import UnknownSuiteError
from .exporters import write_json
from .reports import CheckOutcome, CheckReport

logger = logging.getLogger(__name__)

ALL = 'all'
# Input errors derive from ValueError, numerical events from RuntimeError.
CHECK_ERRORS = (ValueError, RuntimeError, ArithmeticError)


def check_name(check):
    return check.__name__.removeprefix('check_')


def suite_tasks(suite, only=None):
    """
    ``(suite, index)`` pairs of the checks to run.

    ``only`` restricts every selected suite to the named checks; a name
    that matches no check of the selection is an error.
    """
    if suite == ALL:
        names = list(SUITES)
    elif suite in SUITES:
        names = [suite]
    else:
        raise UnknownSuiteError(f'Unknown suite "{suite}"; choose from {", ".join([ALL, *SUITES])}')
    tasks = [(name, index) for name in names for index in range(len(SUITES[name]))]
    if only is None:
        return tasks
    wanted = set(only)
    known = {check_name(SUITES[name][index]) for name, index in tasks}
    if wanted - known:
        raise UnknownSuiteError(f'No checks named {", ".join(sorted(wanted - known))} in suite "{suite}"')
    return [(name, index) for name, index in tasks if check_name(SUITES[name][index]) in wanted]


def run_check(task):
    """Outcomes of one check; an exception fails the check instead of the suite."""
    suite, index = task
    check = SUITES[suite][index]
    started = time.perf_counter()
    try:
        outcomes = check()
    except CHECK_ERRORS as exc:
        logger.error(f'{suite}.{check.__name__} raised {type(exc).__name__}: {exc}')
        outcomes = CheckOutcome(check_name(check), False, detail=f'{type(exc).__name__}: {exc}')
    if isinstance(outcomes, CheckOutcome):
        outcomes = [outcomes]
    runtime = (time.perf_counter() - started) / len(outcomes)
    for outcome in outcomes:
        outcome.suite = suite
        outcome.runtime = runtime
    return outcomes


def report_path(suite):
    return Path(settings.EXTLAB['REPORT_DIR']) / f'{suite}.json'


def check_suite(suite=ALL, jobs=1, write=True, only=None):
    """
    Run ``suite`` (a suite name or "all") with ``jobs`` worker processes,
    restricted to the checks named in ``only`` when given.

    Outcomes are merged in the fixed suite order whatever the number of
    workers. The report file leaves out runtimes, so two runs of the same
    suite write the same bytes.
    """
    tasks = suite_tasks(suite, only)
    logger.info(f'Running {len(tasks)} checks of suite {suite} with {jobs} workers')
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_check, tasks))
    else:
        results = [run_check(task) for task in tasks]

    report = CheckReport(suite=suite, checks=[outcome for outcomes in results for outcome in outcomes])
    if write:
        report.path = write_json(report_path(suite), report.as_dict())
    for outcome in report.failed:
        logger.warning(f'Failed: {outcome.summary}')
    return report


def record_report(report):
    """Store every outcome of ``report`` as a CheckResult row."""
    from .models import CheckResult

    return CheckResult.objects.bulk_create([
        CheckResult(
            suite=outcome.suite,
            name=outcome.name,
            passed=outcome.passed,
            measured=outcome.measured if outcome.measured is None or math.isfinite(outcome.measured) else None,
            tolerance=outcome.tolerance,
            runtime=outcome.runtime,
        )
        for outcome in report.checks
    ])
