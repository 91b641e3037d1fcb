"""
Module: reports.py

Outcomes of named checks and the report they merge into.

Wall-clock runtimes are kept on every outcome for the console and the
CheckResult records, but never enter ``as_dict``, so a report serializes
the same way on every run.
"""

import math
from dataclasses import dataclass, field


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    measured: float = None
    tolerance: float = None
    detail: str = ''
    suite: str = ''
    runtime: float = 0.0

    def as_dict(self):
        return {
            'suite': self.suite,
            'name': self.name,
            'status': 'pass' if self.passed else 'fail',
            'measured': self.measured,
            'tolerance': self.tolerance,
            'detail': self.detail,
        }

    @property
    def summary(self):
        measured = '-' if self.measured is None or not math.isfinite(self.measured) else f'{self.measured:.4g}'
        return f'{self.suite}.{self.name}: {"pass" if self.passed else "FAIL"} measured={measured} ({self.runtime:.2f}s)'


@dataclass
class CheckReport:
    suite: str
    checks: list = field(default_factory=list)
    path: object = None

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    @property
    def failed(self):
        return [check for check in self.checks if not check.passed]

    @property
    def exit_code(self):
        return 0 if self.passed else 1

    def as_dict(self):
        return {
            'suite': self.suite,
            'passed': self.passed,
            'checks': [check.as_dict() for check in self.checks],
        }
