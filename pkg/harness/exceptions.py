class HarnessError(ValueError):
    """Base class for harness errors."""


class ScenarioError(HarnessError):
    """A scenario config that does not parse or does not validate."""


class UnknownSuiteError(HarnessError):
    """A check suite or check name outside the bundled suites."""
