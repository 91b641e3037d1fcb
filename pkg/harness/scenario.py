"""
Module: scenario.py

Scenario configs and the pipeline that runs them.

A scenario builds its initial loop, optionally replaces it by a geodesic
polygon, optionally lifts it to a ramp, flows it, evaluates the checks it
names and writes:

- ``<prefix>_monitors.csv``: t, L, theta, k2int, k_max, status;
- ``<prefix>_ramp.csv`` for lifted runs: u_min, k/u, lengths, separation;
- ``<prefix>_width.csv`` when the lemma check ran: t, A, w, margin;
- ``<prefix>_summary.json``: run summary and check outcomes;
- ``<prefix>_snapshots/`` at the configured stride.

``run_sweep`` writes ``<prefix>_sweep.json`` and ``run_family`` the family
report ``<prefix>_family.json``.
"""

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from comparison.exceptions import ComparisonError
from comparison.family import deform_family
from comparison.margins import WidthSeries, lemma_margin, normalized_width_check, width_rows
from comparison.ode import comparison_ode, normalizing_constant
from flow.exceptions import FlowError
from flow.initializers import build_curve
from flow.polygon import geodesic_polygon
from flow.residuals import (
    curvature_inequality_monitor,
    growth_envelope,
    length_identity_residual,
    length_inequality_monitor,
    speed_identity_residual,
    total_curvature_monitor,
)
from flow.solver import FlowConfig, flow_run
from geometry.backgrounds import resolve_background
from geometry.exceptions import GeometryError
from ramps.run import ramp_flow_run, u_evolution_residual
from ramps.sweep import lambda_sweep

from .exceptions import ScenarioError
from .exporters import (
    MONITOR_HEADERS,
    WIDTH_HEADERS,
    SnapshotWriter,
    output_prefix,
    suffixed,
    write_csv,
    write_family_report,
    write_json,
)
from .reports import CheckOutcome

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 'v1'
CIRCLE_ORACLE_RTOL = 5e-3
IDENTITY_RTOL = 1e-2
WIDTH_RTOL = 1e-2
RAMP_HEADERS = ['t', 'u_min', 'ku_max', 'ramp_length', 'projected_length', 'min_separation']

# Checks that follow a fixed curve parameter and need redistribution off.
FIXED_PARAMETER_CHECKS = ('speed_identity', 'u_evolution')
RAMP_CHECKS = ('u_evolution', 'ramp_positive', 'ramp_envelope', 'projection_monotone')
DIRECT_CHECKS = ('circle_length_oracle',)


@dataclass(frozen=True)
class ScenarioConfig:
    """
    A validated scenario.

    ``lam`` is the circle length of the ramp lift (the "lambda" key of the
    config); None runs the direct flow. ``samples``, ``cfl`` and
    ``snapshot_stride`` fall back to the EXTLAB settings when None. ``family``
    lists the initializer specs deformed together by ``run_family``.
    """
    name: str
    background: str
    curve: dict
    interval: tuple
    N: int
    lam: float = None
    cfl: float = None
    dt: float = None
    checks: tuple = ()
    output: str = ''
    seed: int = 0
    samples: int = None
    redistribute: bool = True
    polygon: int = None
    snapshot_stride: int = None
    family: tuple = ()
    version: str = SCHEMA_VERSION

    def resolve(self):
        return resolve_background(self.background)

    def flow_config(self):
        return FlowConfig.from_settings(
            cfl=self.cfl,
            dt=self.dt,
            redistribute=self.redistribute,
            samples=self.samples,
            snapshot_stride=self.snapshot_stride,
        )

    def as_dict(self):
        data = asdict(self)
        data['lambda'] = data.pop('lam')
        data['interval'] = list(self.interval)
        data['checks'] = list(self.checks)
        data['family'] = list(self.family)
        if not self.family:
            del data['family']
        return {key: value for key, value in data.items() if value is not None}


@dataclass
class ScenarioContext:
    config: ScenarioConfig
    background: object
    curve: object
    trajectory: object
    ramp_run: object = None
    prefix: object = None
    files: list = field(default_factory=list)

    @property
    def t0(self):
        return float(self.config.interval[0])

    def flowed_samples(self):
        """``(t, loop)`` in the base background: projected loops for ramp runs."""
        if self.ramp_run is None:
            return [(s.t, s.curve) for s in self.trajectory.samples]
        return [(s.t, self.ramp_run.projected(j)) for j, s in enumerate(self.trajectory.samples)]


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    context: ScenarioContext
    checks: list
    summary: dict
    record: object = None

    @property
    def trajectory(self):
        return self.context.trajectory

    @property
    def files(self):
        return self.context.files

    @property
    def exit_code(self):
        return 0 if all(check.passed for check in self.checks) else 1


def _scaled_residual(series):
    """Largest residual over the largest predicted rate, or absolute when the rate is below 1."""
    scale = max(1.0, float(np.max(np.abs(series.predicted))) if len(series.predicted) else 1.0)
    return series.max / scale


def _identity_outcome(name, series):
    measured = _scaled_residual(series)
    return CheckOutcome(name, measured <= IDENTITY_RTOL, measured, IDENTITY_RTOL)


def _margin_outcome(name, margins):
    detail = f'{len(margins.violations)} violations' if margins.violations else ''
    return CheckOutcome(name, margins.ok, margins.max, margins.tolerance, detail)


def check_circle_length_oracle(ctx):
    """L(t) against 2 pi sqrt(r^2 - 2t) at every sample."""
    spec = ctx.config.curve
    r = float(spec.get('r', 1.0))
    t = ctx.trajectory.times
    exact = 2 * math.pi * np.sqrt(np.maximum(r ** 2 - 2.0 * t, 0.0))
    error = np.abs(ctx.trajectory.series('L') - exact) / np.maximum(exact, np.finfo(float).tiny)
    measured = float(np.max(error))
    return CheckOutcome('circle_length_oracle', measured <= CIRCLE_ORACLE_RTOL, measured, CIRCLE_ORACLE_RTOL)


def check_speed_identity(ctx):
    return _identity_outcome('speed_identity', speed_identity_residual(ctx.trajectory, ctx.trajectory.background, 0))


def check_length_identity(ctx):
    return _identity_outcome('length_identity', length_identity_residual(ctx.trajectory, ctx.trajectory.background))


def check_curvature_inequality(ctx):
    return _margin_outcome('curvature_inequality', curvature_inequality_monitor(ctx.trajectory, ctx.trajectory.background))


def check_length_inequality(ctx):
    return _margin_outcome('length_inequality', length_inequality_monitor(ctx.trajectory, ctx.trajectory.background))


def check_total_curvature(ctx):
    return _margin_outcome('total_curvature', total_curvature_monitor(ctx.trajectory, ctx.trajectory.background))


def check_growth_envelope(ctx):
    envelopes = growth_envelope(ctx.trajectory, ctx.trajectory.background)
    if not envelopes:
        return CheckOutcome('growth_envelope', True, detail='nothing to bound')
    worst = max(envelopes.values(), key=lambda series: series.max)
    passed = all(series.ok for series in envelopes.values())
    return CheckOutcome('growth_envelope', passed, worst.max, worst.tolerance, worst.name)


def _width_series(ctx):
    return WidthSeries.from_samples(ctx.flowed_samples(), ctx.background)


def _relative_margin(margins, ws):
    rate = np.diff(ws.A) / np.diff(ws.t)
    return float(np.max(margins.margin / np.maximum(np.abs(rate), np.finfo(float).tiny)))


def check_lemma(ctx):
    """Width margins against the comparison ODE; also writes the width CSV."""
    ws = _width_series(ctx)
    margins = lemma_margin(ws, ctx.background, rtol=WIDTH_RTOL)
    solution = comparison_ode(float(ws.A[0]), ctx.background, (ws.t[0], ws.t[-1]))
    path = write_csv(suffixed(ctx.prefix, 'width.csv'), WIDTH_HEADERS, width_rows(ws, solution, margins))
    ctx.files.append(path)
    detail = f'{len(margins.violations)} violations' if margins.violations else ''
    return CheckOutcome('lemma', margins.ok, _relative_margin(margins, ws), WIDTH_RTOL, detail)


def check_normalized_width(ctx):
    ws = _width_series(ctx)
    const = normalizing_constant(ctx.background, ctx.t0)
    margins = normalized_width_check(ws, const, rtol=WIDTH_RTOL)
    return _margin_outcome('normalized_width', margins)


def check_u_evolution(ctx):
    run = ctx.ramp_run
    return _identity_outcome('u_evolution', u_evolution_residual(run.trajectory, run.product))


def check_ramp_positive(ctx):
    run = ctx.ramp_run
    measured = float(np.min(run.u_min))
    detail = '' if run.u_floor_ok else 'u_min fell below half its initial floor'
    return CheckOutcome('ramp_positive', measured > 0 and run.u_floor_ok, measured, 0.0, detail)


def check_ramp_envelope(ctx):
    run = ctx.ramp_run
    return CheckOutcome('ramp_envelope', run.envelope_ok, float(np.max(run.ku_max)))


def check_projection_monotone(ctx):
    run = ctx.ramp_run
    gap = float(np.max(np.subtract(run.projected_lengths, run.ramp_lengths)))
    return CheckOutcome('projection_monotone', run.projection_monotone, gap, 0.0)


SCENARIO_CHECKS = {
    'circle_length_oracle': check_circle_length_oracle,
    'speed_identity': check_speed_identity,
    'length_identity': check_length_identity,
    'curvature_inequality': check_curvature_inequality,
    'length_inequality': check_length_inequality,
    'total_curvature': check_total_curvature,
    'growth_envelope': check_growth_envelope,
    'lemma': check_lemma,
    'normalized_width': check_normalized_width,
    'u_evolution': check_u_evolution,
    'ramp_positive': check_ramp_positive,
    'ramp_envelope': check_ramp_envelope,
    'projection_monotone': check_projection_monotone,
}

# Evaluation failures of a check count as a failed check, not a crash.
CHECK_ERRORS = (FlowError, GeometryError, ComparisonError)


def evaluate_check(name, ctx):
    started = time.perf_counter()
    try:
        outcome = SCENARIO_CHECKS[name](ctx)
    except CHECK_ERRORS as exc:
        logger.error(f'{ctx.config.name}: check {name} could not be evaluated: {exc}')
        outcome = CheckOutcome(name, False, detail=str(exc))
    outcome.suite = 'scenario'
    outcome.runtime = time.perf_counter() - started
    return outcome


def _ramp_rows(run):
    return [
        [t, m.u_min, m.ku_max, lr, lp, sep]
        for t, m, lr, lp, sep in zip(
            run.times, run.monitors, run.ramp_lengths, run.projected_lengths, run.separation,
        )
    ]


def _summary(ctx, checks):
    traj = ctx.trajectory
    final = traj.final
    final_length = ctx.ramp_run.projected_lengths[-1] if ctx.ramp_run is not None else final.monitor.L
    summary = {
        'name': ctx.config.name,
        'version': ctx.config.version,
        'background': ctx.background.name,
        'curve': ctx.curve.label,
        'N': ctx.curve.N,
        'status': traj.status.value,
        'steps': traj.steps,
        'samples': len(traj.samples),
        'initial_length': traj.L0,
        'final_time': final.t,
        'final_length': final_length,
        'k_max': float(np.max(traj.series('k_max'))),
        'checks': [check.as_dict() for check in checks],
        'passed': all(check.passed for check in checks),
    }
    if ctx.ramp_run is not None:
        summary['ramp'] = ctx.ramp_run.summary()
    return summary


def _record(result):
    from .models import CheckResult, ScenarioRun

    summary = result.summary
    run = ScenarioRun.objects.create(
        name=result.config.name,
        background=summary['background'],
        config=result.config.as_dict(),
        status=summary['status'],
        exit_code=result.exit_code,
        final_time=summary['final_time'],
        final_length=summary['final_length'],
        output_prefix=str(result.context.prefix),
    )
    CheckResult.objects.bulk_create([
        CheckResult(
            suite=check.suite, name=check.name, passed=check.passed,
            measured=check.measured if check.measured is None or math.isfinite(check.measured) else None,
            tolerance=check.tolerance, runtime=check.runtime, run=run,
        )
        for check in result.checks
    ])
    return run


def run_scenario(cfg, record=False):
    """
    Run ``cfg`` end to end and export its files.

    Invariant violations raised along the way (a ramp losing u > 0, a
    background leaving its chart) propagate; failed checks only set the
    result's exit code. ``record`` stores a ScenarioRun with its checks.
    """
    bg = cfg.resolve()
    t0, t1 = (float(t) for t in cfg.interval)
    curve = build_curve(cfg.curve, bg, cfg.N, cfg.seed)
    if cfg.polygon:
        curve = geodesic_polygon(curve, cfg.polygon, bg, t0)
    flow_cfg = cfg.flow_config()
    prefix = output_prefix(cfg.name, cfg.output)
    snapshot = SnapshotWriter(prefix) if flow_cfg.snapshot_stride else None
    logger.info(f'Scenario {cfg.name}: {curve.label} in {bg.name} over [{t0:g}, {t1:g}]')

    ramp_run = None
    if cfg.lam is not None:
        ramp_run = ramp_flow_run(curve, cfg.lam, bg, (t0, t1), flow_cfg, snapshot=snapshot)
        traj = ramp_run.trajectory
    else:
        traj = flow_run(curve, bg, (t0, t1), flow_cfg, snapshot=snapshot)

    ctx = ScenarioContext(cfg, bg, curve, traj, ramp_run, prefix)
    ctx.files.append(write_csv(suffixed(prefix, 'monitors.csv'), MONITOR_HEADERS, traj.monitor_rows()))
    if ramp_run is not None:
        ctx.files.append(write_csv(suffixed(prefix, 'ramp.csv'), RAMP_HEADERS, _ramp_rows(ramp_run)))

    checks = [evaluate_check(name, ctx) for name in cfg.checks]
    summary = _summary(ctx, checks)
    ctx.files.append(write_json(suffixed(prefix, 'summary.json'), summary))
    if snapshot is not None:
        ctx.files.extend(snapshot.paths)

    result = ScenarioResult(cfg, ctx, checks, summary)
    for check in checks:
        log = logger.info if check.passed else logger.warning
        log(check.summary)
    if record:
        result.record = _record(result)
    return result


def run_sweep(cfg, lambdas, jobs=1):
    """
    λ sweep of the scenario's loop; writes ``<prefix>_sweep.json``.

    Returns the ConvergenceReport and the path written.
    """
    bg = cfg.resolve()
    t0 = float(cfg.interval[0])
    curve = build_curve(cfg.curve, bg, cfg.N, cfg.seed)
    if cfg.polygon:
        curve = geodesic_polygon(curve, cfg.polygon, bg, t0)
    report = lambda_sweep(curve, lambdas, bg, tuple(cfg.interval), cfg.flow_config(), jobs=jobs)
    payload = dict(report.as_dict(), name=cfg.name, background=bg.name, curve=curve.label)
    path = write_json(suffixed(output_prefix(cfg.name, cfg.output), 'sweep.json'), payload)
    return report, path


def run_family(cfg, jobs=1):
    """
    Width-or-short verdicts for the scenario's ``family``; writes ``<prefix>_family.json``.

    Every member is built at the scenario's N and seed, replaced by its
    geodesic polygon through ``polygon`` anchors (N when unset) and flowed
    as a ramp of circle length lambda. Returns the FamilyOutcome and the
    path written.
    """
    if not cfg.family:
        raise ScenarioError(f'Scenario {cfg.name} has no "family" key')
    if cfg.lam is None:
        raise ScenarioError(f'The family of {cfg.name} needs a lambda')
    bg = cfg.resolve()
    members = [build_curve(spec, bg, cfg.N, cfg.seed) for spec in cfg.family]
    outcome = deform_family(members, bg, cfg.lam, tuple(cfg.interval), cfg.flow_config(),
                            jobs=jobs, anchors=cfg.polygon)
    path = write_family_report(suffixed(output_prefix(cfg.name, cfg.output), 'family.json'), outcome)
    return outcome, path
