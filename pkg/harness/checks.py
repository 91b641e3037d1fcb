"""
Module: checks.py

The bundled acceptance checks, grouped into suites.

Every check is a function without arguments returning one CheckOutcome or
a list of them. Checks build their own inputs at fixed resolution and
seed, so their outcomes do not depend on the order or the process they
run in.
"""

import json
import logging
import math
import tempfile
import time
from dataclasses import replace
from pathlib import Path
from unittest import mock

import numpy as np
from django.conf import settings
from django.test import override_settings

from comparison.annulus import annulus_proxy
from comparison.exceptions import NotOracleCompatibleError
from comparison.ode import a_priori_extinction, cap_flow_reduction, extinction_bound, normalizing_constant
from comparison.oracle import SphericalCap, disk_area_rate, family_width, fit_oracle_disk, gauss_bonnet_check
from flow.concentration import curvature_concentration
from flow.convergence import halving_study, richardson_study, window_times
from flow.initializers import back_and_forth, base_point, cap_circle, circle
from flow.residuals import curvature_inequality_monitor, speed_identity_residual
from flow.solver import FlowConfig, Status, flow_run
from geometry.backgrounds import (
    CATALOG,
    ChartPoint,
    MetricBackground,
    product_with_circle,
    resolve_background,
    ricci_residual,
)
from geometry.scalar import homogeneous_scalar_ode
from ramps.ramp import lift
from ramps.run import ramp_flow_run, u_evolution_residual
from ramps.sweep import lambda_sweep

from .exporters import write_json
from .forms import load_scenario
from .reports import CheckOutcome
from .scenario import ScenarioConfig, run_family, run_scenario

logger = logging.getLogger(__name__)

SPATIAL_RATIO = 3.5
TEMPORAL_RATIO = 1.8
SPATIAL_LEVELS = [32, 64]
TEMPORAL_LEVELS = [5e-4, 2.5e-4, 1.25e-4]
SPATIAL_WINDOW = (0.02, 1e-4)
TEMPORAL_WINDOW = (0.05, 1e-3)
TEMPORAL_N = 32


def _fixed(**changes):
    return FlowConfig.from_settings(redistribute=False, **changes)


def _study_outcome(name, study):
    return CheckOutcome(
        name, study.passed, study.ratio, study.threshold,
        'exact' if study.exact else f'residuals {", ".join(f"{r:.3e}" for r in study.residuals)}',
    )


# Geometry

def check_ricci_flow_residual():
    """g(t + dt) - g(t) against -2 Ric dt at a sample point of every Ricci-flow family."""
    worst = 0.0
    for name in sorted(CATALOG):
        bg = resolve_background(name)
        if not bg.is_ricci_flow:
            continue
        x = ChartPoint(base_point(bg), bg.chart_id)
        worst = max(worst, ricci_residual(bg, x, 0.1, 1e-3))
    return CheckOutcome('ricci_flow_residual', worst <= 1e-9, worst, 1e-9)


def check_scalar_bound_equality():
    """R(0) = -6 follows -3/2 / (t + 1/4) exactly in the continuum."""
    series = homogeneous_scalar_ode(-6.0, 2.0, 1e-4)
    exact = -1.5 / (series.t + 0.25)
    measured = float(np.max(np.abs(series.R - exact)))
    return CheckOutcome('scalar_bound_equality', measured <= 1e-6, measured, 1e-6, series.bound_status)


def check_product_with_circle():
    """The circle factor is flat and Ricci-null and leaves R and |Rm| unchanged."""
    base = resolve_background('s3_shrinking')
    product = product_with_circle(base, 0.1)
    points = np.atleast_2d(np.concatenate([base_point(base), [0.03]]))
    U = product.circle_field(1)
    t = 0.1
    errors = [
        abs(product.ricci(points, U, U)[0]),
        abs(product.norm(points, t, U)[0] - 1.0),
        abs(product.scalar(t) - base.scalar(t)),
        abs(product.rm_bound(t) - base.rm_bound(t)),
        float(np.max(np.abs(product.christoffel(points, U)))),
    ]
    measured = max(errors)
    return CheckOutcome('product_with_circle', measured <= 1e-12, measured, 1e-12)


# Curve shortening

def check_shrinking_circle():
    """
    Unit circle in the flat torus against 2 pi sqrt(1 - 2t), N = 256, up to t = 0.375.

    The run must also finish within ``EXTLAB['RUNTIME_BUDGET']`` seconds.
    Only the verdict depends on the clock, so the report stays reproducible
    while the run is inside its budget.
    """
    torus = resolve_background('t3_flat')
    budget = settings.EXTLAB.get('RUNTIME_BUDGET', 10.0)
    started = time.perf_counter()
    traj = flow_run(circle(torus, 256), torus, (0.0, 0.375), FlowConfig.from_settings(samples=75))
    elapsed = time.perf_counter() - started
    exact = 2.0 * math.pi * np.sqrt(1.0 - 2.0 * traj.times)
    measured = float(np.max(np.abs(traj.series('L') - exact) / exact))
    in_time = elapsed <= budget
    if not in_time:
        logger.warning(f'shrinking_circle took {elapsed:.2f}s, budget {budget:g}s')
    passed = traj.status == Status.COMPLETED and measured <= 5e-3 and in_time
    detail = traj.status.value if in_time else f'{traj.status.value}, over the {budget:g}s budget'
    return CheckOutcome('shrinking_circle', passed, measured, 5e-3, detail)


def check_concentration():
    """
    I_B of the shrinking unit circle with B = 4 pi is [0, 3/8].

    The circle's energy is 2 pi / r with r^2 = 1 - 2t. The full report goes
    to ``<REPORT_DIR>/concentration.json``.
    """
    torus = resolve_background('t3_flat')
    traj = flow_run(circle(torus, 64), torus, (0.0, 0.45), FlowConfig.from_settings(samples=45))
    report = curvature_concentration(traj, B=4.0 * math.pi, eps=1.0, r=0.5)
    write_json(Path(settings.EXTLAB['REPORT_DIR']) / 'concentration.json',
               dict(report.as_dict(), swept_area=traj.swept_area(), status=traj.status.value))
    measured = abs(report.energy_measure - 0.375)
    return CheckOutcome('concentration', measured <= 1e-2, measured, 1e-2,
                        f'{len(report.spread_runs)} J_B runs, max scaling {report.max_scaling:.4g}')


def _speed_residual_spatial(bg, make):
    t_mid, delta = SPATIAL_WINDOW

    def residual(N):
        times = window_times(0.0, t_mid, delta)
        traj = flow_run(make(N), bg, (0.0, times[-1]), _fixed(), sample_times=times)
        return speed_identity_residual(traj, bg, 0).at(t_mid)

    return residual


def _speed_residual_temporal(bg, make):
    t_mid, delta = TEMPORAL_WINDOW

    def residual(dt):
        times = window_times(0.0, t_mid, delta)
        traj = flow_run(make(TEMPORAL_N), bg, (0.0, times[-1]), _fixed(dt=dt), sample_times=times)
        return speed_identity_residual(traj, bg, 0).at(t_mid)

    return residual


def _speed_cases():
    torus = resolve_background('t3_flat')
    s3 = resolve_background('s3_shrinking')
    return [
        ('circle', torus, lambda N: circle(torus, N)),
        ('cap', s3, lambda N: cap_circle(s3, N, math.pi / 3.0)),
    ]


def check_speed_identity_convergence():
    """Tangent speed identity under halving h (order 2) and halving dt (order 1)."""
    outcomes = []
    for label, bg, make in _speed_cases():
        spatial = halving_study(f'speed_h_{label}', SPATIAL_LEVELS, _speed_residual_spatial(bg, make), SPATIAL_RATIO)
        temporal = richardson_study(f'speed_dt_{label}', TEMPORAL_LEVELS, _speed_residual_temporal(bg, make), TEMPORAL_RATIO)
        outcomes += [_study_outcome(spatial.name, spatial), _study_outcome(temporal.name, temporal)]
    return outcomes


_christoffel = MetricBackground.christoffel


def _negated_christoffel(self, points, V):
    return -_christoffel(self, points, V)


def check_mutation_christoffel():
    """
    With the connection's sign flipped the speed identity must stop converging.

    The check passes when the spatial study on the S^3 cap fails.
    """
    s3 = resolve_background('s3_shrinking')
    with mock.patch.object(MetricBackground, 'christoffel', _negated_christoffel):
        study = halving_study(
            'speed_h_cap_mutated', SPATIAL_LEVELS,
            _speed_residual_spatial(s3, lambda N: cap_circle(s3, N, math.pi / 3.0)), SPATIAL_RATIO,
        )
    return CheckOutcome('mutation_christoffel', not study.passed, study.ratio, SPATIAL_RATIO,
                        'mutant detected' if not study.passed else 'mutant survived')


def check_curvature_inequality():
    torus = resolve_background('t3_flat')
    s3 = resolve_background('s3_shrinking')
    outcomes = []
    for label, bg, curve in (('circle', torus, circle(torus, 32)), ('cap', s3, cap_circle(s3, 48, 1.0))):
        traj = flow_run(curve, bg, (0.0, 0.1), _fixed(samples=10))
        margins = curvature_inequality_monitor(traj, bg)
        outcomes.append(CheckOutcome(f'curvature_inequality_{label}', margins.ok, margins.max, margins.tolerance))
    return outcomes


# Ramps

def _u_residual_spatial(bg, lam, make):
    product = product_with_circle(bg, lam)
    t_mid, delta = SPATIAL_WINDOW

    def residual(N):
        times = window_times(0.0, t_mid, delta)
        traj = flow_run(lift(make(N), lam).assemble(), product, (0.0, times[-1]), _fixed(), sample_times=times)
        return u_evolution_residual(traj, product).at(t_mid)

    return residual


def _u_residual_temporal(bg, lam, make):
    product = product_with_circle(bg, lam)
    t_mid, delta = TEMPORAL_WINDOW

    def residual(dt):
        times = window_times(0.0, t_mid, delta)
        curve = lift(make(TEMPORAL_N), lam).assemble()
        traj = flow_run(curve, product, (0.0, times[-1]), _fixed(dt=dt), sample_times=times)
        return u_evolution_residual(traj, product).at(t_mid)

    return residual


def check_u_evolution_convergence():
    """The u evolution identity on the flat helix and on a ramp over an S^3 cap."""
    torus = resolve_background('t3_flat')
    s3 = resolve_background('s3_shrinking')
    cases = [
        ('helix', torus, 0.1, lambda N: circle(torus, N, r=0.5)),
        ('s3_cap', s3, 0.1, lambda N: cap_circle(s3, N, math.pi / 3.0)),
    ]
    outcomes = []
    for label, bg, lam, make in cases:
        spatial = halving_study(f'u_h_{label}', SPATIAL_LEVELS, _u_residual_spatial(bg, lam, make), SPATIAL_RATIO)
        temporal = richardson_study(f'u_dt_{label}', TEMPORAL_LEVELS, _u_residual_temporal(bg, lam, make), TEMPORAL_RATIO)
        outcomes += [_study_outcome(spatial.name, spatial), _study_outcome(temporal.name, temporal)]
    return outcomes


RAMP_LOOP_N = 32
RAMP_INTERVAL = (0.0, 0.01)


def check_ramp_robustness():
    """
    The back-and-forth loop flows as a ramp; its direct flow hits the ceiling.

    Passes when the ramp run completes with finite k_max and u_min > 0 at
    every sample and the direct run ends in curvature_blowup. The loop folds
    exactly onto itself, so its centred tangent vanishes at the two turning
    vertices and the direct run stops on those cusps before its first step.
    """
    torus = resolve_background('t3_flat')
    loop = back_and_forth(torus, RAMP_LOOP_N)
    cfg = _fixed(samples=10)
    run = ramp_flow_run(loop, 0.1, torus, RAMP_INTERVAL, cfg)
    direct = flow_run(loop, torus, RAMP_INTERVAL, cfg)
    k_max = run.trajectory.series('k_max')
    u_min = float(np.min(run.u_min))
    passed = (
        run.status == Status.COMPLETED
        and run.trajectory.final.t == RAMP_INTERVAL[1]
        and bool(np.all(np.isfinite(k_max)))
        and u_min > 0
        and direct.status == Status.CURVATURE_BLOWUP
        and math.isinf(direct.samples[0].monitor.k_max)
    )
    return CheckOutcome('ramp_robustness', passed, u_min, 0.0,
                        f'ramp {run.status.value} after {run.trajectory.steps} steps, '
                        f'direct {direct.status.value} after {direct.steps} steps')


def check_lambda_convergence():
    """Projected ramp flows approach the direct flow of a circle at order >= 1 in lambda."""
    torus = resolve_background('t3_flat')
    report = lambda_sweep(circle(torus, 64, r=0.5), [0.2, 0.1, 0.05], torus, (0.0, 0.05),
                          FlowConfig.from_settings(samples=5))
    order = report.order if report.order is not None else math.nan
    passed = report.order is not None and report.order >= 1.0
    detail = ', '.join(f'{d:.3e}' for d in report.distances)
    return CheckOutcome('lambda_convergence', passed, order, 1.0, detail)


# Comparison

CAP_RADII = (math.pi / 6.0, math.pi / 3.0, math.pi / 2.0)


def check_cap_sharpness():
    """Cap areas on the shrinking S^3 follow the comparison ODE with equality."""
    s3 = resolve_background('s3_shrinking')
    outcomes = []
    for phi0 in CAP_RADII:
        reduction = cap_flow_reduction(phi0, s3, (0.0, 0.2499), dt=1e-4)
        worst = float(np.max(reduction.relative_margin[:-1]))
        # A cap through the equator keeps its angle and vanishes with the sphere.
        extinction = reduction.extinction_t if reduction.extinction_t is not None else s3.extinction_time()
        passed = worst <= 1e-2 and extinction <= 0.25
        outcomes.append(CheckOutcome(f'cap_sharpness_phi={phi0:.4f}', passed, worst, 1e-2,
                                     f'extinction {extinction:.6g}'))
    return outcomes


def check_gauss_bonnet():
    pairs = [(phi, a) for phi in np.linspace(0.1, 3.0, 5) for a in (0.5, 1.0, 2.0, 4.0)]
    measured = max(gauss_bonnet_check(SphericalCap(float(phi), a)) for phi, a in pairs)
    return CheckOutcome('gauss_bonnet', measured <= 1e-10, measured, 1e-10, f'{len(pairs)} caps')


def _oracle_width(curve, bg, t):
    try:
        return fit_oracle_disk(curve, bg, t).area()
    except NotOracleCompatibleError:
        return math.nan


def check_extinction_chain():
    """
    extinction_bound from the hemisphere width, then simulated caps closing up.

    The hemisphere width 2 pi gives T = 1/4, the extinction of the sphere
    itself. Every simulated cap boundary must shrink to a point by T + 1%.
    """
    s3 = resolve_background('s3_shrinking')
    const = normalizing_constant(s3)
    T = extinction_bound(2.0 * math.pi, s3, const=const)
    ceiling = a_priori_extinction(2.0 * math.pi, 0.0, const)
    outcomes = [CheckOutcome('extinction_bound', T <= 0.25 + 1e-9 and T <= ceiling, T, 0.25,
                             f'a priori {ceiling:.6g}')]
    for phi0 in CAP_RADII[:2]:
        traj = flow_run(cap_circle(s3, 64, phi0), s3, (0.0, 0.2499), FlowConfig.from_settings(samples=50))
        final = traj.final
        width = _oracle_width(final.curve, s3, final.t)
        initial = _oracle_width(traj.samples[0].curve, s3, 0.0)
        passed = traj.status == Status.EXTINCT_SHORT and final.t <= 1.01 * T
        outcomes.append(CheckOutcome(f'extinction_chain_phi={phi0:.4f}', passed, final.t, 1.01 * T,
                                     f'width {initial:.4g} -> {width:.3e}'))
    return outcomes


def check_extinction_monotone():
    """Larger initial widths never go extinct earlier."""
    s3 = resolve_background('s3_shrinking')
    widths = [math.pi / 4.0, math.pi / 2.0, math.pi, 2.0 * math.pi]
    times = [extinction_bound(A0, s3) for A0 in widths]
    steps = np.diff(times)
    return CheckOutcome('extinction_monotone', bool(np.all(steps >= 0)), float(np.min(steps)), 0.0,
                        ', '.join(f'{t:.6g}' for t in times))


def check_annulus_flat_equality():
    """Concentric flat circles keep their annulus area under the flow."""
    torus = resolve_background('t3_flat')
    cfg = FlowConfig.from_settings(samples=10)
    outer = flow_run(circle(torus, 128, r=1.0), torus, (0.0, 0.1), cfg)
    inner = flow_run(circle(torus, 128, r=0.5), torus, (0.0, 0.1), cfg)
    series = annulus_proxy(outer, inner, torus)
    passed = series.relative_spread <= 1e-2 and series.growth is not None and series.growth.ok
    return CheckOutcome('annulus_flat_equality', passed, series.relative_spread, 1e-2)


def check_area_bookkeeping():
    """
    Area flux of the flow against the disk oracle.

    The area swept by a flat circle equals the drop of its oracle width,
    and the first variation of a shrinking cap's area matches the reduced
    cap flow at every tenth step.
    """
    torus = resolve_background('t3_flat')
    traj = flow_run(circle(torus, 128), torus, (0.0, 0.2), FlowConfig.from_settings(samples=20))
    drop = (family_width([traj.samples[0].curve], torus, 0.0)
            - family_width([traj.final.curve], torus, traj.final.t))
    swept = traj.swept_area()
    flux = abs(swept - drop) / drop
    outcomes = [CheckOutcome('swept_area', flux <= 1e-2, flux, 1e-2, f'swept {swept:.6g}, width drop {drop:.6g}')]

    s3 = resolve_background('s3_shrinking')
    reduction = cap_flow_reduction(math.pi / 3.0, s3, (0.0, 0.2), dt=1e-4)
    worst = 0.0
    for t, phi, rate in zip(reduction.t[:-1:10], reduction.phi[:-1:10], reduction.rate[:-1:10]):
        t = float(t)
        expected = disk_area_rate(SphericalCap(float(phi), math.sqrt(s3.scale_factor(t))), s3, t).total
        worst = max(worst, abs(rate - expected) / abs(expected))
    outcomes.append(CheckOutcome('disk_area_rate', worst <= 1e-2, float(worst), 1e-2))
    return outcomes


def check_family_dichotomy():
    """The bundled cap family (constant map, sharp cap, tiny cap) gives short, width_bounded, short."""
    cfg = load_scenario('cap_family')
    with override_settings(EXTLAB=dict(settings.EXTLAB, OUTPUT_PREFIX='')):
        with tempfile.TemporaryDirectory() as directory:
            outcome, path = run_family(replace(cfg, output=str(Path(directory) / cfg.name)))
            exported = json.loads(Path(path).read_text(encoding='utf-8'))
    expected = ['short', 'width_bounded', 'short']
    passed = outcome.verdicts == expected and [row['verdict'] for row in exported] == expected
    return CheckOutcome('family_dichotomy', passed, outcome.xi, None, ', '.join(outcome.verdicts))


# Harness

def _small_scenario(name):
    return ScenarioConfig(
        name=name,
        background='s3_shrinking',
        curve={'kind': 'cap_circle', 'phi': 1.0},
        interval=(0.0, 0.05),
        N=32,
        samples=10,
        checks=('length_identity', 'lemma'),
    )


def _scenario_bytes(cfg, directory):
    result = run_scenario(replace(cfg, output=str(Path(directory) / cfg.name)))
    return [Path(path).read_bytes() for path in result.files]


def check_determinism():
    """The same scenario twice gives byte-identical files."""
    cfg = _small_scenario('determinism')
    with override_settings(EXTLAB=dict(settings.EXTLAB, OUTPUT_PREFIX='')):
        with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
            a = _scenario_bytes(cfg, first)
            b = _scenario_bytes(cfg, second)
    differing = sum(x != y for x, y in zip(a, b)) + abs(len(a) - len(b))
    return CheckOutcome('determinism', differing == 0, float(differing), 0.0, f'{len(a)} files')


def check_constant_scenario():
    """A constant loop stays put and the scenario exits 0."""
    cfg = ScenarioConfig(
        name='constant', background='s3_shrinking', curve={'kind': 'constant'},
        interval=(0.0, 0.1), N=16, samples=4, checks=('length_identity',),
    )
    with override_settings(EXTLAB=dict(settings.EXTLAB, OUTPUT_PREFIX='')):
        with tempfile.TemporaryDirectory() as directory:
            result = run_scenario(replace(cfg, output=str(Path(directory) / cfg.name)))
    first = result.trajectory.samples[0].curve.points
    drift = max(float(np.max(np.abs(s.curve.points - first))) for s in result.trajectory.samples)
    passed = result.exit_code == 0 and drift == 0.0
    return CheckOutcome('constant_scenario', passed, drift, 0.0, result.trajectory.status.value)


SUITES = {
    'geometry': [
        check_ricci_flow_residual,
        check_scalar_bound_equality,
        check_product_with_circle,
    ],
    'csf': [
        check_shrinking_circle,
        check_speed_identity_convergence,
        check_mutation_christoffel,
        check_curvature_inequality,
        check_concentration,
    ],
    'ramp': [
        check_u_evolution_convergence,
        check_ramp_robustness,
        check_lambda_convergence,
    ],
    'comparison': [
        check_cap_sharpness,
        check_gauss_bonnet,
        check_extinction_chain,
        check_extinction_monotone,
        check_annulus_flat_equality,
        check_area_bookkeeping,
        check_family_dichotomy,
    ],
    'harness': [
        check_determinism,
        check_constant_scenario,
    ],
}
