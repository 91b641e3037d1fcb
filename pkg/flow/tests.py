import math

import numpy as np
from django.test import SimpleTestCase, override_settings

from geometry.backgrounds import resolve_background

from .concentration import curvature_concentration, energy_measure, max_arc_curvature
from .convergence import fitted_order, halving_study, richardson_study
from .curves import DiscreteCurve, curve_geometry, edge_lengths
from .distance import hausdorff
from .exceptions import CFLViolationError, DegenerateCurveError, FlowError, GeodesicError
from .initializers import back_and_forth, build_curve, cap_circle, circle, constant, great_circle
from .polygon import allocate, geodesic_polygon, join_anchors
from .residuals import (
    curvature_inequality_monitor, growth_envelope, length_identity_residual,
    length_inequality_monitor, speed_identity_residual, total_curvature_monitor,
)
from .solver import FlowConfig, Status, csf_step, flow_run, monitors, redistribute

TORUS = resolve_background('t3_flat')
S3 = resolve_background('s3_shrinking')
S2 = resolve_background('s2_static')


def flat_geodesic(N=64):
    """The closed geodesic x -> (2 pi x, 0.5, 0.5) of the flat torus."""
    points = np.zeros((N, 3))
    points[:, 0] = 2.0 * np.pi * np.arange(N) / N
    points[:, 1:] = 0.5
    return DiscreteCurve(points, TORUS.chart_id, shift=[2.0 * np.pi, 0.0, 0.0], label='geodesic')


def fixed(**changes):
    return FlowConfig(**dict({'redistribute': False}, **changes))


class CurveGeometryTests(SimpleTestCase):
    def test_great_circle_is_geodesic(self):
        k_max = [curve_geometry(great_circle(S3, N), S3, 0.1).k_max for N in (64, 128)]
        self.assertLess(k_max[0], 1e-2)
        self.assertGreater(k_max[0] / k_max[1], 3.5)

    def test_planar_circle(self):
        for r in (0.5, 1.0, 2.0):
            geo = curve_geometry(circle(TORUS, 128, r=r), TORUS, 0.0)
            np.testing.assert_allclose(geo.k, 1.0 / r, rtol=1e-3)

    def test_geodesic_circle_on_sphere(self):
        errors = []
        for N in (64, 128):
            geo = curve_geometry(cap_circle(S2, N, np.pi / 3.0), S2, 0.0)
            errors.append(np.max(np.abs(geo.k - 1.0 / math.sqrt(3.0))))
        self.assertLess(errors[1], 2e-3)
        self.assertGreater(errors[0] / errors[1], 3.0)

    def test_unit_tangent_and_orthogonality(self):
        c = cap_circle(S3, 64, 1.0)
        geo = curve_geometry(c, S3, 0.05)
        np.testing.assert_allclose(S3.inner(c.points, 0.05, geo.S, geo.S), 1.0, atol=1e-10)
        self.assertLess(np.max(np.abs(S3.inner(c.points, 0.05, geo.H, geo.S))), 1e-10)

    def test_degenerate_edge(self):
        points = circle(TORUS, 32).points
        points[5] = points[4]
        with self.assertRaises(DegenerateCurveError):
            curve_geometry(DiscreteCurve(points, TORUS.chart_id), TORUS, 0.0)

    def test_back_and_forth_has_cusps(self):
        geo = curve_geometry(back_and_forth(TORUS, 64), TORUS, 0.0)
        self.assertTrue(math.isinf(geo.k_max))

    def test_constant_curve(self):
        geo = curve_geometry(constant(S3, 32), S3, 0.0)
        self.assertEqual(geo.k_max, 0.0)
        self.assertEqual(float(np.sum(geo.ds)), 0.0)

    def test_too_few_vertices(self):
        with self.assertRaises(FlowError):
            DiscreteCurve(np.zeros((8, 3)), TORUS.chart_id)


class MonitorTests(SimpleTestCase):
    def test_unit_circle(self):
        sample = monitors(circle(TORUS, 128), TORUS, 0.0)
        self.assertAlmostEqual(sample.L / (2 * np.pi), 1.0, delta=2e-3)
        self.assertAlmostEqual(sample.theta / (2 * np.pi), 1.0, delta=2e-3)
        self.assertAlmostEqual(sample.k2int / (2 * np.pi), 1.0, delta=2e-3)

    def test_total_curvature_is_scale_invariant(self):
        small = monitors(circle(TORUS, 64, r=1.0), TORUS, 0.0)
        large = monitors(circle(TORUS, 64, r=2.0), TORUS, 0.0)
        self.assertAlmostEqual(small.theta, large.theta, places=10)

    def test_geodesic_loop(self):
        sample = monitors(flat_geodesic(), TORUS, 0.0)
        self.assertAlmostEqual(sample.L, 2 * np.pi, places=10)
        self.assertAlmostEqual(sample.theta, 0.0, delta=1e-9)
        self.assertAlmostEqual(sample.k2int, 0.0, delta=1e-9)


class StepTests(SimpleTestCase):
    def test_geodesic_is_fixed(self):
        c = flat_geodesic()
        cfg = FlowConfig()
        dt = cfg.cfl * curve_geometry(c, TORUS, 0.0).h ** 2
        np.testing.assert_allclose(csf_step(c, TORUS, 0.0, dt, cfg).points, c.points, atol=1e-12)

    def test_cfl_violation(self):
        c = circle(TORUS, 64)
        h = curve_geometry(c, TORUS, 0.0).h
        with self.assertRaises(CFLViolationError):
            csf_step(c, TORUS, 0.0, 2.0 * h ** 2, FlowConfig(cfl=0.2))

    def test_redistribution_equalizes_spacing(self):
        x = 2.0 * np.pi * np.arange(64) / 64
        x = x + 0.3 * np.sin(x)
        points = np.column_stack([np.cos(x), np.sin(x), np.zeros(64)])
        c = redistribute(DiscreteCurve(points, TORUS.chart_id), TORUS, 0.0)
        edges = edge_lengths(c, TORUS, 0.0)
        self.assertLess(np.std(edges) / np.mean(edges), 1e-3)
        np.testing.assert_array_equal(c.points[0], points[0])

    def test_redistribution_keeps_period_shift(self):
        c = flat_geodesic()
        np.testing.assert_allclose(redistribute(c, TORUS, 0.0).points, c.points, atol=1e-12)


class FlowRunTests(SimpleTestCase):
    def test_shrinking_circle(self):
        traj = flow_run(circle(TORUS, 128), TORUS, (0.0, 0.375), FlowConfig(samples=15))
        self.assertEqual(traj.status, Status.COMPLETED)
        exact = 2 * np.pi * np.sqrt(1.0 - 2.0 * traj.times)
        np.testing.assert_allclose(traj.series('L'), exact, rtol=5e-3)
        np.testing.assert_allclose(traj.series('theta'), 2 * np.pi, rtol=1e-2)
        self.assertTrue(np.all(np.diff(traj.times) > 0))
        self.assertEqual(traj.times[-1], 0.375)

    def test_circle_on_static_sphere(self):
        phi0 = np.pi / 3.0
        traj = flow_run(cap_circle(S2, 64, phi0), S2, (0.0, 0.3), FlowConfig(samples=6))
        for sample in traj.samples:
            measured = float(np.mean(sample.curve.points[:, 2]))
            self.assertAlmostEqual(measured / (math.cos(phi0) * math.exp(sample.t)), 1.0, delta=1e-2)

    def test_geodesic_drift(self):
        c = flat_geodesic(32)
        cfg = FlowConfig()
        dt = cfg.cfl * curve_geometry(c, TORUS, 0.0).h ** 2
        traj = flow_run(c, TORUS, (0.0, 1000 * dt), cfg.but(dt=dt, samples=1))
        self.assertEqual(traj.steps, 1000)
        self.assertLessEqual(hausdorff(traj.final.curve, c), 1e-8)

    def test_constant_loop_stays(self):
        c = constant(S3, 32)
        traj = flow_run(c, S3, (0.0, 0.1), FlowConfig(samples=4))
        self.assertEqual(len(traj.samples), 5)
        for sample in traj.samples:
            np.testing.assert_array_equal(sample.curve.points, c.points)
            self.assertEqual(sample.monitor.L, 0.0)

    def test_back_and_forth_blows_up(self):
        traj = flow_run(back_and_forth(TORUS, 32), TORUS, (0.0, 0.01), FlowConfig())
        self.assertEqual(traj.status, Status.CURVATURE_BLOWUP)
        self.assertEqual(traj.steps, 0)
        self.assertTrue(math.isinf(traj.final.monitor.k_max))

    def test_tiny_circle_goes_extinct(self):
        traj = flow_run(circle(TORUS, 32, r=0.1), TORUS, (0.0, 0.01), FlowConfig(samples=10))
        self.assertEqual(traj.status, Status.EXTINCT_SHORT)
        self.assertLess(traj.final.t, 0.0051)

    def test_early_stop_is_snapshotted(self):
        taken = []
        traj = flow_run(circle(TORUS, 32, r=0.1), TORUS, (0.0, 0.01), FlowConfig(samples=10, snapshot_stride=100),
                        snapshot=lambda index, t, c: taken.append((index, t)))
        self.assertEqual(traj.status, Status.EXTINCT_SHORT)
        self.assertEqual(taken[0], (0, 0.0))
        self.assertEqual(taken[-1][1], traj.final.t)
        self.assertLess(taken[-1][0], 10)

    def test_interval_outside_domain(self):
        with self.assertRaises(FlowError):
            flow_run(great_circle(S3, 32), S3, (0.0, 0.3), FlowConfig())

    def test_swept_area(self):
        traj = flow_run(circle(TORUS, 64), TORUS, (0.0, 0.1), FlowConfig(samples=10))
        self.assertAlmostEqual(traj.swept_area() / (2 * np.pi * 0.1), 1.0, delta=1e-2)

    @override_settings(EXTLAB={'CFL': 0.1, 'CURVATURE_CEILING': 50.0, 'AMBIENT_CONSTANT_FACTOR': 5.0,
                               'EXTINCTION_FRACTION': 0.1, 'SNAPSHOT_STRIDE': 3})
    def test_config_from_settings(self):
        cfg = FlowConfig.from_settings(redistribute=False, dt=None)
        self.assertEqual(cfg.cfl, 0.1)
        self.assertEqual(cfg.ceiling, 50.0)
        self.assertEqual(cfg.ambient_factor, 5.0)
        self.assertEqual(cfg.snapshot_stride, 3)
        self.assertFalse(cfg.redistribute)
        self.assertIsNone(cfg.dt)


class PolygonTests(SimpleTestCase):
    def test_identity_when_every_vertex_is_an_anchor(self):
        c = cap_circle(S3, 32, 1.0)
        np.testing.assert_allclose(geodesic_polygon(c, 32, S3, 0.0).points, c.points, atol=1e-14)

    def test_square_in_flat_torus(self):
        c = geodesic_polygon(circle(TORUS, 64), 4, TORUS, 0.0)
        geo = curve_geometry(c, TORUS, 0.0)
        corners = np.arange(0, 64, 16)
        straight = np.setdiff1d(np.arange(64), corners)
        self.assertLess(np.max(geo.k[straight]), 1e-8)
        self.assertGreater(np.min(geo.k[corners]), 1.0)

    def test_corner_curvature_grows_with_resolution(self):
        for N in (64, 128):
            geo = curve_geometry(geodesic_polygon(circle(TORUS, N), 4, TORUS, 0.0), TORUS, 0.0)
            corners = np.arange(0, N, N // 4)
            # Right angles: k ds = 2 tan(pi / 4) and k = N / 2 for sides of length sqrt(2).
            np.testing.assert_allclose(geo.k[corners] * geo.ds[corners], 2.0, rtol=1e-9)
            np.testing.assert_allclose(geo.k[corners], N / 2.0, rtol=1e-9)

    def test_anchors_on_great_circle(self):
        c = geodesic_polygon(great_circle(S3, 48), 3, S3, 0.0)
        np.testing.assert_allclose(np.linalg.norm(c.points, axis=1), 1.0, atol=1e-12)
        self.assertLess(np.max(np.abs(c.points[:, 2:])), 1e-10)

    def test_close_anchors(self):
        anchors = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        with self.assertRaises(GeodesicError):
            join_anchors(anchors, TORUS, 0.0, 32, TORUS.chart_id)

    def test_antipodal_anchors(self):
        anchors = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0], [-1.0, 0, 0, 0]])
        with self.assertRaises(GeodesicError):
            join_anchors(anchors, S3, 0.0, 32, S3.chart_id)

    def test_allocation(self):
        counts = allocate([1.0, 2.0, 0.001, 3.0], 64)
        self.assertEqual(counts.sum(), 64)
        self.assertGreaterEqual(counts.min(), 1)

    def test_polyline_initializer(self):
        anchors = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]]
        c = build_curve({'kind': 'polyline', 'anchors': anchors}, TORUS, 40)
        self.assertAlmostEqual(float(np.sum(edge_lengths(c, TORUS, 0.0))), 4.0, places=10)
        jittered = build_curve({'kind': 'polyline', 'anchors': anchors, 'jitter': 0.01}, TORUS, 40, seed=7)
        again = build_curve({'kind': 'polyline', 'anchors': anchors, 'jitter': 0.01}, TORUS, 40, seed=7)
        np.testing.assert_array_equal(jittered.points, again.points)

    def test_unknown_initializer(self):
        with self.assertRaises(FlowError):
            build_curve({'kind': 'figure_eight'}, TORUS, 32)


class ResidualTests(SimpleTestCase):
    def test_speed_identity_on_geodesic(self):
        traj = flow_run(flat_geodesic(32), TORUS, (0.0, 0.1), fixed(samples=4))
        self.assertLessEqual(speed_identity_residual(traj, TORUS, 3).max, 1e-10)

    def test_speed_identity_converges_on_circle(self):
        def residual(N):
            traj = flow_run(circle(TORUS, N), TORUS, (0.0, 0.1), fixed(samples=10))
            return speed_identity_residual(traj, TORUS, 0).max

        study = halving_study('speed', [32, 64], residual, threshold=3.5)
        self.assertTrue(study.passed, study.as_dict())

    def test_speed_identity_needs_fixed_parameter(self):
        traj = flow_run(circle(TORUS, 32), TORUS, (0.0, 0.01), FlowConfig(samples=4))
        with self.assertRaises(FlowError):
            speed_identity_residual(traj, TORUS, 0)

    def test_length_identity_on_circle(self):
        traj = flow_run(circle(TORUS, 64), TORUS, (0.0, 0.2), FlowConfig(samples=20))
        series = length_identity_residual(traj, TORUS)
        exact = -2 * np.pi / np.sqrt(1.0 - 2.0 * series.t)
        np.testing.assert_allclose(series.measured, exact, rtol=1e-2)
        self.assertLess(np.max(series.relative()), 1e-2)

    def test_length_identity_on_shrinking_great_circle(self):
        traj = flow_run(great_circle(S3, 64), S3, (0.0, 0.2), FlowConfig(samples=20))
        series = length_identity_residual(traj, S3)
        a = np.sqrt(1.0 - 4.0 * series.t)
        np.testing.assert_allclose(series.measured, -4 * np.pi / a, rtol=1e-2)
        self.assertLess(np.max(series.relative()), 1e-2)

    def test_geodesic_length_is_constant(self):
        traj = flow_run(flat_geodesic(32), TORUS, (0.0, 0.01), FlowConfig(samples=4))
        self.assertLess(np.max(np.abs(length_identity_residual(traj, TORUS).measured)), 1e-9)

    def test_too_few_samples(self):
        traj = flow_run(circle(TORUS, 32), TORUS, (0.0, 0.01), fixed(samples=1))
        with self.assertRaises(FlowError):
            speed_identity_residual(traj, TORUS, 0)


class InequalityMonitorTests(SimpleTestCase):
    def test_flat_circle_curvature_inequality(self):
        traj = flow_run(circle(TORUS, 32), TORUS, (0.0, 0.2), fixed(samples=20))
        margins = curvature_inequality_monitor(traj, TORUS)
        self.assertTrue(margins.ok, margins.violations)
        self.assertLess(margins.max, 1e-6)

    def test_geodesic_margin_is_negative(self):
        traj = flow_run(great_circle(S3, 32), S3, (0.0, 0.1), fixed(samples=5))
        self.assertLess(curvature_inequality_monitor(traj, S3).max, 0.0)

    def test_length_and_total_curvature_inequalities(self):
        traj = flow_run(cap_circle(S3, 48, 1.0), S3, (0.0, 0.1), FlowConfig(samples=10))
        self.assertTrue(length_inequality_monitor(traj, S3).ok)
        self.assertTrue(total_curvature_monitor(traj, S3).ok)

    def test_growth_envelope(self):
        traj = flow_run(cap_circle(S3, 48, 1.0), S3, (0.0, 0.1), FlowConfig(samples=10))
        envelopes = growth_envelope(traj, S3)
        self.assertEqual(set(envelopes), {'L', 'theta'})
        for margins in envelopes.values():
            self.assertTrue(margins.ok)

    def test_flat_lengths_do_not_grow(self):
        traj = flow_run(circle(TORUS, 32), TORUS, (0.0, 0.2), FlowConfig(samples=10))
        self.assertTrue(growth_envelope(traj, TORUS)['L'].ok)


class ConcentrationTests(SimpleTestCase):
    def test_geodesic_loop(self):
        traj = flow_run(flat_geodesic(32), TORUS, (0.0, 0.01), FlowConfig(samples=5))
        report = curvature_concentration(traj, B=1.0, eps=0.1, r=0.5)
        self.assertEqual(report.energy_runs, [(0.0, 0.01)])
        self.assertAlmostEqual(report.energy_measure, 0.01)
        self.assertLess(report.max_scaling, 1e-12)

    def test_energy_window_before_blowup(self):
        traj = flow_run(circle(TORUS, 32), TORUS, (0.0, 0.49), FlowConfig(samples=49))
        report = curvature_concentration(traj, B=2 * np.pi / 0.2, eps=1.0, r=0.1)
        self.assertEqual(report.energy_runs[0][0], 0.0)
        self.assertGreater(report.energy_measure, 0.45)
        self.assertLess(report.energy_measure, 0.49)

    def test_energy_measure_weights_by_spacing(self):
        self.assertAlmostEqual(energy_measure([0.0, 0.1, 0.2, 0.3], [False, True, False, False]), 0.1)
        self.assertAlmostEqual(energy_measure([0.0, 0.1, 0.4], [True, True, True]), 0.4)
        self.assertAlmostEqual(energy_measure([0.0, 0.1, 0.4], [False, False, True]), 0.15)
        self.assertEqual(energy_measure([0.2], [True]), 0.0)

    def test_arc_curvature(self):
        geo = curve_geometry(circle(TORUS, 64), TORUS, 0.0)
        self.assertAlmostEqual(max_arc_curvature(geo.k, geo.ds, np.pi), np.pi, delta=0.2)


class DistanceTests(SimpleTestCase):
    def test_concentric_circles(self):
        self.assertAlmostEqual(hausdorff(circle(TORUS, 64), circle(TORUS, 64, r=1.1)), 0.1, delta=2e-3)

    def test_identical(self):
        c = circle(TORUS, 32)
        self.assertEqual(hausdorff(c, c), 0.0)


class ConvergenceTests(SimpleTestCase):
    def test_halving(self):
        study = halving_study('h', [0.1, 0.05], lambda h: 3.0 * h ** 2, threshold=3.5)
        self.assertAlmostEqual(study.ratio, 4.0)
        self.assertTrue(study.passed)

    def test_richardson(self):
        study = richardson_study('dt', [0.1, 0.05, 0.025], lambda dt: 1.0 + dt, threshold=1.8)
        self.assertAlmostEqual(study.ratio, 2.0)
        self.assertTrue(study.passed)

    def test_richardson_exact(self):
        study = richardson_study('dt', [0.1, 0.05, 0.025], lambda dt: 0.5, threshold=1.8)
        self.assertTrue(study.exact)
        self.assertTrue(study.passed)

    def test_fitted_order(self):
        xs = [0.2, 0.1, 0.05]
        self.assertAlmostEqual(fitted_order(xs, [3.0 * x ** 2 for x in xs]), 2.0)
