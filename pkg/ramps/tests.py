import math
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from flow.convergence import halving_study, window_times
from flow.curves import curve_geometry, edge_lengths
from flow.distance import hausdorff
from flow.exceptions import FlowError
from flow.initializers import back_and_forth, circle, constant, great_circle
from flow.solver import FlowConfig, Status, flow_run
from flow.tests import fixed, flat_geodesic
from geometry.backgrounds import product_with_circle, resolve_background

from .exceptions import RampError, RampInvariantError
from .ramp import RampCurve, RampMonitors, lift, min_separation, project, ramp_quantity
from .run import ramp_flow_run, u_evolution_residual
from .sweep import lambda_sweep

TORUS = resolve_background('t3_flat')
S3 = resolve_background('s3_shrinking')


def unit_loop(N=128):
    """Round circle of length one in the flat torus."""
    return circle(TORUS, N, r=1.0 / (2.0 * math.pi))


class LiftTests(SimpleTestCase):
    def test_projection_undoes_lift(self):
        c = unit_loop(64)
        r = lift(c, 0.1)
        self.assertIs(project(r), c)
        self.assertTrue(np.all((r.theta >= 0.0) & (r.theta < 0.1)))

    def test_unit_speed_loop(self):
        lam = 0.1
        r = lift(unit_loop(), lam)
        product = product_with_circle(TORUS, lam)
        monitor = ramp_quantity(r, product, 0.0)
        np.testing.assert_allclose(monitor.u, lam / math.sqrt(1.0 + lam ** 2), rtol=2e-3)
        ramp_length = np.sum(edge_lengths(r.assemble(), product, 0.0))
        self.assertAlmostEqual(ramp_length, math.sqrt(1.0 + lam ** 2), delta=1e-3)

    def test_constant_loop_lifts_to_fiber(self):
        product = product_with_circle(S3, 0.1)
        r = lift(constant(S3, 32), 0.1)
        monitor = ramp_quantity(r, product, 0.0)
        np.testing.assert_allclose(monitor.u, 1.0, atol=1e-12)
        self.assertLess(curve_geometry(r.assemble(), product, 0.0).k_max, 1e-8)

    def test_assembled_circle_coordinate_unwraps(self):
        r = lift(unit_loop(64), 0.05)
        curve = r.assemble()
        self.assertTrue(np.all(np.diff(curve.points[:, -1]) > 0))
        self.assertEqual(curve.shift[-1], 1.0)
        self.assertTrue(curve.chart_id.endswith('+circle1'))
        np.testing.assert_allclose(RampCurve.from_assembled(curve, 0.05).theta, r.theta, atol=1e-15)

    def test_winding_must_be_one(self):
        c = unit_loop(32)
        with self.assertRaises(RampError):
            RampCurve(base=c, theta=np.zeros(32), lam=0.1, winding=2)

    def test_circle_length_range(self):
        c = unit_loop(32)
        for lam in (0.0, 1.0, 1.5):
            with self.assertRaises(RampError):
                lift(c, lam)

    def test_back_and_forth_lift_is_embedded(self):
        lam = 0.1
        product = product_with_circle(TORUS, lam)
        curve = lift(back_and_forth(TORUS, 64), lam).assemble()
        self.assertGreater(min_separation(curve, product, 0.0), 0.0)
        self.assertGreater(ramp_quantity(curve, product, 0.0).u_min, 0.0)

    def test_great_circle_ramp_has_constant_u(self):
        product = product_with_circle(S3, 0.05)
        u = ramp_quantity(lift(great_circle(S3, 64), 0.05), product, 0.1).u
        self.assertLess(np.ptp(u), 1e-10)
        self.assertGreater(u[0], 0.0)


class RampFlowTests(SimpleTestCase):
    def test_fiber_stays_fiber(self):
        c = constant(S3, 32)
        run = ramp_flow_run(c, 0.1, S3, (0.0, 0.01), FlowConfig(samples=5))
        self.assertEqual(run.status, Status.COMPLETED)
        for i in range(len(run.times)):
            np.testing.assert_allclose(run.projected(i).points, c.points, atol=1e-12)
        np.testing.assert_allclose(run.u_min, 1.0, atol=1e-10)

    def test_embedded_circle_tracks_direct_flow(self):
        c = circle(TORUS, 64, r=0.5)
        cfg = FlowConfig(samples=5)
        run = ramp_flow_run(c, 0.1, TORUS, (0.0, 0.05), cfg)
        direct = flow_run(c, TORUS, (0.0, 0.05), cfg)
        self.assertEqual(run.status, Status.COMPLETED)
        self.assertLess(hausdorff(run.projected(-1), direct.final.curve), 1e-3)
        self.assertTrue(run.projection_monotone)
        self.assertTrue(np.all(run.u_min > 0))

    def test_back_and_forth_flows_through_its_cusps(self):
        run = ramp_flow_run(back_and_forth(TORUS, 32), 0.1, TORUS, (0.0, 0.005), fixed(samples=5))
        self.assertEqual(run.status, Status.COMPLETED)
        self.assertEqual(run.trajectory.final.t, 0.005)
        self.assertGreater(run.trajectory.steps, 5)
        self.assertTrue(np.all(run.u_min > 0))
        self.assertTrue(np.all(np.isfinite(run.trajectory.series('k_max'))))
        self.assertTrue(run.projection_monotone)
        summary = run.summary()
        self.assertEqual(summary['status'], 'completed')
        self.assertGreater(summary['min_separation'], 0.0)

    def test_losing_positive_u_raises(self):
        broken = RampMonitors(t=0.0, u=np.array([-1.0]), u_min=-1.0, ku_max=math.inf)
        with mock.patch('ramps.run.ramp_quantity', return_value=broken):
            with self.assertRaises(RampInvariantError):
                ramp_flow_run(constant(S3, 16), 0.1, S3, (0.0, 1e-4), FlowConfig(samples=2))


class UEvolutionTests(SimpleTestCase):
    def test_fiber_residual_vanishes(self):
        product = product_with_circle(TORUS, 0.1)
        curve = lift(constant(TORUS, 32), 0.1).assemble()
        traj = flow_run(curve, product, (0.0, 0.002), fixed(samples=4))
        self.assertLess(u_evolution_residual(traj, product).max, 1e-8)

    def test_helix_residual_converges(self):
        lam, t_mid = 0.1, 0.02
        product = product_with_circle(TORUS, lam)

        def residual(N):
            curve = lift(circle(TORUS, N, r=0.5), lam).assemble()
            times = window_times(0.0, t_mid, 1e-4)
            traj = flow_run(curve, product, (0.0, times[-1]), fixed(), sample_times=times)
            return u_evolution_residual(traj, product).at(t_mid)

        study = halving_study('u_evolution', [32, 64], residual, threshold=3.5)
        self.assertTrue(study.passed, study.as_dict())
        self.assertGreater(study.ratio, 3.5)

    def test_requires_fixed_parameter(self):
        product = product_with_circle(TORUS, 0.1)
        curve = lift(circle(TORUS, 32, r=0.5), 0.1).assemble()
        traj = flow_run(curve, product, (0.0, 0.01), FlowConfig(samples=3))
        with self.assertRaises(FlowError):
            u_evolution_residual(traj, product)


class LambdaSweepTests(SimpleTestCase):
    def test_lambda_validation(self):
        c = flat_geodesic(32)
        for lambdas in ([0.1, 0.05], [0.1, 0.2, 0.05], [0.2, 0.1, 0.0]):
            with self.assertRaises(RampError):
                lambda_sweep(c, lambdas, TORUS, (0.0, 0.01), FlowConfig(samples=3))

    def test_geodesic_projects_onto_itself(self):
        report = lambda_sweep(flat_geodesic(32), [0.2, 0.1, 0.05], TORUS, (0.0, 0.01), FlowConfig(samples=3))
        self.assertEqual(report.direct_status, 'completed')
        self.assertLess(max(report.distances), 1e-8)
        self.assertEqual(len(report.pairwise), 3)
        self.assertEqual([m['lambda'] for m in report.as_dict()['members']], [0.2, 0.1, 0.05])

    def test_constant_loop_is_stationary(self):
        report = lambda_sweep(constant(S3, 16), [0.2, 0.1, 0.05], S3, (0.0, 0.005), FlowConfig(samples=3))
        self.assertTrue(report.stationary)
        self.assertIsNone(report.order)

    def test_workers_do_not_change_the_report(self):
        args = (flat_geodesic(32), [0.2, 0.1, 0.05], TORUS, (0.0, 0.01), FlowConfig(samples=3))
        serial = lambda_sweep(*args)
        parallel = lambda_sweep(*args, jobs=2)
        self.assertEqual(serial.as_dict(), parallel.as_dict())
