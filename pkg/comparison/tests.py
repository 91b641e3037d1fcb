import math

import numpy as np
from django.test import SimpleTestCase
from scipy.integrate import solve_ivp

from flow.exceptions import InsufficientSamplesError
from flow.initializers import cap_circle, circle, constant
from flow.solver import FlowConfig, flow_run
from flow.tests import flat_geodesic
from geometry.backgrounds import resolve_background

from .annulus import annulus_proxy
from .exceptions import ComparisonError, FamilyVerdictError, NotOracleCompatibleError, OracleError
from .family import Verdict, deform_family
from .margins import WidthSeries, lemma_margin, normalized_width_check, width_rows
from .ode import (
    a_priori_extinction, cap_flow_reduction, comparison_ode, extinction_bound, normalizing_constant,
)
from .oracle import (
    FlatCircle, PointDisk, SphericalCap, disk_area_oracle, disk_area_rate, family_width,
    fit_oracle_disk, gauss_bonnet_check,
)

TORUS = resolve_background('t3_flat')
S3 = resolve_background('s3_shrinking')
S2 = resolve_background('s2_static')


def cap_closing_time(phi0):
    """Closed form for the shrinking unit S^3: cos(phi) = cos(phi0) (1 - 4t)^(-1/4)."""
    return (1.0 - math.cos(phi0) ** 4) / 4.0


class DiskOracleTests(SimpleTestCase):
    def test_flat_circle(self):
        self.assertAlmostEqual(disk_area_oracle(FlatCircle(1.0)), math.pi, places=15)

    def test_hemisphere(self):
        self.assertAlmostEqual(disk_area_oracle(SphericalCap(math.pi / 2.0, 1.0)), 2.0 * math.pi, places=14)

    def test_small_caps_are_flat_to_fourth_order(self):
        a = 2.0
        for phi in (1e-2, 5e-3):
            excess = disk_area_oracle(SphericalCap(phi, a)) - math.pi * (a * phi) ** 2
            self.assertAlmostEqual(excess / phi ** 4, -math.pi * a ** 2 / 12.0, delta=1e-3)

    def test_out_of_range(self):
        for make in (lambda: FlatCircle(0.0), lambda: SphericalCap(math.pi, 1.0),
                     lambda: SphericalCap(0.0, 1.0), lambda: SphericalCap(1.0, -1.0)):
            with self.assertRaises(OracleError):
                make()


class FitOracleDiskTests(SimpleTestCase):
    def test_flat_circle(self):
        disk = fit_oracle_disk(circle(TORUS, 64, r=0.7, plane=(1, 2)), TORUS, 0.0)
        self.assertIsInstance(disk, FlatCircle)
        self.assertAlmostEqual(disk.r, 0.7, places=12)

    def test_cap_on_shrinking_sphere(self):
        disk = fit_oracle_disk(cap_circle(S3, 64, math.pi / 3.0), S3, 0.1)
        self.assertIsInstance(disk, SphericalCap)
        self.assertAlmostEqual(disk.phi, math.pi / 3.0, places=12)
        self.assertAlmostEqual(disk.area(), 2.0 * math.pi * 0.6 * 0.5, places=12)

    def test_larger_cap_is_measured_by_its_complement(self):
        disk = fit_oracle_disk(cap_circle(S2, 64, 2.0 * math.pi / 3.0), S2, 0.0)
        self.assertAlmostEqual(disk.phi, math.pi / 3.0, places=12)

    def test_constant_is_a_point(self):
        self.assertIsInstance(fit_oracle_disk(constant(S3, 16), S3, 0.0), PointDisk)

    def test_ellipse_is_rejected(self):
        c = circle(TORUS, 64, r=0.5)
        stretched = c.with_points(c.points * np.array([2.0, 1.0, 1.0]))
        with self.assertRaises(NotOracleCompatibleError):
            fit_oracle_disk(stretched, TORUS, 0.0)

    def test_noncontractible_loop_is_rejected(self):
        with self.assertRaises(NotOracleCompatibleError):
            fit_oracle_disk(flat_geodesic(32), TORUS, 0.0)


class FamilyWidthTests(SimpleTestCase):
    def test_single_curve(self):
        c = cap_circle(S2, 64, math.pi / 4.0)
        self.assertEqual(family_width([c], S2, 0.0), fit_oracle_disk(c, S2, 0.0).area())

    def test_caps(self):
        family = [cap_circle(S2, 64, phi) for phi in (math.pi / 6.0, math.pi / 3.0, math.pi / 2.0)]
        self.assertAlmostEqual(family_width(family, S2, 0.0), 2.0 * math.pi, places=10)

    def test_constant_does_not_count(self):
        cap = cap_circle(S3, 64, math.pi / 3.0)
        width = family_width([constant(S3, 64), cap], S3, 0.0)
        self.assertAlmostEqual(width, math.pi, places=10)

    def test_empty_family(self):
        with self.assertRaises(ComparisonError):
            family_width([], S2, 0.0)


class GaussBonnetTests(SimpleTestCase):
    def test_caps(self):
        for phi, a in ((math.pi / 2.0, 1.0), (math.pi / 3.0, 1.0), (0.3, 2.0), (2.5, 0.5)):
            self.assertLessEqual(gauss_bonnet_check(SphericalCap(phi, a)), 1e-10)

    def test_area_rate_matches_cap_reduction(self):
        t, phi = 0.1, math.pi / 3.0
        cap = SphericalCap(phi, math.sqrt(S3.scale_factor(t)))
        rate = disk_area_rate(cap, S3, t)
        self.assertAlmostEqual(rate.total, 2.0 * math.pi * (3.0 * math.cos(phi) - 4.0), places=10)
        self.assertLess(rate.identity_residual, 1e-10)

    def test_static_sphere_has_no_interior_term(self):
        rate = disk_area_rate(SphericalCap(math.pi / 3.0, 1.0), S2, 0.0)
        self.assertEqual(rate.interior, 0.0)
        self.assertAlmostEqual(rate.total, -math.pi, places=12)

    def test_radius_mismatch(self):
        with self.assertRaises(ComparisonError):
            disk_area_rate(SphericalCap(1.0, 1.0), S3, 0.1)


class ComparisonOdeTests(SimpleTestCase):
    def test_flat_linear_solution(self):
        solution = comparison_ode(2.0 * math.pi, TORUS, (0.0, 1.5), dt=1e-3)
        np.testing.assert_allclose(solution.w, 2.0 * math.pi * (1.0 - solution.t), atol=1e-9)
        self.assertAlmostEqual(solution.extinction_t, 1.0, places=9)
        self.assertEqual(solution.const_used, 1.0)

    def test_zero_width_is_extinct_at_once(self):
        solution = comparison_ode(0.0, TORUS, (0.0, 0.5), dt=1e-3)
        self.assertEqual(solution.extinction_t, 0.0)
        np.testing.assert_allclose(solution.w, -2.0 * math.pi * solution.t, atol=1e-12)

    def test_follows_the_shrinking_cap(self):
        phi0 = math.pi / 3.0
        solution = comparison_ode(2.0 * math.pi * (1.0 - math.cos(phi0)), S3, (0.0, 0.2), dt=1e-4)
        cap = cap_flow_reduction(phi0, S3, (0.0, 0.2), dt=1e-4)
        np.testing.assert_allclose(solution.w, np.interp(solution.t, cap.t, cap.A), atol=1e-4)

    def test_affine_superposition(self):
        alpha, beta, w0, v0 = 0.3, 0.5, 1.0, 2.0

        def w(start):
            return comparison_ode(start, S3, (0.0, 0.2), dt=1e-3).w

        combined = alpha * w(w0) + beta * w(v0) + (1.0 - alpha - beta) * w(0.0)
        np.testing.assert_allclose(w(alpha * w0 + beta * v0), combined, atol=1e-9)

    def test_negative_width(self):
        with self.assertRaises(ComparisonError):
            comparison_ode(-1.0, TORUS, (0.0, 1.0))


class ExtinctionBoundTests(SimpleTestCase):
    def test_flat(self):
        self.assertAlmostEqual(extinction_bound(2.0 * math.pi, TORUS), 1.0, places=6)
        self.assertEqual(extinction_bound(0.0, TORUS), 0.0)

    def test_shrinking_sphere(self):
        self.assertEqual(normalizing_constant(S3), 1.0)
        self.assertLessEqual(extinction_bound(2.0 * math.pi, S3), 0.25)
        T = extinction_bound(math.pi, S3)
        self.assertLess(T, 0.25)
        self.assertAlmostEqual(T, cap_closing_time(math.pi / 3.0), delta=1e-6)

    def test_monotone_in_initial_width(self):
        bounds = [extinction_bound(A0, S3) for A0 in (0.0, 0.5, 1.0, 2.0, math.pi, 5.0, 2.0 * math.pi)]
        self.assertEqual(bounds, sorted(bounds))

    def test_within_a_priori_bound(self):
        for A0 in (0.5, 2.0 * math.pi, 20.0):
            self.assertLessEqual(extinction_bound(A0, TORUS), a_priori_extinction(A0, 0.0, 1.0))

    def test_nonpositive_shift(self):
        with self.assertRaises(ComparisonError):
            a_priori_extinction(1.0, 0.0, -1.0)


class CapFlowReductionTests(SimpleTestCase):
    def test_hemisphere_rate(self):
        cap = cap_flow_reduction(math.pi / 2.0, S3, (0.0, 0.1), dt=1e-4)
        self.assertAlmostEqual(cap.rate[0], -8.0 * math.pi, places=6)
        self.assertIsNone(cap.extinction_t)
        np.testing.assert_allclose(cap.phi, math.pi / 2.0)

    def test_sharp_at_every_sample(self):
        for phi0 in (math.pi / 6.0, math.pi / 3.0, math.pi / 2.0):
            cap = cap_flow_reduction(phi0, S3, (0.0, 0.2499), dt=1e-4)
            self.assertLessEqual(np.max(cap.relative_margin[:-1]), 1e-2)

    def test_caps_close_before_the_sphere(self):
        for phi0 in (math.pi / 6.0, math.pi / 3.0):
            cap = cap_flow_reduction(phi0, S3, (0.0, 0.2499), dt=1e-4)
            self.assertAlmostEqual(cap.extinction_t, cap_closing_time(phi0), delta=1e-6)
            self.assertEqual(cap.A[-1], 0.0)

    def test_matches_the_angle_equation(self):
        phi0 = math.pi / 3.0
        cap = cap_flow_reduction(phi0, S3, (0.0, 0.1), dt=1e-4)
        angle = solve_ivp(lambda t, phi: -1.0 / (np.tan(phi) * (1.0 - 4.0 * t)), (0.0, 0.1), [phi0],
                          rtol=1e-11, atol=1e-12)
        area = 2.0 * math.pi * 0.6 * (1.0 - math.cos(angle.y[0, -1]))
        self.assertAlmostEqual(cap.A[-1], area, delta=1e-6)

    def test_nearly_whole_sphere(self):
        cap = cap_flow_reduction(math.pi - 0.01, S3, (0.0, 0.01), dt=1e-5)
        self.assertAlmostEqual(cap.rate[0] / (-14.0 * math.pi), 1.0, delta=1e-3)

    def test_large_cap_covers_instead_of_closing(self):
        phi0 = 2.8
        cap = cap_flow_reduction(phi0, S3, (0.0, 0.2499), dt=1e-4)
        self.assertIsNone(cap.extinction_t)
        self.assertAlmostEqual(cap.covered_t, cap_closing_time(phi0), delta=1e-6)
        self.assertAlmostEqual(cap.phi[-1], math.pi, places=12)
        self.assertAlmostEqual(cap.A[-1], 4.0 * math.pi * (1.0 - 4.0 * cap.covered_t), places=9)
        self.assertGreater(cap.A[-1], 0.0)
        self.assertFalse(cap.width_series().extinct)

    def test_small_cap_is_not_covering(self):
        cap = cap_flow_reduction(math.pi / 6.0, S3, (0.0, 0.2499), dt=1e-4)
        self.assertIsNone(cap.covered_t)
        self.assertTrue(cap.width_series().extinct)

    def test_needs_the_shrinking_sphere(self):
        with self.assertRaises(ComparisonError):
            cap_flow_reduction(1.0, S2, (0.0, 0.1), dt=1e-3)


class MarginTests(SimpleTestCase):
    def test_shrinking_flat_circle(self):
        traj = flow_run(circle(TORUS, 128, r=1.0), TORUS, (0.0, 0.2), FlowConfig(samples=10))
        margins = lemma_margin(WidthSeries.from_trajectory(traj), TORUS)
        self.assertTrue(margins.ok)
        self.assertLess(np.max(np.abs(margins.margin)), 1e-2)

    def test_cap_is_sharp(self):
        cap = cap_flow_reduction(math.pi / 3.0, S3, (0.0, 0.2), dt=1e-3)
        margins = lemma_margin(cap.width_series(), S3)
        self.assertTrue(margins.ok)
        self.assertLess(np.max(np.abs(margins.margin) / np.abs(cap.rate[:-1])), 1e-2)

    def test_normalized_width_of_a_cap(self):
        cap = cap_flow_reduction(math.pi / 3.0, S3, (0.0, 0.2), dt=1e-3)
        self.assertTrue(normalized_width_check(cap.width_series(), normalizing_constant(S3)).ok)

    def test_normalized_width_flat_closed_form(self):
        t = np.linspace(0.0, 0.3, 31)
        margins = normalized_width_check(WidthSeries(t, math.pi * (1.0 - 2.0 * t)), 1.0)
        self.assertTrue(margins.ok)
        self.assertTrue(np.all(margins.margin <= 0.0))

    def test_identically_zero_width(self):
        with self.assertRaises(ComparisonError):
            lemma_margin(WidthSeries([0.0, 0.1], [0.0, 0.0]), TORUS)

    def test_too_few_samples(self):
        with self.assertRaises(InsufficientSamplesError):
            lemma_margin(WidthSeries([0.0], [1.0]), TORUS)

    def test_nonpositive_shift(self):
        with self.assertRaises(ComparisonError):
            normalized_width_check(WidthSeries([0.0, 0.1, 0.2], [1.0, 0.9, 0.8]), -0.05)

    def test_undeclared_zero(self):
        with self.assertRaises(ComparisonError):
            WidthSeries([0.0, 0.1, 0.2], [1.0, 0.0, 0.5])

    def test_extinction_needs_zero_width(self):
        with self.assertRaises(ComparisonError):
            WidthSeries([0.0, 0.1], [1.0, 0.5], extinct=True)

    def test_width_rows(self):
        t = np.linspace(0.0, 0.3, 4)
        ws = WidthSeries(t, math.pi * (1.0 - 2.0 * t))
        solution = comparison_ode(math.pi, TORUS, (0.0, 0.3), dt=1e-3)
        rows = width_rows(ws, solution, lemma_margin(ws, TORUS))
        self.assertEqual(list(rows[0]), ['t', 'A', 'w', 'margin'])
        self.assertTrue(math.isnan(rows[-1]['margin']))


class AnnulusProxyTests(SimpleTestCase):
    def flows(self, r1, r2, samples=10):
        cfg = FlowConfig(samples=samples)
        return (flow_run(circle(TORUS, 128, r=r1), TORUS, (0.0, 0.1), cfg),
                flow_run(circle(TORUS, 128, r=r2), TORUS, (0.0, 0.1), cfg))

    def test_identical_loops(self):
        traj, _ = self.flows(1.0, 0.5, samples=3)
        series = annulus_proxy(traj, traj, TORUS)
        self.assertTrue(np.all(series.mu == 0.0))
        self.assertIsNone(series.growth)

    def test_concentric_circles_keep_their_annulus(self):
        outer, inner = self.flows(1.0, 0.5)
        series = annulus_proxy(outer, inner, TORUS)
        self.assertAlmostEqual(series.mu[0] / (math.pi * 0.75), 1.0, delta=1e-2)
        self.assertLess(series.relative_spread, 1e-2)
        self.assertTrue(series.growth.ok)

    def test_symmetric(self):
        outer, inner = self.flows(1.0, 0.5, samples=3)
        np.testing.assert_array_equal(annulus_proxy(outer, inner, TORUS).mu, annulus_proxy(inner, outer, TORUS).mu)

    def test_mismatched_sampling(self):
        outer, _ = self.flows(1.0, 0.5, samples=3)
        _, inner = self.flows(1.0, 0.5, samples=4)
        with self.assertRaises(ComparisonError):
            annulus_proxy(outer, inner, TORUS)


class DeformFamilyTests(SimpleTestCase):
    def test_constant_map_is_short(self):
        outcome = deform_family([constant(S3, 16)], S3, 0.2, (0.0, 0.01), FlowConfig(samples=2))
        member = outcome.members[0]
        self.assertEqual(member.verdict, Verdict.SHORT)
        self.assertEqual(member.final_L, 0.0)
        self.assertEqual(outcome.xi, 1e-2)

    def test_dichotomy_on_the_shrinking_sphere(self):
        family = [constant(S3, 32), cap_circle(S3, 32, math.pi / 3.0), cap_circle(S3, 32, 0.15)]
        outcome = deform_family(family, S3, 0.2, (0.0, 0.05), FlowConfig(samples=5))
        self.assertEqual(outcome.verdicts, ['short', 'width_bounded', 'short'])
        bounded = outcome.members[1]
        self.assertLess(abs(bounded.final_A - (bounded.bound - outcome.xi)), outcome.xi)
        self.assertEqual([row['curve_id'] for row in outcome.as_list()],
                         ['constant', 'cap_circle(phi=1.0472)', 'cap_circle(phi=0.15)'])

    def test_tiny_flat_circle_is_short(self):
        outcome = deform_family([circle(TORUS, 32, r=0.1)], TORUS, 0.2, (0.0, 0.02), FlowConfig(samples=2))
        self.assertEqual(outcome.verdicts, ['short'])
        self.assertIn('final_L', outcome.as_list()[0])

    def test_nonpositive_xi(self):
        with self.assertRaises(ComparisonError):
            deform_family([constant(S3, 16)], S3, 0.2, (0.0, 0.01), FlowConfig(samples=2), xi=0.0)

    def test_workers_keep_input_order(self):
        family = [constant(S3, 16, point=[0.0, 1.0, 0.0, 0.0]), constant(S3, 16)]
        args = (family, S3, 0.2, (0.0, 0.005), FlowConfig(samples=2))
        self.assertEqual(deform_family(*args).as_list(), deform_family(*args, jobs=2).as_list())

    def test_verdict_error_is_a_runtime_error(self):
        self.assertTrue(issubclass(FamilyVerdictError, RuntimeError))
