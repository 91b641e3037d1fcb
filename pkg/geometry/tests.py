import math

import numpy as np
from django.test import SimpleTestCase

from .backgrounds import (
    ChartPoint, Family, metric_eval, product_with_circle, resolve_background,
    ricci_residual, scalar_min,
)
from .exceptions import BlowUpError, GeometryError, OutsideChartError, OutsideDomainError
from .scalar import BOUND_SATISFIED, BOUND_TRIVIAL, homogeneous_scalar_ode


def point_on(bg, coords):
    return ChartPoint(np.asarray(coords, dtype=float), bg.chart_id)


def tangent_basis(x):
    """Orthonormal basis of the tangent space of the unit sphere at x."""
    _, _, vt = np.linalg.svd(x.reshape(1, -1))
    return vt[1:]


class MetricEvalTests(SimpleTestCase):
    def setUp(self):
        self.torus = resolve_background('t3_flat')
        self.s3 = resolve_background('s3_shrinking')
        self.s2s1 = resolve_background('s2xs1_shrinking')

    def test_flat_torus_is_flat(self):
        data = metric_eval(self.torus, point_on(self.torus, [0.3, -1.0, 2.0]), 0.7)
        np.testing.assert_array_equal(data.g, np.eye(3))
        np.testing.assert_array_equal(data.ric, np.zeros((3, 3)))
        self.assertEqual(data.scalar, 0.0)
        self.assertEqual(data.rm_bound, 0.0)

    def test_shrinking_sphere_scalar(self):
        x = point_on(self.s3, [0.5, 0.5, 0.5, 0.5])
        for t in (0.0, 0.1, 0.125, 0.2):
            self.assertAlmostEqual(metric_eval(self.s3, x, t).scalar, 6.0 / (1.0 - 4.0 * t), places=12)

    def test_sphere_cross_circle_scalar(self):
        x = point_on(self.s2s1, [0.0, 0.6, 0.8, 1.0])
        self.assertAlmostEqual(metric_eval(self.s2s1, x, 0.2).scalar, 2.0 / (1.0 - 0.4), places=12)

    def test_scalar_is_trace_of_ricci(self):
        catalog = ['t3_flat', 's3_shrinking', 's2xs1_shrinking', 's2_static', 's3_static',
                   'product:s3_shrinking:lambda=0.05', 'product:s2xs1_shrinking:lambda=0.3']
        for name in catalog:
            bg = resolve_background(name)
            coords = bg.normalize(np.linspace(0.2, 0.9, bg.ambient_dim).reshape(1, -1))[0]
            data = metric_eval(bg, point_on(bg, coords), 0.05)
            trace = np.trace(np.linalg.solve(data.g, data.ric))
            self.assertAlmostEqual(trace, data.scalar, delta=1e-12 * max(1.0, data.scalar), msg=name)
            np.testing.assert_allclose(data.g, data.g.T, atol=0)
            self.assertTrue(np.all(np.linalg.eigvalsh(data.g) > 0), name)
            np.testing.assert_allclose(data.gamma, data.gamma.transpose(0, 2, 1), atol=0)

    def test_einstein_on_tangent_space(self):
        x = np.array([0.5, 0.5, 0.5, 0.5])
        data = metric_eval(self.s3, point_on(self.s3, x), 0.1)
        basis = tangent_basis(x)
        g_t = basis @ data.g @ basis.T
        ric_t = basis @ data.ric @ basis.T
        np.testing.assert_allclose(ric_t, data.scalar / 3.0 * g_t, atol=1e-12)

    def test_time_outside_domain(self):
        x = point_on(self.s3, [1.0, 0.0, 0.0, 0.0])
        with self.assertRaises(OutsideDomainError):
            metric_eval(self.s3, x, 0.25)
        with self.assertRaises(OutsideDomainError):
            metric_eval(self.s3, x, -0.1)

    def test_point_outside_chart(self):
        with self.assertRaises(OutsideChartError):
            metric_eval(self.s3, point_on(self.s3, [2.0, 0.0, 0.0, 0.0]), 0.0)
        with self.assertRaises(OutsideChartError):
            metric_eval(self.torus, point_on(self.torus, [10.0, 0.0, 0.0]), 0.0)
        with self.assertRaises(OutsideChartError):
            metric_eval(self.torus, ChartPoint(np.zeros(3), 'sphere3'), 0.0)


class RicciResidualTests(SimpleTestCase):
    def test_flat_torus_exact(self):
        bg = resolve_background('t3_flat')
        self.assertEqual(ricci_residual(bg, point_on(bg, [0.1, 0.2, 0.3]), 0.5, 1e-3), 0.0)

    def test_shrinking_sphere(self):
        bg = resolve_background('s3_shrinking')
        x = point_on(bg, [0.0, 0.6, 0.0, 0.8])
        self.assertLessEqual(ricci_residual(bg, x, 0.1, 1e-3), 1e-5)

    def test_residual_vanishes_as_step_halves(self):
        bg = resolve_background('s2xs1_shrinking')
        x = point_on(bg, [0.6, 0.0, 0.8, 0.5])
        for dt in (1e-2, 5e-3, 2.5e-3):
            self.assertLessEqual(ricci_residual(bg, x, 0.1, dt), 1e-9)

    def test_product_matches_base(self):
        base = resolve_background('s3_shrinking')
        product = product_with_circle(base, 0.05)
        x = [0.5, 0.5, 0.5, 0.5]
        self.assertEqual(
            ricci_residual(product, point_on(product, x + [0.3]), 0.1, 1e-3),
            ricci_residual(base, point_on(base, x), 0.1, 1e-3),
        )

    def test_step_leaving_domain(self):
        bg = resolve_background('s3_shrinking')
        with self.assertRaises(OutsideDomainError):
            ricci_residual(bg, point_on(bg, [1.0, 0.0, 0.0, 0.0]), 0.2499, 1e-3)


class ScalarMinTests(SimpleTestCase):
    def test_values(self):
        self.assertEqual(scalar_min(resolve_background('t3_flat'), 3.0), 0.0)
        s3 = resolve_background('s3_shrinking')
        self.assertAlmostEqual(scalar_min(s3, 0.0), 6.0)
        self.assertAlmostEqual(scalar_min(s3, 0.125), 12.0)

    def test_outside_domain(self):
        with self.assertRaises(OutsideDomainError):
            scalar_min(resolve_background('s3_shrinking'), 0.3)


class ProductWithCircleTests(SimpleTestCase):
    def test_flat_four_torus(self):
        bg = product_with_circle(resolve_background('t3_flat'), 0.1)
        self.assertEqual(bg.family, Family.PRODUCT_WITH_CIRCLE)
        self.assertEqual(bg.dim, 4)
        self.assertTrue(bg.is_flat)
        data = metric_eval(bg, point_on(bg, [0.0, 0.0, 0.0, 0.4]), 0.0)
        np.testing.assert_allclose(data.g, np.diag([1.0, 1.0, 1.0, 0.01]), rtol=1e-15)

    def test_block_structure(self):
        base = resolve_background('s3_shrinking')
        product = product_with_circle(base, 0.2)
        x = [0.0, 0.0, 0.6, 0.8]
        base_data = metric_eval(base, point_on(base, x), 0.1)
        data = metric_eval(product, point_on(product, x + [0.25]), 0.1)
        np.testing.assert_array_equal(data.g[:4, :4], base_data.g)
        np.testing.assert_array_equal(data.ric[:4, :4], base_data.ric)
        self.assertEqual(data.g[4, 4], 0.2 ** 2)
        np.testing.assert_array_equal(data.g[4, :4], np.zeros(4))
        np.testing.assert_array_equal(data.ric[4], np.zeros(5))
        self.assertEqual(data.rm_bound, base_data.rm_bound)

    def test_unit_circle_field(self):
        product = product_with_circle(resolve_background('t3_flat'), 0.1)
        points = np.zeros((3, 4))
        U = product.circle_field(3)
        np.testing.assert_allclose(product.inner(points, 0.0, U, U), np.ones(3))

    def test_lambda_out_of_range(self):
        base = resolve_background('t3_flat')
        for lam in (0.0, 1.0, -0.2, 1.5):
            with self.assertRaises(GeometryError):
                product_with_circle(base, lam)

    def test_needs_three_dimensional_base(self):
        with self.assertRaises(GeometryError):
            product_with_circle(resolve_background('s2_static'), 0.1)


class CatalogTests(SimpleTestCase):
    def test_names_resolve(self):
        self.assertEqual(resolve_background('s3_shrinking').family, Family.ROUND_SPHERE3_SHRINKING)
        self.assertEqual(resolve_background('s2xs1_shrinking').family, Family.SPHERE_CROSS_CIRCLE_SHRINKING)
        product = resolve_background('product:s3_shrinking:lambda=0.05')
        self.assertEqual(product.lam, 0.05)
        self.assertEqual(product.base.name, 's3_shrinking')

    def test_parameters(self):
        bg = resolve_background('s3_shrinking:radius=2')
        self.assertAlmostEqual(bg.t_domain[1], 1.0)
        self.assertAlmostEqual(bg.scalar(0.0), 1.5)

    def test_unknown_names(self):
        for name in ('h3_hyperbolic', 's3_shrinking:radius', 'product:t3_flat', 's3_shrinking:radius=big'):
            with self.assertRaises(GeometryError, msg=name):
                resolve_background(name)

    def test_extinction_times(self):
        self.assertEqual(resolve_background('s3_shrinking').extinction_time(), 0.25)
        self.assertEqual(resolve_background('s2xs1_shrinking').extinction_time(), 0.5)
        self.assertEqual(resolve_background('t3_flat').extinction_time(), math.inf)


class HomogeneousScalarOdeTests(SimpleTestCase):
    def test_fixed_point(self):
        series = homogeneous_scalar_ode(0.0, 1.0, 1e-3)
        self.assertTrue(np.all(series.R == 0.0))
        self.assertEqual(series.bound_status, BOUND_TRIVIAL)

    def test_negative_start_is_sharp(self):
        series = homogeneous_scalar_ode(-6.0, 2.0, 1e-4)
        exact = -1.5 / (series.t + 0.25)
        self.assertLessEqual(np.max(np.abs(series.R - exact)), 1e-6)
        self.assertEqual(series.const, 0.25)
        self.assertEqual(series.bound_status, BOUND_SATISFIED)
        self.assertEqual(series.t[-1], 2.0)

    def test_positive_start_blows_up(self):
        series = homogeneous_scalar_ode(6.0, 1.0, 1e-4)
        self.assertTrue(series.blowup)
        self.assertAlmostEqual(series.blowup_estimate, 0.25, delta=1e-3)
        early = series.t < 0.2
        np.testing.assert_allclose(series.R[early], 6.0 / (1.0 - 4.0 * series.t[early]), rtol=1e-8)

    def test_strict_blowup_raises(self):
        with self.assertRaises(BlowUpError):
            homogeneous_scalar_ode(6.0, 1.0, 1e-3, strict=True)

    def test_step_must_resolve_horizon(self):
        with self.assertRaises(GeometryError):
            homogeneous_scalar_ode(-1.0, 1.0, 0.05)
