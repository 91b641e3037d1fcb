"""
Module: backgrounds.py

Closed-form Ricci flow backgrounds and their tensors.

A background is a product of blocks laid side by side in one ambient
coordinate vector:

- SphereBlock: a round sphere stored extrinsically as unit vectors,
  with metric a(t)^2 on the tangent space and a frozen unit weight on
  the normal line, so the ambient metric matrix is positive definite.
- FlatBlock: Euclidean coordinates of a flat torus chart.
- CircleBlock: the normalized coordinate phi of a circle of length
  lambda (metric lambda^2 dphi^2, phi unwrapped along a curve).

Christoffel symbols are zero in the ambient coordinates except on sphere
blocks, where the Levi-Civita connection is the tangential part of the
ambient derivative: Gamma^k_ij = x^k (I - x x^T)_ij.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import OutsideChartError, OutsideDomainError, GeometryError

logger = logging.getLogger(__name__)

SPHERE_TOLERANCE = 1e-6
CIRCLE_BOX = 1e6


class Family(str, Enum):
    FLAT_TORUS3 = 'FlatTorus3'
    ROUND_SPHERE3_SHRINKING = 'RoundSphere3Shrinking'
    SPHERE_CROSS_CIRCLE_SHRINKING = 'SphereCrossCircleShrinking'
    PRODUCT_WITH_CIRCLE = 'ProductWithCircle'
    STATIC_SPHERE = 'StaticSphere'


@dataclass(frozen=True)
class SphereBlock:
    """Round sphere of intrinsic dimension ``dim`` and initial radius ``radius``."""
    dim: int
    radius: float = 1.0
    evolving: bool = True
    kind = 'sphere'

    @property
    def width(self):
        return self.dim + 1

    def scale(self, t):
        """a(t)^2; Ric = (dim-1) g_unit gives d(a^2)/dt = -2(dim-1)."""
        if not self.evolving:
            return self.radius ** 2
        return self.radius ** 2 - 2.0 * (self.dim - 1) * t

    def dscale(self, t):
        return -2.0 * (self.dim - 1) if self.evolving else 0.0

    def extinction_time(self):
        if not self.evolving:
            return math.inf
        return self.radius ** 2 / (2.0 * (self.dim - 1))

    def scalar(self, t):
        return self.dim * (self.dim - 1) / self.scale(t)

    def sectional(self, t):
        return 1.0 / self.scale(t)

    def in_chart(self, x):
        return abs(np.linalg.norm(x) - 1.0) <= SPHERE_TOLERANCE


@dataclass(frozen=True)
class FlatBlock:
    """Flat torus chart; coordinates valid in the box [-period, period]."""
    dim: int
    periods: tuple = ()
    kind = 'flat'

    @property
    def width(self):
        return self.dim

    def scale(self, t):
        return 1.0

    def dscale(self, t):
        return 0.0

    def extinction_time(self):
        return math.inf

    def scalar(self, t):
        return 0.0

    def sectional(self, t):
        return 0.0

    def in_chart(self, x):
        return bool(np.all(np.abs(x) <= np.asarray(self.periods)))


@dataclass(frozen=True)
class CircleBlock:
    """Circle of constant length ``length``; coordinate phi has period one."""
    length: float
    kind = 'circle'
    dim = 1
    width = 1

    def scale(self, t):
        return self.length ** 2

    def dscale(self, t):
        return 0.0

    def extinction_time(self):
        return math.inf

    def scalar(self, t):
        return 0.0

    def sectional(self, t):
        return 0.0

    def in_chart(self, x):
        return bool(np.all(np.abs(x) <= CIRCLE_BOX))


@dataclass(frozen=True)
class ChartPoint:
    coords: np.ndarray
    chart_id: str

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if not np.all(np.isfinite(coords)):
            raise OutsideChartError(f'Non-finite chart coordinates: {coords}')
        object.__setattr__(self, 'coords', coords)


@dataclass(frozen=True)
class MetricData:
    g: np.ndarray
    gamma: np.ndarray
    ric: np.ndarray
    scalar: float
    rm_bound: float


@dataclass(frozen=True)
class MetricBackground:
    """
    A named closed-form family g(t).

    ``t_domain`` is ``(t_start, t_end)``; ``t_end`` is excluded when it is
    the extinction time of a shrinking factor.
    """
    family: Family
    name: str
    blocks: tuple
    t_domain: tuple
    params: dict = field(default_factory=dict, compare=False)
    base: 'MetricBackground' = None
    lam: float = None
    is_ricci_flow: bool = True

    @property
    def dim(self):
        return sum(block.dim for block in self.blocks)

    @property
    def ambient_dim(self):
        return sum(block.width for block in self.blocks)

    @property
    def chart_id(self):
        return '+'.join(f'{block.kind}{block.dim}' for block in self.blocks)

    @property
    def is_flat(self):
        return all(block.kind != 'sphere' for block in self.blocks)

    def slices(self):
        start = 0
        for block in self.blocks:
            yield block, slice(start, start + block.width)
            start += block.width

    def extinction_time(self):
        return min(block.extinction_time() for block in self.blocks)

    def contains_time(self, t):
        t_start, t_end = self.t_domain
        return t_start - 1e-12 <= t < t_end

    def check_time(self, t):
        if not self.contains_time(t):
            raise OutsideDomainError(
                f'Time {t} outside the domain {self.t_domain} of {self.name}'
            )

    def check_points(self, points):
        points = np.atleast_2d(points)
        if points.shape[1] != self.ambient_dim:
            raise OutsideChartError(
                f'{self.name} expects {self.ambient_dim} coordinates, got {points.shape[1]}'
            )
        if not np.all(np.isfinite(points)):
            raise OutsideChartError(f'Non-finite coordinates in {self.name} chart')
        for block, sl in self.slices():
            for x in points[:, sl]:
                if not block.in_chart(x):
                    raise OutsideChartError(
                        f'Point block {x} outside the {block.kind} chart of {self.name}'
                    )

    # Vectorized evaluation over an (N, m) array of points.

    def normalize(self, points):
        """Pull sphere blocks back onto the unit sphere."""
        points = np.array(points, dtype=float)
        for block, sl in self.slices():
            if block.kind == 'sphere':
                points[:, sl] /= np.linalg.norm(points[:, sl], axis=1)[:, None]
        return points

    def tangent(self, points, V):
        """Tangential part of ambient vectors ``V`` at ``points``."""
        V = np.array(V, dtype=float)
        for block, sl in self.slices():
            if block.kind == 'sphere':
                x = points[:, sl]
                V[:, sl] -= np.einsum('ij,ij->i', V[:, sl], x)[:, None] * x
        return V

    def inner(self, points, t, V, W):
        """g_t(V, W) per point, symmetric in V and W bit for bit."""
        total = np.zeros(len(points))
        for block, sl in self.slices():
            vw = np.einsum('ij,ij->i', V[:, sl], W[:, sl])
            if block.kind == 'sphere':
                x = points[:, sl]
                normal = np.einsum('ij,ij->i', V[:, sl], x) * np.einsum('ij,ij->i', W[:, sl], x)
                total += block.scale(t) * (vw - normal) + normal
            else:
                total += block.scale(t) * vw
        return total

    def norm(self, points, t, V):
        return np.sqrt(np.maximum(self.inner(points, t, V, V), 0.0))

    def christoffel(self, points, V):
        """Gamma(V, V) per point."""
        out = np.zeros_like(V, dtype=float)
        for block, sl in self.slices():
            if block.kind == 'sphere':
                x = points[:, sl]
                vv = np.einsum('ij,ij->i', V[:, sl], V[:, sl])
                vx = np.einsum('ij,ij->i', V[:, sl], x)
                out[:, sl] = (vv - vx * vx)[:, None] * x
        return out

    def ricci(self, points, V, W):
        """Ric(V, W) per point; the Ricci tensor is scale invariant."""
        total = np.zeros(len(points))
        for block, sl in self.slices():
            if block.kind == 'sphere':
                x = points[:, sl]
                vw = np.einsum('ij,ij->i', V[:, sl], W[:, sl])
                normal = np.einsum('ij,ij->i', V[:, sl], x) * np.einsum('ij,ij->i', W[:, sl], x)
                total += (block.dim - 1) * (vw - normal)
        return total

    def circle_field(self, n_points):
        """Unit field U along the circle factor, as ambient vectors."""
        U = np.zeros((n_points, self.ambient_dim))
        for block, sl in self.slices():
            if block.kind == 'circle':
                U[:, sl] = 1.0 / block.length
        return U

    # Homogeneous curvature quantities.

    def scalar(self, t):
        return sum(block.scalar(t) for block in self.blocks)

    def rm_bound(self, t):
        """Bound on the absolute value of sectional curvatures."""
        return max(block.sectional(t) for block in self.blocks)

    def ambient_constant(self, t, factor):
        """The constant of the curvature inequalities, ``factor * |Rm|``."""
        return factor * self.rm_bound(t)

    def scale_factor(self, t):
        """a(t)^2 of the first sphere block, 1 for flat backgrounds."""
        for block in self.blocks:
            if block.kind == 'sphere':
                return block.scale(t)
        return 1.0

    def sphere_radius(self, t):
        return math.sqrt(self.scale_factor(t))


def _metric_blocks(bg, x, t):
    m = bg.ambient_dim
    g = np.zeros((m, m))
    gamma = np.zeros((m, m, m))
    ric = np.zeros((m, m))
    for block, sl in bg.slices():
        if block.kind == 'sphere':
            p = x[sl]
            normal = np.outer(p, p)
            tangential = np.eye(block.width) - normal
            g[sl, sl] = block.scale(t) * tangential + normal
            gamma[sl, sl, sl] = np.einsum('k,ij->kij', p, tangential)
            ric[sl, sl] = (block.dim - 1) * tangential
        else:
            g[sl, sl] = block.scale(t) * np.eye(block.width)
    return g, gamma, ric


def metric_eval(bg, x, t):
    """Closed-form metric, connection and curvature of ``bg`` at ``x`` and ``t``."""
    bg.check_time(t)
    if x.chart_id != bg.chart_id:
        raise OutsideChartError(f'Point in chart {x.chart_id}, background uses {bg.chart_id}')
    bg.check_points(x.coords)
    g, gamma, ric = _metric_blocks(bg, x.coords, t)
    return MetricData(g=g, gamma=gamma, ric=ric, scalar=bg.scalar(t), rm_bound=bg.rm_bound(t))


def ricci_residual(bg, x, t, dt):
    """
    Norm of the time difference of g plus 2 Ric, centred on [t, t + dt].

    Zero up to rounding for the closed-form families; second order in dt
    for any smooth family.
    """
    bg.check_time(t)
    bg.check_time(t + dt)
    if x.chart_id != bg.chart_id:
        raise OutsideChartError(f'Point in chart {x.chart_id}, background uses {bg.chart_id}')
    bg.check_points(x.coords)
    g0, _, _ = _metric_blocks(bg, x.coords, t)
    g1, _, _ = _metric_blocks(bg, x.coords, t + dt)
    _, _, ric = _metric_blocks(bg, x.coords, t + dt / 2.0)
    return float(np.linalg.norm((g1 - g0) / dt + 2.0 * ric))


def scalar_min(bg, t):
    """Exact minimum of the scalar curvature; R is constant in space here."""
    bg.check_time(t)
    return bg.scalar(t)


def _background(family, name, blocks, params, is_ricci_flow=True):
    t_end = min(block.extinction_time() for block in blocks)
    return MetricBackground(
        family=family,
        name=name,
        blocks=tuple(blocks),
        t_domain=(0.0, t_end),
        params=params,
        is_ricci_flow=is_ricci_flow,
    )


def flat_torus3(period=2.0 * math.pi):
    return _background(
        Family.FLAT_TORUS3, 't3_flat',
        [FlatBlock(3, (period,) * 3)],
        {'period': period},
    )


def round_sphere3_shrinking(radius=1.0):
    name = 's3_shrinking' if radius == 1.0 else f's3_shrinking:radius={radius:g}'
    return _background(
        Family.ROUND_SPHERE3_SHRINKING, name,
        [SphereBlock(3, radius)],
        {'radius': radius},
    )


def sphere_cross_circle_shrinking(radius=1.0, period=2.0 * math.pi):
    name = 's2xs1_shrinking' if radius == 1.0 else f's2xs1_shrinking:radius={radius:g}'
    return _background(
        Family.SPHERE_CROSS_CIRCLE_SHRINKING, name,
        [SphereBlock(2, radius), FlatBlock(1, (period,))],
        {'radius': radius, 'period': period},
    )


def static_sphere(dim, radius=1.0):
    """A round sphere frozen in time; a CSF fixture, not a Ricci flow."""
    name = f's{dim}_static' if radius == 1.0 else f's{dim}_static:radius={radius:g}'
    return _background(
        Family.STATIC_SPHERE, name,
        [SphereBlock(dim, radius, evolving=False)],
        {'radius': radius},
        is_ricci_flow=False,
    )


def product_with_circle(bg, lam):
    """Metric product of a 3-dimensional ``bg`` with a circle of length ``lam``."""
    if not 0.0 < lam < 1.0:
        raise GeometryError(f'Circle length {lam} outside (0, 1)')
    if bg.dim != 3:
        raise GeometryError(f'{bg.name} has dimension {bg.dim}, expected 3')
    return MetricBackground(
        family=Family.PRODUCT_WITH_CIRCLE,
        name=f'product:{bg.name}:lambda={lam:g}',
        blocks=bg.blocks + (CircleBlock(lam),),
        t_domain=bg.t_domain,
        params=dict(bg.params, **{'lambda': lam}),
        base=bg,
        lam=lam,
        is_ricci_flow=bg.is_ricci_flow,
    )


CATALOG = {
    't3_flat': flat_torus3,
    's3_shrinking': round_sphere3_shrinking,
    's2xs1_shrinking': sphere_cross_circle_shrinking,
    's2_static': lambda **kw: static_sphere(2, **kw),
    's3_static': lambda **kw: static_sphere(3, **kw),
}


def _parse_params(parts):
    params = {}
    for part in parts:
        key, sep, value = part.partition('=')
        if not sep:
            raise GeometryError(f'Malformed background parameter "{part}"')
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise GeometryError(f'Background parameter "{part}" is not a number')
    return params


def resolve_background(name):
    """
    Look up a catalog name such as ``s3_shrinking``, ``s3_shrinking:radius=2``
    or ``product:s3_shrinking:lambda=0.05``.
    """
    name = name.strip()
    if name.startswith('product:'):
        base_name, sep, lam = name[len('product:'):].rpartition(':lambda=')
        if not sep:
            raise GeometryError(f'Product background "{name}" needs a lambda')
        try:
            lam = float(lam)
        except ValueError:
            raise GeometryError(f'Product background "{name}" has a malformed lambda')
        return product_with_circle(resolve_background(base_name), lam)

    key, *parts = name.split(':')
    if key not in CATALOG:
        raise GeometryError(f'Unknown background "{key}"')
    try:
        bg = CATALOG[key](**_parse_params(parts))
    except TypeError as exc:
        raise GeometryError(f'Bad parameters for "{key}": {exc}')
    logger.debug(f'Resolved background {name} -> {bg.family.value}')
    return bg
