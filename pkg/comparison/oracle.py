"""
Module: oracle.py

Closed-form minimal disks.

The width of a loop is the least area of a disk it bounds. It is known in
closed form for two configurations only, and this module evaluates it
there:

- FlatCircle: a round circle in a flat chart, spanning a flat disk.
- SphericalCap: a round circle on a round sphere, spanning the smaller
  cap of a totally geodesic 2-sphere.

``fit_oracle_disk`` recognizes either shape from a discrete curve; all
other loops raise NotOracleCompatibleError.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad

from .exceptions import ComparisonError, NotOracleCompatibleError, OracleError

logger = logging.getLogger(__name__)

# Relative spread allowed in planarity and roundness of a fitted circle.
ROUNDNESS_RTOL = 1e-6
# Chart diameter below which a loop counts as a point.
POINT_DIAMETER = 1e-9


class OracleKind(str, Enum):
    FLAT_CIRCLE = 'flat_circle'
    SPHERICAL_CAP = 'spherical_cap'
    POINT = 'point'


@dataclass(frozen=True)
class FlatCircle:
    r: float
    kind = OracleKind.FLAT_CIRCLE

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r > 0):
            raise OracleError(f'Circle radius must be positive, got {self.r}')

    def area(self):
        return math.pi * self.r ** 2

    def boundary_length(self):
        return 2.0 * math.pi * self.r


@dataclass(frozen=True)
class SphericalCap:
    """Cap of angular radius ``phi`` on a round sphere of radius ``a``."""
    phi: float
    a: float = 1.0
    kind = OracleKind.SPHERICAL_CAP

    def __post_init__(self):
        if not 0.0 < self.phi < math.pi:
            raise OracleError(f'Cap radius must lie in (0, pi), got {self.phi}')
        if not (math.isfinite(self.a) and self.a > 0):
            raise OracleError(f'Sphere radius must be positive, got {self.a}')

    def area(self):
        # 2 pi a^2 (1 - cos phi), without the cancellation near phi = 0
        return 4.0 * math.pi * (self.a * math.sin(self.phi / 2.0)) ** 2

    def boundary_length(self):
        return 2.0 * math.pi * self.a * math.sin(self.phi)

    def geodesic_curvature(self):
        return 1.0 / (self.a * math.tan(self.phi))


@dataclass(frozen=True)
class PointDisk:
    kind = OracleKind.POINT

    def area(self):
        return 0.0

    def boundary_length(self):
        return 0.0


def disk_area_oracle(kind):
    """Minimal disk area: pi r^2 for a flat circle, 2 pi a^2 (1 - cos phi) for a cap."""
    return kind.area()


def _fit_flat(points, rtol):
    Q = points - points.mean(axis=0)
    _, sing, vt = np.linalg.svd(Q, full_matrices=False)
    if len(sing) > 2 and sing[2] > rtol * sing[0]:
        raise NotOracleCompatibleError('Flat loop is not planar')
    xy = Q @ vt[:2].T
    # Algebraic circle fit: |p|^2 = 2 c.p + (r^2 - |c|^2)
    design = np.column_stack([xy, np.ones(len(xy))])
    sol, *_ = np.linalg.lstsq(design, np.sum(xy ** 2, axis=1), rcond=None)
    center = sol[:2] / 2.0
    r = math.sqrt(max(sol[2] + float(center @ center), 0.0))
    spread = np.abs(np.linalg.norm(xy - center, axis=1) - r)
    if r == 0.0 or np.max(spread) > rtol * r:
        raise NotOracleCompatibleError(f'Flat loop is not round (spread {np.max(spread):.3e}, r={r:.3e})')
    return FlatCircle(r)


def _fit_cap(X, a, rtol):
    o = X.mean(axis=0)
    _, sing, vt = np.linalg.svd(X - o, full_matrices=False)
    if len(sing) > 2 and sing[2] > rtol * sing[0]:
        raise NotOracleCompatibleError('Spherical loop does not lie in a plane section')
    e = vt[:2]
    foot = o - (e @ o) @ e
    radii = np.linalg.norm(X - foot, axis=1)
    rho = float(np.mean(radii))
    if np.max(np.abs(radii - rho)) > rtol * rho:
        raise NotOracleCompatibleError('Spherical loop is not a round circle')
    # The smaller of the two caps bounded by the circle.
    phi = math.atan2(rho, float(np.linalg.norm(foot)))
    return SphericalCap(phi, a)


def fit_oracle_disk(curve, bg, t, rtol=ROUNDNESS_RTOL):
    """
    The closed-form minimal disk bounded by ``curve`` at time ``t``.

    Returns FlatCircle in flat charts, SphericalCap on a sphere factor
    (other factors must then be constant), and PointDisk for loops of
    chart diameter below POINT_DIAMETER. Loops closing with a period
    shift bound no disk.
    """
    bg.check_time(t)
    if np.any(curve.shift):
        raise NotOracleCompatibleError(f'{curve.label or "curve"} closes with a period shift')
    P = curve.points
    if curve.is_constant() or np.max(np.linalg.norm(P - P[0], axis=1)) <= POINT_DIAMETER:
        return PointDisk()

    spheres = [(block, sl) for block, sl in bg.slices() if block.kind == 'sphere']
    if any(block.kind == 'circle' for block in bg.blocks) or len(spheres) > 1:
        raise NotOracleCompatibleError(f'No disk oracle in {bg.name}')
    if not spheres:
        return _fit_flat(P, rtol)

    block, sphere = spheres[0]
    for other, sl in bg.slices():
        if sl != sphere and np.max(np.ptp(P[:, sl], axis=0)) > POINT_DIAMETER:
            raise NotOracleCompatibleError(f'Loop moves along the {other.kind} factor of {bg.name}')
    return _fit_cap(P[:, sphere], math.sqrt(block.scale(t)), rtol)


def family_width(family, bg, t):
    """Largest minimal disk area over the family."""
    if not family:
        raise ComparisonError('Width of an empty family')
    widths = [fit_oracle_disk(c, bg, t).area() for c in family]
    logger.debug(f'Family widths at t={t:.6g}: {widths}')
    return max(widths)


def gauss_bonnet_check(cap):
    """|int_D K dA + int_dD k_g ds - 2 pi| with the interior integral by quadrature."""
    a2 = cap.a ** 2
    interior, _ = quad(lambda psi: (1.0 / a2) * 2.0 * math.pi * a2 * math.sin(psi), 0.0, cap.phi,
                       epsabs=1e-14, epsrel=1e-14)
    boundary = cap.geodesic_curvature() * cap.boundary_length()
    return abs(interior + boundary - 2.0 * math.pi)


@dataclass(frozen=True)
class DiskAreaRate:
    interior: float
    boundary: float
    trace_ricci: float
    identity_residual: float = None

    @property
    def total(self):
        return self.interior + self.boundary


def disk_area_rate(cap, bg, t):
    """
    First variation of the area of a totally geodesic cap.

    The metric contributes -int_D Tr Ric^T dA when ``bg`` is a Ricci flow;
    the boundary moving by curve shortening contributes -int k_g ds. In
    three dimensions Tr Ric^T = R/2 + K - det II is checked on the disk's
    tangent plane, with K = 1/a^2 and det II = 0.
    """
    bg.check_time(t)
    spheres = [(block, sl) for block, sl in bg.slices() if block.kind == 'sphere']
    if not spheres or spheres[0][0].dim < 2:
        raise ComparisonError(f'{bg.name} has no sphere factor to carry a cap')
    block, sl = spheres[0]
    a = math.sqrt(block.scale(t))
    if not math.isclose(a, cap.a, rel_tol=1e-12):
        raise ComparisonError(f'Cap radius {cap.a} does not match the sphere radius {a} at t={t:.6g}')

    p = np.zeros((1, bg.ambient_dim))
    p[0, sl.start] = 1.0
    trace = 0.0
    for axis in (1, 2):
        V = np.zeros_like(p)
        V[0, sl.start + axis] = 1.0 / a
        trace += float(bg.ricci(p, V, V)[0])

    residual = None
    if bg.dim == 3:
        residual = abs(trace - (0.5 * bg.scalar(t) + 1.0 / a ** 2))
    interior = -trace * cap.area() if bg.is_ricci_flow else 0.0
    boundary = -cap.geodesic_curvature() * cap.boundary_length()
    return DiskAreaRate(interior=interior, boundary=boundary, trace_ricci=trace, identity_residual=residual)
