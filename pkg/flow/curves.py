"""
Module: curves.py

Closed polylines in a background chart and their discrete differential
geometry.

A DiscreteCurve stores N vertices c_i = c(i/N) as rows of an (N, m)
array. Closing the loop may add a period ``shift`` (a ramp winds once
around its circle factor, so c_N = c_0 + shift there); every cyclic
neighbour lookup goes through ``neighbours`` so that the shift is applied.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import DegenerateCurveError, FlowError

logger = logging.getLogger(__name__)

MIN_VERTICES = 16
EDGE_FLOOR = 1e-12
# A vertex whose speed drops below this fraction of the median speed is a cusp.
CUSP_FRACTION = 1e-8


@dataclass(frozen=True)
class DiscreteCurve:
    points: np.ndarray
    chart_id: str
    shift: np.ndarray = None
    label: str = ''

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        if points.ndim != 2:
            raise FlowError(f'Curve vertices must be an (N, m) array, got shape {points.shape}')
        if len(points) < MIN_VERTICES:
            raise FlowError(f'Curve needs at least {MIN_VERTICES} vertices, got {len(points)}')
        if not np.all(np.isfinite(points)):
            raise FlowError('Curve vertices must be finite')
        shift = np.zeros(points.shape[1]) if self.shift is None else np.array(self.shift, dtype=float)
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'shift', shift)

    @property
    def N(self):
        return len(self.points)

    @property
    def dim(self):
        return self.points.shape[1]

    def neighbours(self):
        """The arrays (c_{i-1}, c_{i+1}) with the period shift applied at the seam."""
        prev = np.roll(self.points, 1, axis=0)
        prev[0] -= self.shift
        nxt = np.roll(self.points, -1, axis=0)
        nxt[-1] += self.shift
        return prev, nxt

    def edges(self):
        """Chord vectors c_{i+1} - c_i."""
        return self.neighbours()[1] - self.points

    def is_constant(self):
        return not np.any(self.shift) and bool(np.all(self.points == self.points[0]))

    def with_points(self, points):
        return replace(self, points=points)


@dataclass
class CurveGeometry:
    X: np.ndarray
    S: np.ndarray
    H: np.ndarray
    k: np.ndarray
    ds: np.ndarray
    speed: np.ndarray
    cusps: np.ndarray = field(default=None)

    @property
    def h(self):
        return float(np.min(self.ds)) if len(self.ds) else 0.0

    @property
    def k_max(self):
        return float(np.max(self.k))


def edge_lengths(c, bg, t):
    """Metric length of each chord c_i -> c_{i+1}, measured at the chord midpoint."""
    prev, nxt = c.neighbours()
    mid = bg.normalize((c.points + nxt) / 2.0)
    return bg.norm(mid, t, nxt - c.points)


def constant_geometry(c):
    zeros = np.zeros_like(c.points)
    flat = np.zeros(c.N)
    return CurveGeometry(X=zeros, S=zeros, H=zeros, k=flat, ds=flat, speed=flat,
                         cusps=np.zeros(c.N, dtype=bool))


def curve_geometry(c, bg, t):
    """
    Tangent, unit tangent, curvature vector and arclength weights of ``c``.

    X is the centred difference of the vertices in x = i/N. The covariant
    second derivative is the plain second difference corrected by the
    background's Christoffel term; removing its S component and dividing by
    g(X, X) gives H = nabla_S S.
    """
    bg.check_time(t)
    if c.chart_id != bg.chart_id:
        raise FlowError(f'Curve lives in chart {c.chart_id}, background uses {bg.chart_id}')
    bg.check_points(c.points)
    if c.is_constant():
        return constant_geometry(c)

    edges = edge_lengths(c, bg, t)
    if np.min(edges) < EDGE_FLOOR:
        i = int(np.argmin(edges))
        raise DegenerateCurveError(f'Edge {i} -> {(i + 1) % c.N} has length {edges[i]:.3e}')

    N = c.N
    prev, nxt = c.neighbours()
    P = c.points
    X = bg.tangent(P, (nxt - prev) * (N / 2.0))
    A = (nxt - 2.0 * P + prev) * N ** 2 + bg.christoffel(P, X)

    speed = bg.norm(P, t, X)
    cusps = speed < CUSP_FRACTION * np.median(speed)
    safe = np.where(cusps, 1.0, speed)
    S = X / safe[:, None]
    H = (A - bg.inner(P, t, A, S)[:, None] * S) / (safe ** 2)[:, None]
    S[cusps] = 0.0
    H[cusps] = 0.0

    k = np.sqrt(np.maximum(bg.inner(P, t, H, H), 0.0))
    k[cusps] = np.inf
    if np.any(cusps):
        logger.debug(f'{int(np.sum(cusps))} cusp vertices on {c.label or "curve"} at t={t:.6g}')
    return CurveGeometry(X=X, S=S, H=H, k=k, ds=speed / N, speed=speed, cusps=cusps)


def arclength_derivative2(values, c, bg, t):
    """Second derivative in arclength of a per-vertex quantity, from half-edge lengths."""
    right = edge_lengths(c, bg, t)
    left = np.roll(right, 1)
    forward = (np.roll(values, -1) - values) / right
    backward = (values - np.roll(values, 1)) / left
    return (forward - backward) / ((right + left) / 2.0)
