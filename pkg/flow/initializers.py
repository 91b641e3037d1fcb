"""
Module: initializers.py

Initial loops addressed by name in scenario configs:

- circle(r, plane, center): round planar circle in a flat chart.
- great_circle(): a closed geodesic of the first sphere factor.
- cap_circle(phi): boundary of a totally geodesic cap of angular radius phi.
- constant(point): the constant loop.
- polyline(anchors, jitter): geodesic polygon through the anchors.
- back_and_forth(arc): an arc traversed out and back (not immersed).
"""

import logging
from dataclasses import replace

import numpy as np

from .curves import DiscreteCurve
from .exceptions import FlowError
from .polygon import join_anchors

logger = logging.getLogger(__name__)


def _parameter(N):
    return 2.0 * np.pi * np.arange(N) / N


def _block(bg, kind):
    for block, sl in bg.slices():
        if block.kind == kind:
            return block, sl
    raise FlowError(f'{bg.name} has no {kind} factor')


def base_point(bg):
    """Reference point: e_1 on sphere factors, the origin elsewhere."""
    point = np.zeros(bg.ambient_dim)
    for block, sl in bg.slices():
        if block.kind == 'sphere':
            point[sl.start] = 1.0
    return point


def circle(bg, N, r=1.0, plane=(0, 1), center=None):
    _, sl = _block(bg, 'flat')
    i, j = (sl.start + axis for axis in plane)
    if max(i, j) >= sl.stop:
        raise FlowError(f'Plane {plane} outside the flat factor of {bg.name}')
    if r <= 0:
        raise FlowError(f'Circle radius must be positive, got {r}')
    points = np.tile(base_point(bg) if center is None else np.asarray(center, dtype=float), (N, 1))
    x = _parameter(N)
    points[:, i] += r * np.cos(x)
    points[:, j] += r * np.sin(x)
    return DiscreteCurve(points, bg.chart_id, label=f'circle(r={r:g})')


def cap_circle(bg, N, phi):
    """Geodesic circle at angular distance ``phi`` from e_3 inside the great sphere x_4 = 0."""
    if not 0.0 < phi < np.pi:
        raise FlowError(f'Cap radius must lie in (0, pi), got {phi}')
    block, sl = _block(bg, 'sphere')
    if block.dim < 2:
        raise FlowError(f'{bg.name} has no two-dimensional sphere slice')
    points = np.tile(base_point(bg), (N, 1))
    x = _parameter(N)
    points[:, sl] = 0.0
    points[:, sl.start] = np.sin(phi) * np.cos(x)
    points[:, sl.start + 1] = np.sin(phi) * np.sin(x)
    points[:, sl.start + 2] = np.cos(phi)
    return DiscreteCurve(points, bg.chart_id, label=f'cap_circle(phi={phi:.6g})')


def great_circle(bg, N):
    return replace(cap_circle(bg, N, np.pi / 2.0), label='great_circle')


def constant(bg, N, point=None):
    at = base_point(bg) if point is None else bg.normalize(np.atleast_2d(point))[0]
    return DiscreteCurve(np.tile(at, (N, 1)), bg.chart_id, label='constant')


def polyline(bg, N, anchors, jitter=0.0, seed=0, t=0.0):
    """Geodesic polygon through ``anchors``; ``jitter`` perturbs them reproducibly from ``seed``."""
    anchors = np.asarray(anchors, dtype=float)
    if anchors.ndim != 2 or anchors.shape[1] != bg.ambient_dim or len(anchors) < 3:
        raise FlowError(f'Need at least 3 anchors with {bg.ambient_dim} coordinates each')
    if jitter:
        rng = np.random.default_rng(seed)
        anchors = anchors + jitter * rng.standard_normal(anchors.shape)
    anchors = bg.normalize(anchors)
    return join_anchors(anchors, bg, t, N, bg.chart_id, label=f'polyline({len(anchors)})')


def back_and_forth(bg, N, arc=0.1):
    """
    The loop x -> arc * cos(2 pi x) along the first direction, out and back.

    Flat factors move along their first axis; sphere factors along a great
    circle through e_1, so the vertices pair up with coincident images.
    """
    if arc <= 0:
        raise FlowError(f'Arc amplitude must be positive, got {arc}')
    points = np.tile(base_point(bg), (N, 1))
    swing = arc * np.cos(_parameter(N))
    block, sl = bg.blocks[0], next(bg.slices())[1]
    if block.kind == 'sphere':
        points[:, sl.start] = np.cos(swing)
        points[:, sl.start + 1] = np.sin(swing)
    else:
        points[:, sl.start] += swing
    return DiscreteCurve(points, bg.chart_id, label=f'back_and_forth(arc={arc:g})')


INITIALIZERS = {
    'circle': circle,
    'great_circle': great_circle,
    'cap_circle': cap_circle,
    'constant': constant,
    'polyline': polyline,
    'back_and_forth': back_and_forth,
}


def build_curve(spec, bg, N, seed=0):
    """Build the initial loop described by ``{"kind": ..., **params}``."""
    params = dict(spec)
    kind = params.pop('kind', None)
    if kind not in INITIALIZERS:
        raise FlowError(f'Unknown curve initializer "{kind}"')
    if kind == 'polyline':
        params.setdefault('seed', seed)
    try:
        curve = INITIALIZERS[kind](bg, N, **params)
    except TypeError as exc:
        raise FlowError(f'Bad parameters for {kind}: {exc}')
    logger.debug(f'Built {curve.label} with N={N} in {bg.name}')
    return curve
