"""Piecewise geodesic loops through sampled anchor vertices."""

import logging

import numpy as np

from .curves import DiscreteCurve
from .exceptions import FlowError, GeodesicError

logger = logging.getLogger(__name__)

ANCHOR_FLOOR = 1e-12
ANTIPODAL_MARGIN = 1e-9


def _block_angle(a, b):
    """Great-circle angle between unit vectors, accurate near 0 and pi."""
    return float(np.arctan2(np.linalg.norm(b - np.dot(a, b) * a), np.dot(a, b)))


def segment_length(bg, t, a, b):
    """Length of the product geodesic from ``a`` to ``b``."""
    total = 0.0
    for block, sl in bg.slices():
        if block.kind == 'sphere':
            angle = _block_angle(a[sl], b[sl])
            if angle > np.pi - ANTIPODAL_MARGIN:
                raise GeodesicError(f'Antipodal anchors {a[sl]} and {b[sl]} have no unique geodesic')
            total += block.scale(t) * angle ** 2
        else:
            total += block.scale(t) * float(np.dot(b[sl] - a[sl], b[sl] - a[sl]))
    return float(np.sqrt(total))


def geodesic_points(bg, a, b, fractions):
    """Points at the given fractions along the geodesic from ``a`` to ``b``."""
    u = np.asarray(fractions, dtype=float)[:, None]
    out = np.empty((len(u), len(a)))
    for block, sl in bg.slices():
        if block.kind == 'sphere':
            angle = _block_angle(a[sl], b[sl])
            if angle < ANCHOR_FLOOR:
                out[:, sl] = a[sl]
                continue
            out[:, sl] = (np.sin((1.0 - u) * angle) * a[sl] + np.sin(u * angle) * b[sl]) / np.sin(angle)
        else:
            out[:, sl] = a[sl] + u * (b[sl] - a[sl])
    return bg.normalize(out)


def allocate(lengths, N):
    """Split N vertices over segments in proportion to length, at least one each."""
    raw = N * np.asarray(lengths) / np.sum(lengths)
    counts = np.maximum(np.floor(raw).astype(int), 1)
    while counts.sum() < N:
        counts[int(np.argmax(raw - counts))] += 1
    while counts.sum() > N:
        excess = np.where(counts > 1, counts - raw, -np.inf)
        counts[int(np.argmax(excess))] -= 1
    return counts


def join_anchors(anchors, bg, t, N, chart_id, shift=None, label=''):
    """Closed loop of N vertices through ``anchors`` joined by geodesic segments."""
    anchors = np.asarray(anchors, dtype=float)
    shift = np.zeros(anchors.shape[1]) if shift is None else np.asarray(shift, dtype=float)
    ends = np.vstack([anchors[1:], anchors[:1] + shift])
    lengths = np.array([segment_length(bg, t, a, b) for a, b in zip(anchors, ends)])
    if np.min(lengths) < ANCHOR_FLOOR:
        j = int(np.argmin(lengths))
        raise GeodesicError(f'Anchors {j} and {(j + 1) % len(anchors)} are too close to fix a geodesic')

    counts = allocate(lengths, N)
    pieces = [
        geodesic_points(bg, a, b, np.arange(n) / n)
        for a, b, n in zip(anchors, ends, counts)
    ]
    return DiscreteCurve(np.vstack(pieces), chart_id, shift=shift, label=label)


def geodesic_polygon(c, V, bg, t):
    """
    Replace ``c`` by the geodesic polygon through V of its vertices.

    Anchor j is vertex round(j N / V); the N output vertices are spread over
    the segments in proportion to segment length, each segment traversed at
    constant speed and starting at its anchor. V = N returns ``c``'s vertices.

    The segments meet in corners and no corner is rounded off. With
    centred differences a corner of turning angle theta between edges of
    length h carries k ds = 2 tan(theta / 2) and k = O(1 / h), so the
    curvature at the anchors grows with N and the segment interiors carry
    none. The flow smooths the corners within its first steps; monitors
    taken at t0 see the polygon, not the loop it samples.
    """
    if not 3 <= V <= c.N:
        raise FlowError(f'Polygon needs 3 <= V <= N={c.N}, got {V}')
    if c.is_constant():
        raise GeodesicError('A constant loop has no geodesic polygon')
    bg.check_points(c.points)
    index = np.round(np.arange(V) * c.N / V).astype(int)
    logger.debug(f'Geodesic polygon through {V} anchors of {c.label or "curve"}')
    return join_anchors(c.points[index], bg, t, c.N, c.chart_id, shift=c.shift, label=c.label)
