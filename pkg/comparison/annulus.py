"""
Module: annulus.py

Ruled annuli between two synchronized trajectories.

Corresponding vertices of the two loops are joined, and every pair of
neighbouring joins bounds a quad. The quad area is taken from its
diagonals d1, d2 as (1/2) sqrt(|d1|^2 |d2|^2 - <d1, d2>^2) in the metric
at the quad centroid. The total is an upper bound proxy for the least
annulus area, and is exact for concentric flat polygons.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from flow.residuals import MarginSeries

from .exceptions import ComparisonError

logger = logging.getLogger(__name__)


@dataclass
class AnnulusProxySeries:
    t: np.ndarray
    mu: np.ndarray
    growth: MarginSeries = None
    notes: list = field(default_factory=list)

    @property
    def relative_spread(self):
        """(max mu - min mu) / mu(t0)."""
        return float(np.ptp(self.mu) / self.mu[0]) if self.mu[0] > 0 else 0.0

    def rows(self):
        return [{'t': float(t), 'mu': float(mu)} for t, mu in zip(self.t, self.mu)]


def _wrap_circle(diff, bg):
    for block, sl in bg.slices():
        if block.kind == 'circle':
            diff[:, sl] = np.mod(diff[:, sl] + 0.5, 1.0) - 0.5
    return diff


def ruled_area(c1, c2, bg, t):
    """Sum of the quad areas between corresponding edges of ``c1`` and ``c2``."""
    if c1.N != c2.N:
        raise ComparisonError(f'Loops have {c1.N} and {c2.N} vertices')
    nxt1 = c1.neighbours()[1]
    nxt2 = c2.neighbours()[1]
    d1 = _wrap_circle(nxt2 - c1.points, bg)
    d2 = _wrap_circle(c2.points - nxt1, bg)
    centroid = bg.normalize(0.25 * ((c1.points + nxt1) + (c2.points + nxt2)))
    g11 = bg.inner(centroid, t, d1, d1)
    g22 = bg.inner(centroid, t, d2, d2)
    g12 = bg.inner(centroid, t, d1, d2)
    return float(np.sum(0.5 * np.sqrt(np.maximum(g11 * g22 - g12 ** 2, 0.0))))


def annulus_proxy(traj1, traj2, bg, tolerance=1e-2):
    """
    Ruled annulus area at every common sample, with its growth check.

    The loops must have equal vertex counts and identical sample times.
    With n the dimension of ``bg``, the growth margin
    log mu(t) - log mu(t0) - (2n - 1) int |Rm| is recorded against
    ``tolerance``; identical loops give mu = 0 and no growth check.
    """
    t1, t2 = traj1.times, traj2.times
    if len(t1) != len(t2) or not np.array_equal(t1, t2):
        raise ComparisonError('Trajectories are not sampled at the same times')
    if traj1.final.curve.N != traj2.final.curve.N:
        raise ComparisonError('Trajectories have different vertex counts')

    mu = np.array([
        ruled_area(a.curve, b.curve, bg, a.t) for a, b in zip(traj1.samples, traj2.samples)
    ])
    series = AnnulusProxySeries(t=np.asarray(t1), mu=mu)
    if mu[0] <= 0:
        series.notes.append('loops coincide at t0')
        return series

    budget = (2 * bg.dim - 1) * cumulative_trapezoid([bg.rm_bound(t) for t in t1], t1, initial=0.0)
    with np.errstate(divide='ignore'):
        margin = np.log(mu) - np.log(mu[0]) - budget
    violations = [float(t) for t, m in zip(t1, margin) if m > tolerance]
    if violations:
        logger.warning(f'Annulus proxy grew beyond (2n-1)|Rm| at {len(violations)} samples')
    series.growth = MarginSeries('annulus_growth', np.asarray(t1), margin, tolerance, violations)
    return series
