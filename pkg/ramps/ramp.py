"""
Module: ramp.py

Loops lifted to the product with a circle of length lambda.

A RampCurve keeps the base loop and one circle coordinate theta in
[0, lambda) per vertex. Flowing happens on the assembled curve in the
product chart, where the circle coordinate is the normalized phi =
theta / lambda unwrapped along the loop so that it gains exactly one
period per turn.
"""

import logging
from dataclasses import dataclass

import numpy as np

from flow.curves import DiscreteCurve, curve_geometry

from .exceptions import RampError

logger = logging.getLogger(__name__)

CIRCLE_SUFFIX = '+circle1'


@dataclass(frozen=True)
class RampCurve:
    base: DiscreteCurve
    theta: np.ndarray
    lam: float
    winding: int = 1

    def __post_init__(self):
        if self.winding != 1:
            raise RampError(f'Ramps wind once around the circle, got winding {self.winding}')
        if not 0.0 < self.lam < 1.0:
            raise RampError(f'Circle length {self.lam} outside (0, 1)')
        theta = np.asarray(self.theta, dtype=float)
        if theta.shape != (self.base.N,):
            raise RampError(f'Need one circle coordinate per vertex, got shape {theta.shape}')
        object.__setattr__(self, 'theta', theta)

    @property
    def N(self):
        return self.base.N

    def phi(self):
        """Unwrapped normalized circle coordinate, increasing by one per turn."""
        steps = np.mod(np.diff(self.theta / self.lam), 1.0)
        return self.theta[0] / self.lam + np.concatenate([[0.0], np.cumsum(steps)])

    def assemble(self):
        """The ramp as one curve in the product chart."""
        phi = self.phi()
        turns = phi[-1] - phi[0] + np.mod((self.theta[0] - self.theta[-1]) / self.lam, 1.0)
        if not np.isclose(turns, self.winding):
            raise RampError(f'Circle coordinate winds {turns:.6g} times, expected {self.winding}')
        shift = np.concatenate([self.base.shift, [float(self.winding)]])
        return DiscreteCurve(
            np.column_stack([self.base.points, phi]),
            self.base.chart_id + CIRCLE_SUFFIX,
            shift=shift,
            label=f'ramp:{self.base.label}',
        )

    @classmethod
    def from_assembled(cls, curve, lam):
        if not curve.chart_id.endswith(CIRCLE_SUFFIX):
            raise RampError(f'Chart {curve.chart_id} has no circle factor')
        base = DiscreteCurve(
            curve.points[:, :-1],
            curve.chart_id[:-len(CIRCLE_SUFFIX)],
            shift=curve.shift[:-1],
            label=curve.label.removeprefix('ramp:'),
        )
        return cls(base=base, theta=lam * np.mod(curve.points[:, -1], 1.0), lam=lam,
                   winding=int(round(curve.shift[-1])))


@dataclass(frozen=True)
class RampMonitors:
    t: float
    u: np.ndarray
    u_min: float
    ku_max: float


def lift(c, lam):
    """The section x -> (c(x), lambda x mod lambda)."""
    if not 0.0 < lam < 1.0:
        raise RampError(f'Circle length {lam} outside (0, 1)')
    theta = np.mod(lam * np.arange(c.N) / c.N, lam)
    return RampCurve(base=c, theta=theta, lam=lam)


def project(r):
    return r.base


def ramp_quantity(r, bg_product, t):
    """u = g(S, U) from the unit tangent of the assembled curve, with min u and max k/u."""
    curve = r.assemble() if isinstance(r, RampCurve) else r
    geo = curve_geometry(curve, bg_product, t)
    U = bg_product.circle_field(curve.N)
    u = bg_product.inner(curve.points, t, geo.S, U)
    u_min = float(np.min(u))
    ku_max = float(np.max(geo.k / u)) if u_min > 0 else np.inf
    return RampMonitors(t=float(t), u=u, u_min=u_min, ku_max=ku_max)


def min_separation(curve, bg_product, t):
    """Smallest distance between two distinct vertices, circle differences wrapped."""
    P = curve.points
    diff = P[:, None, :] - P[None, :, :]
    diff[:, :, -1] = np.mod(diff[:, :, -1] + 0.5, 1.0) - 0.5
    total = np.zeros(diff.shape[:2])
    for block, sl in bg_product.slices():
        total += block.scale(t) * np.sum(diff[:, :, sl] ** 2, axis=2)
    np.fill_diagonal(total, np.inf)
    return float(np.sqrt(np.min(total)))
