"""
Module: ode.py

The comparison ODE dw/dt = -2 pi - R_min(t) w / 2 and the extinction
times it implies.

This module defines the following:
- comparison_ode: RK4 solution seeded at a width w0.
- extinction_bound: the zero of that solution, cross-checked against the
  a priori bound from the normalized width A / (t + const).
- cap_flow_reduction: totally geodesic caps on the shrinking 3-sphere,
  where the comparison inequality holds with equality.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from geometry.backgrounds import Family, scalar_min
from geometry.integrators import rk4

from .exceptions import ComparisonError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
DEFAULT_DT = 1e-4


@dataclass
class ComparisonSolution:
    t: np.ndarray
    w: np.ndarray
    const_used: float
    extinction_t: float = None

    def at(self, t):
        return float(np.interp(t, self.t, self.w))

    @property
    def final(self):
        return float(self.w[-1])

    def rows(self):
        return [{'t': float(t), 'w': float(w)} for t, w in zip(self.t, self.w)]


def normalizing_constant(bg, t0=0.0):
    """
    Shift c with R_min(t) >= -3 / (2 (t + c)) from ``t0`` on.

    When R_min(t0) >= 0 any positive shift works and 1 is used; otherwise
    c makes the bound sharp at ``t0``.
    """
    r = scalar_min(bg, t0)
    if r >= 0:
        return 1.0
    return -1.5 / r - t0


def a_priori_extinction(A0, t0, const):
    """(t0 + c) exp(A0 / (2 pi (t0 + c))) - c, where A / (t + c) must have vanished."""
    shifted = t0 + const
    if shifted <= 0:
        raise ComparisonError(f'Normalizing shift gives t0 + const = {shifted:g} <= 0')
    return shifted * math.exp(A0 / (TWO_PI * shifted)) - const


def _first_zero(t, w):
    if w[0] <= 0:
        return float(t[0])
    below = np.nonzero(w <= 0)[0]
    if not len(below):
        return None
    j = int(below[0])
    extinction = float(t[j - 1] + w[j - 1] * (t[j] - t[j - 1]) / (w[j - 1] - w[j]))
    if np.any(w[j:] > 0):
        raise ComparisonError(f'Comparison solution returns above zero after t={extinction:.6g}')
    return extinction


def comparison_ode(w0, bg, interval, dt=DEFAULT_DT, const=None):
    """
    RK4 solution of dw/dt = -2 pi - R_min(t) w / 2 over ``interval``.

    The solution continues below zero; ``extinction_t`` is the first
    crossing, interpolated between steps, and ``t0`` itself when w0 = 0.
    """
    if w0 < 0:
        raise ComparisonError(f'Initial width must be nonnegative, got {w0}')
    t0, t1 = float(interval[0]), float(interval[1])

    def rhs(t, w):
        return -TWO_PI - 0.5 * scalar_min(bg, t) * w

    t, w = rk4(rhs, (t0, t1), float(w0), dt)
    const = normalizing_constant(bg, t0) if const is None else const
    solution = ComparisonSolution(t=t, w=w, const_used=const, extinction_t=_first_zero(t, w))
    logger.debug(f'Comparison ODE from w0={w0:.6g} on {bg.name}: extinction at {solution.extinction_t}')
    return solution


def extinction_bound(A0, bg, const=None, t0=0.0, dt=DEFAULT_DT):
    """
    Time at which the comparison solution from A0 reaches zero.

    The search stops one step short of the background's own extinction;
    a solution still positive there is reported as vanishing with the
    background. The result never exceeds the a priori bound.
    """
    if A0 < 0:
        raise ComparisonError(f'Initial width must be nonnegative, got {A0}')
    if A0 == 0:
        return float(t0)
    const = normalizing_constant(bg, t0) if const is None else const
    ceiling = a_priori_extinction(A0, t0, const)
    background_end = bg.extinction_time()
    horizon = min(ceiling + dt, background_end - dt)

    def rhs(t, w):
        return -TWO_PI - 0.5 * scalar_min(bg, t) * w

    t, w = rk4(rhs, (t0, horizon), float(A0), dt, stop=lambda t, w: w <= 0)
    T = _first_zero(t, w)
    if T is None:
        if horizon < background_end - dt:
            logger.error(f'No zero of the comparison solution before the a priori bound {ceiling:.6g}')
            raise ComparisonError(f'Comparison solution from A0={A0:g} outlived its a priori bound')
        T = background_end
        logger.info(f'Comparison solution from A0={A0:g} vanishes with {bg.name} at t={T:g}')
    if T > ceiling * (1.0 + 1e-9) + 1e-12:
        raise ComparisonError(f'Extinction {T:.6g} exceeds the a priori bound {ceiling:.6g}')
    return T


@dataclass
class CapReduction:
    """A shrinking totally geodesic cap: angular radius, area and its measured rate."""
    t: np.ndarray
    phi: np.ndarray
    A: np.ndarray
    rate: np.ndarray
    bound: np.ndarray
    extinction_t: float = None
    covered_t: float = None

    @property
    def margin(self):
        return self.rate - self.bound

    @property
    def relative_margin(self):
        return np.abs(self.margin) / np.maximum(np.abs(self.bound), np.finfo(float).tiny)

    def width_series(self):
        from .margins import WidthSeries
        return WidthSeries(self.t, self.A, extinct=self.extinction_t is not None)

    def rows(self):
        return [
            {'t': float(t), 'phi': float(phi), 'A': float(A), 'dA_dt': float(rate),
             'bound': float(bound), 'margin': float(rate - bound)}
            for t, phi, A, rate, bound in zip(self.t, self.phi, self.A, self.rate, self.bound)
        ]


def cap_flow_reduction(phi0, bg, interval, dt, rtol=1e-2):
    """
    Curve shortening of the boundary of a totally geodesic cap in the shrinking S^3.

    Integrates y = cos(phi), for which dphi/dt = -cot(phi) / a^2 becomes
    dy/dt = y / a^2, with a(t)^2 the sphere's scale. The area is
    A = 2 pi a^2 (1 - cos phi); its forward difference quotient must equal
    -2 pi - R_min A / 2 to within ``rtol``.

    A cap smaller than a hemisphere closes up (y reaches 1, A = 0): that
    time is ``extinction_t``. A cap larger than a hemisphere instead spreads
    over the whole great sphere (y reaches -1, A = 4 pi a^2); that time is
    ``covered_t`` and is not an extinction. Both are interpolated between
    steps and end the run.
    """
    if bg.family != Family.ROUND_SPHERE3_SHRINKING:
        raise ComparisonError(f'Cap reduction needs the shrinking 3-sphere, got {bg.name}')
    if not 0.0 < phi0 < math.pi:
        raise ComparisonError(f'Cap radius must lie in (0, pi), got {phi0}')
    t0, t1 = float(interval[0]), float(interval[1])
    bg.check_time(t0)
    if not bg.contains_time(t1):
        raise ComparisonError(f'Interval end {t1} outside the domain {bg.t_domain} of {bg.name}')

    t, y = rk4(lambda t, y: y / bg.scale_factor(t), (t0, t1), math.cos(phi0), dt,
               stop=lambda t, y: abs(y) >= 1.0)
    extinction = covered = None
    if abs(y[-1]) >= 1.0:
        s = (1.0 - abs(y[-2])) / (abs(y[-1]) - abs(y[-2]))
        end = float(t[-2] + s * (t[-1] - t[-2]))
        t[-1], y[-1] = end, math.copysign(1.0, y[-1])
        if y[-1] > 0:
            extinction = end
            logger.info(f'Cap from phi0={phi0:.6g} closed up at t={end:.6g}')
        else:
            covered = end
            logger.info(f'Cap from phi0={phi0:.6g} covered its great sphere at t={end:.6g}')

    a2 = np.array([bg.scale_factor(tj) for tj in t])
    A = TWO_PI * a2 * (1.0 - y)
    rate = np.diff(A) / np.diff(t)
    bound = -TWO_PI - 0.5 * np.array([scalar_min(bg, tj) for tj in t[:-1]]) * A[:-1]
    reduction = CapReduction(
        t=t, phi=np.arccos(np.clip(y, -1.0, 1.0)), A=A,
        rate=np.append(rate, np.nan), bound=np.append(bound, np.nan),
        extinction_t=extinction, covered_t=covered,
    )
    worst = float(np.max(reduction.relative_margin[:-1]))
    if worst > rtol:
        logger.error(f'Cap reduction from phi0={phi0:.6g}: relative margin {worst:.3e} above {rtol:g}')
        raise ComparisonError(f'Cap area rate departs from -2 pi - R_min A / 2 by {worst:.3e}')
    return reduction
