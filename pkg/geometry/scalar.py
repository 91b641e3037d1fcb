"""Scalar curvature of homogeneous Einstein backgrounds: dR/dt = (2/3) R^2."""

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import BlowUpError, GeometryError
from .integrators import rk4

logger = logging.getLogger(__name__)

BOUND_SATISFIED = 'satisfied'
BOUND_TRIVIAL = 'trivially satisfied'
BOUND_VIOLATED = 'violated'

# Step size relative to the local blow-up scale 3/(2R) beyond which RK4 is abandoned.
BLOWUP_STEP_FRACTION = 0.5
BOUND_RTOL = 1e-9


@dataclass
class ScalarSeries:
    t: np.ndarray
    R: np.ndarray
    const: float = None
    bound_status: str = BOUND_TRIVIAL
    bound_margin: float = None
    blowup: bool = False
    blowup_estimate: float = None

    def lower_bound(self):
        """-(3/2)/(t + const) at every sample, or None when the bound is vacuous."""
        if self.const is None:
            return None
        return -1.5 / (self.t + self.const)

    def rows(self):
        return list(zip(self.t.tolist(), self.R.tolist()))


def homogeneous_scalar_ode(r0, horizon, dt, strict=False):
    """
    Integrate dR/dt = (2/3) R^2 from R(0) = r0 with RK4.

    For r0 < 0 every sample is checked against R(t) >= -(3/2)/(t + const)
    with const = -3/(2 r0); the bound holds with equality in the continuum.
    For r0 >= 0 the bound has no finite constant and is reported as trivially
    satisfied. For r0 > 0 the run stops once the step resolves less than
    twice the remaining time to blow-up, flagging the estimated blow-up time.
    """
    if horizon <= 0 or dt <= 0:
        raise GeometryError(f'Horizon {horizon} and step {dt} must be positive')
    if dt > horizon / 100.0:
        raise GeometryError(f'Step {dt} too coarse for horizon {horizon}; need dt <= horizon/100')

    def rhs(t, R):
        return (2.0 / 3.0) * R * R

    def near_blowup(t, R):
        return (2.0 / 3.0) * R * dt > BLOWUP_STEP_FRACTION

    ts, Rs = rk4(rhs, (0.0, horizon), float(r0), dt, stop=near_blowup if r0 > 0 else None)
    series = ScalarSeries(t=ts, R=Rs)

    if r0 > 0 and near_blowup(ts[-1], Rs[-1]):
        series.blowup = True
        series.blowup_estimate = float(ts[-1] + 1.5 / Rs[-1])
        logger.warning(
            f'Scalar curvature blow-up near t={series.blowup_estimate:.6g} '
            f'(exact 3/(2 r0) = {1.5 / r0:.6g})'
        )
        if strict:
            raise BlowUpError(f'R(t) blows up near t={series.blowup_estimate:.6g}')

    if r0 < 0:
        series.const = -1.5 / r0
        bound = series.lower_bound()
        slack = Rs - bound + BOUND_RTOL * np.abs(bound)
        series.bound_margin = float(np.min(Rs - bound))
        series.bound_status = BOUND_SATISFIED if np.all(slack >= 0) else BOUND_VIOLATED
        if series.bound_status == BOUND_VIOLATED:
            logger.error(f'Scalar lower bound violated by {-series.bound_margin:.3e}')
    return series
