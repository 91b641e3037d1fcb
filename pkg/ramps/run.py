"""
Module: run.py

Curve shortening flow of lifted loops in M x S^1_lambda, with the ramp
quantity u tracked at every sample.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from flow.curves import arclength_derivative2, edge_lengths
from flow.exceptions import FlowError
from flow.residuals import ResidualSeries, centred_difference, smooth_samples
from flow.solver import Status, flow_run
from geometry.backgrounds import product_with_circle

from .exceptions import RampInvariantError
from .ramp import RampCurve, lift, min_separation, ramp_quantity

logger = logging.getLogger(__name__)


@dataclass
class RampRun:
    trajectory: object
    product: object
    lam: float
    monitors: list = field(default_factory=list)
    separation: list = field(default_factory=list)
    ramp_lengths: list = field(default_factory=list)
    projected_lengths: list = field(default_factory=list)
    envelope: list = field(default_factory=list)
    u_floor: list = field(default_factory=list)

    @property
    def status(self):
        return self.trajectory.status

    @property
    def times(self):
        return self.trajectory.times

    @property
    def u_min(self):
        return np.array([m.u_min for m in self.monitors])

    @property
    def ku_max(self):
        return np.array([m.ku_max for m in self.monitors])

    @property
    def envelope_ok(self):
        return all(self.envelope)

    @property
    def u_floor_ok(self):
        return all(self.u_floor)

    @property
    def projection_monotone(self):
        return all(p <= r for p, r in zip(self.projected_lengths, self.ramp_lengths))

    def ramp(self, index):
        return RampCurve.from_assembled(self.trajectory.samples[index].curve, self.lam)

    def projected(self, index=-1):
        return self.ramp(index).base

    def summary(self):
        return {
            'lambda': self.lam,
            'status': self.status.value,
            'final_length': self.projected_lengths[-1],
            'u_min_min': float(np.min(self.u_min)),
            'u_min_max': float(np.max(self.u_min)),
            'ku_max_max': float(np.max(self.ku_max)),
            'min_separation': float(np.min(self.separation)),
            'envelope_ok': self.envelope_ok,
        }


def ramp_flow_run(c, lam, bg, interval, cfg, sample_times=None, snapshot=None):
    """
    Lift ``c``, flow it in ``bg`` x S^1_lam and project at every sample.

    u_min <= 0 at any sample raises RampInvariantError. The k/u envelope
    k/u(t) <= k/u(t0) exp(int C) and the floor u_min(t) >= u_min(t0)/2
    exp(-int C) are recorded per sample, with C the background's ambient
    constant.
    """
    product = product_with_circle(bg, lam)
    ramp = lift(c, lam)
    traj = flow_run(ramp.assemble(), product, interval, cfg, sample_times=sample_times, snapshot=snapshot)

    run = RampRun(trajectory=traj, product=product, lam=lam)
    times = traj.times
    budget = cumulative_trapezoid(
        [product.ambient_constant(t, cfg.ambient_factor) for t in times], times, initial=0.0,
    )
    samples = traj.samples
    if traj.status == Status.CURVATURE_BLOWUP:
        logger.warning(f'Ramp flow with lambda={lam:g} hit the curvature ceiling')

    for j, sample in enumerate(samples):
        curve = sample.curve
        ramp_monitor = ramp_quantity(curve, product, sample.t)
        if ramp_monitor.u_min <= 0:
            logger.error(f'u_min={ramp_monitor.u_min:.3e} at t={sample.t:.6g}, lambda={lam:g}')
            raise RampInvariantError(f'Ramp lost u > 0 at t={sample.t:.6g}')
        run.monitors.append(ramp_monitor)
        run.separation.append(min_separation(curve, product, sample.t))
        run.ramp_lengths.append(float(np.sum(edge_lengths(curve, product, sample.t))))
        base = RampCurve.from_assembled(curve, lam).base
        run.projected_lengths.append(float(np.sum(edge_lengths(base, bg, sample.t))))

        first = run.monitors[0]
        growth = np.exp(budget[j])
        run.envelope.append(bool(ramp_monitor.ku_max <= first.ku_max * growth * (1.0 + 1e-9) + 1e-12))
        run.u_floor.append(bool(ramp_monitor.u_min >= 0.5 * first.u_min / growth))

    if not run.envelope_ok:
        logger.warning(f'k/u left its exponential envelope for lambda={lam:g}')
    logger.info(
        f'Ramp run lambda={lam:g}: u_min in [{np.min(run.u_min):.4g}, {np.max(run.u_min):.4g}], '
        f'max k={np.max(traj.series("k_max")):.4g}'
    )
    return run


def u_evolution_residual(traj, bg_product):
    """max over vertices of |du/dt - u'' - (k^2 + Ric(S,S)) u| at fixed parameter."""
    if traj.config.redistribute:
        raise FlowError('The u evolution identity follows a fixed parameter; run without redistribution')
    rows = smooth_samples(traj)
    U = None
    u, rhs = [], []
    for sample, geo in rows:
        curve = sample.curve
        if U is None:
            U = bg_product.circle_field(curve.N)
        u_j = bg_product.inner(curve.points, sample.t, geo.S, U)
        ric = bg_product.ricci(curve.points, geo.S, geo.S)
        u.append(u_j)
        rhs.append(arclength_derivative2(u_j, curve, bg_product, sample.t) + (geo.k ** 2 + ric) * u_j)
    t, du = centred_difference([sample.t for sample, _ in rows], np.array(u))
    rhs = np.array(rhs)[1:-1]
    values = np.max(np.abs(du - rhs), axis=1)
    return ResidualSeries('u_evolution', t, values, np.max(np.abs(du), axis=1), np.max(np.abs(rhs), axis=1))
