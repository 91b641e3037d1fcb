"""
Module: solver.py

Explicit curve shortening flow d/dt c = H in a time-dependent background.

This module defines the following:
- FlowConfig: step policy, curvature ceiling and sampling of a run.
- MonitorSample / FlowTrajectory: the sampled record of a run.
- monitors, csf_step, redistribute, flow_run.

Steps are Heun (RK2) with the explicit stability bound dt <= cfl * h^2;
sphere blocks are pulled back onto the unit sphere after each stage.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from django.conf import settings
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from .curves import curve_geometry, edge_lengths
from .exceptions import CFLViolationError, FlowError

logger = logging.getLogger(__name__)

MAX_STEPS = 2_000_000


class Status(str, Enum):
    COMPLETED = 'completed'
    CURVATURE_BLOWUP = 'curvature_blowup'
    EXTINCT_SHORT = 'extinct_short'


@dataclass(frozen=True)
class FlowConfig:
    """
    Numerical policy of a flow run.

    ``dt`` fixes the step size; when it is None every step takes
    ``cfl * h^2``. ``samples`` equally spaced sample times are recorded
    unless the caller passes explicit ones to ``flow_run``.
    """
    cfl: float = 0.2
    dt: float = None
    redistribute: bool = True
    ceiling: float = 1.0e3
    ambient_factor: float = 10.0
    extinction_fraction: float = 1.0e-2
    samples: int = 100
    snapshot_stride: int = 0

    @classmethod
    def from_settings(cls, **overrides):
        lab = settings.EXTLAB
        values = {
            'cfl': lab['CFL'],
            'ceiling': lab['CURVATURE_CEILING'],
            'ambient_factor': lab['AMBIENT_CONSTANT_FACTOR'],
            'extinction_fraction': lab['EXTINCTION_FRACTION'],
            'snapshot_stride': lab['SNAPSHOT_STRIDE'],
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def but(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class MonitorSample:
    t: float
    L: float
    theta: float
    k2int: float
    k_max: float
    swept_area_rate: float

    def as_row(self):
        return [self.t, self.L, self.theta, self.k2int, self.k_max]


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    curve: object
    monitor: MonitorSample


@dataclass
class FlowTrajectory:
    background: object
    config: FlowConfig
    samples: list = field(default_factory=list)
    status: Status = Status.COMPLETED
    steps: int = 0
    L0: float = None

    def append(self, t, curve, monitor):
        if self.samples and t <= self.samples[-1].t:
            raise FlowError(f'Sample time {t} does not follow {self.samples[-1].t}')
        self.samples.append(TrajectorySample(t, curve, monitor))

    @property
    def times(self):
        return np.array([s.t for s in self.samples])

    def series(self, name):
        return np.array([getattr(s.monitor, name) for s in self.samples])

    @property
    def final(self):
        return self.samples[-1]

    def swept_area(self, t_from=None, t_to=None):
        """Trapezoid integral of the swept-area rate between two sample times."""
        t = self.times
        rate = self.series('swept_area_rate')
        lo = t[0] if t_from is None else t_from
        hi = t[-1] if t_to is None else t_to
        inside = (t >= lo) & (t <= hi)
        return float(trapezoid(rate[inside], t[inside])) if np.sum(inside) > 1 else 0.0

    def monitor_rows(self):
        return [s.monitor.as_row() + [self.status.value] for s in self.samples]


def monitors(c, bg, t, geometry=None):
    """Length, total curvature and curvature energy of ``c`` at time ``t``."""
    geo = geometry if geometry is not None else curve_geometry(c, bg, t)
    if np.any(geo.cusps):
        theta = k2int = k_max = math.inf
    else:
        theta = float(np.sum(geo.k * geo.ds))
        k2int = float(np.sum(geo.k ** 2 * geo.ds))
        k_max = float(np.max(geo.k))
    return MonitorSample(
        t=float(t),
        L=float(np.sum(geo.ds)),
        theta=theta,
        k2int=k2int,
        k_max=k_max,
        swept_area_rate=theta,
    )


def redistribute(c, bg, t):
    """
    Resample ``c`` to equal arclength spacing with a periodic cubic spline.

    The period shift is removed before fitting (Q = c - shift * s / L) so
    the fitted map is periodic; vertex 0 stays where it is.
    """
    if c.is_constant():
        return c
    edges = edge_lengths(c, bg, t)
    s = np.concatenate([[0.0], np.cumsum(edges)])
    L = s[-1]
    Q = c.points - np.outer(s[:-1] / L, c.shift)
    spline = CubicSpline(s, np.vstack([Q, Q[:1]]), bc_type='periodic')
    s_new = L * np.arange(c.N) / c.N
    points = spline(s_new) + np.outer(s_new / L, c.shift)
    return c.with_points(bg.normalize(points))


def _velocity(c, bg, t):
    return curve_geometry(c, bg, t).H


def csf_step(c, bg, t, dt, cfg, geometry=None):
    """
    One Heun step of d/dt c = H from ``t`` to ``t + dt``.

    ``geometry`` may carry the already evaluated geometry of ``c`` at ``t``.
    """
    geo = geometry if geometry is not None else curve_geometry(c, bg, t)
    if c.is_constant():
        return c
    limit = cfg.cfl * geo.h ** 2
    if dt > limit * (1.0 + 1e-9):
        raise CFLViolationError(f'Step {dt:.3e} exceeds cfl*h^2 = {limit:.3e} at t={t:.6g}')

    predictor = c.with_points(bg.normalize(c.points + dt * geo.H))
    H1 = _velocity(predictor, bg, t + dt)
    corrected = c.with_points(bg.normalize(c.points + 0.5 * dt * (geo.H + H1)))
    if cfg.redistribute:
        corrected = redistribute(corrected, bg, t + dt)
    return corrected


def default_sample_times(interval, samples):
    t0, t1 = interval
    times = np.linspace(t0, t1, samples + 1)
    times[-1] = t1
    return times


def flow_run(c, bg, interval, cfg, sample_times=None, snapshot=None):
    """
    Flow ``c`` over ``interval`` and record monitors at the sample times.

    Steps are shortened to land on each sample time exactly, so runs that
    share sample times are synchronized. The run ends early with status
    curvature_blowup once k_max * L(t0) exceeds ``cfg.ceiling`` and with
    extinct_short once L drops below ``cfg.extinction_fraction * L(t0)``.
    ``snapshot(index, t, curve)`` is called at every ``cfg.snapshot_stride``-th
    recorded sample, at the last one and at the state where a run stops early.
    """
    t0, t1 = float(interval[0]), float(interval[1])
    if not t1 > t0:
        raise FlowError(f'Interval end {t1} must follow its start {t0}')
    bg.check_time(t0)
    if not bg.contains_time(t1):
        raise FlowError(f'Interval end {t1} outside the domain {bg.t_domain} of {bg.name}')

    times = default_sample_times((t0, t1), cfg.samples) if sample_times is None else np.asarray(sample_times, dtype=float)
    if times[0] != t0 or times[-1] != t1 or np.any(np.diff(times) <= 0):
        raise FlowError('Sample times must increase strictly from the interval start to its end')

    geo = curve_geometry(c, bg, t0)
    first = monitors(c, bg, t0, geo)
    traj = FlowTrajectory(background=bg, config=cfg, L0=first.L)
    traj.append(t0, c, first)
    if snapshot is not None:
        snapshot(0, t0, c)
    logger.info(f'Flowing {c.label or "curve"} (N={c.N}) in {bg.name} over [{t0:g}, {t1:g}]')

    if c.is_constant():
        for index, tau in enumerate(times[1:], start=1):
            traj.append(float(tau), c, replace(first, t=float(tau)))
            if snapshot is not None:
                snapshot(index, float(tau), c)
        return traj

    if first.k_max * traj.L0 > cfg.ceiling:
        traj.status = Status.CURVATURE_BLOWUP
        logger.warning(f'{c.label or "curve"} starts above the curvature ceiling')
        return traj

    t = t0
    for index, tau in enumerate(times[1:], start=1):
        while t < tau:
            step = cfg.dt if cfg.dt is not None else cfg.cfl * geo.h ** 2
            if tau - t <= step * (1.0 + 1e-9):
                step, t_next = tau - t, float(tau)
            else:
                t_next = t + step
            c = csf_step(c, bg, t, step, cfg, geo)
            t = t_next
            traj.steps += 1
            if traj.steps > MAX_STEPS:
                raise FlowError(f'More than {MAX_STEPS} steps before t={tau:g}')
            geo = curve_geometry(c, bg, t)
            k_max = float(np.max(geo.k))
            L = float(np.sum(geo.ds))
            if k_max * traj.L0 > cfg.ceiling:
                traj.status = Status.CURVATURE_BLOWUP
            elif L < cfg.extinction_fraction * traj.L0:
                traj.status = Status.EXTINCT_SHORT
            if traj.status != Status.COMPLETED:
                traj.append(t, c, monitors(c, bg, t, geo))
                if snapshot is not None:
                    snapshot(index, t, c)
                logger.warning(f'{c.label or "curve"} stopped at t={t:.6g}: {traj.status.value}')
                return traj
        traj.append(t, c, monitors(c, bg, t, geo))
        if snapshot is not None and (index % max(cfg.snapshot_stride, 1) == 0 or index == len(times) - 1):
            snapshot(index, t, c)

    logger.info(f'Completed {traj.steps} steps, final L={traj.final.monitor.L:.6g}')
    return traj
