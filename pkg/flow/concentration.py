"""
Module: concentration.py

Bookkeeping of where curvature concentrates along a trajectory:

- I_B: sample times with curvature energy at most B, and their time measure.
- J_B: sample times where the loop is at least r long and no arc of
  length r carries total curvature above eps.
- the scaling statistic sup k_max^2 (t - t*) over (t*, t* + eps r^2] for
  each start t* of a J_B run.

Constants are reported, never asserted.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .curves import curve_geometry

logger = logging.getLogger(__name__)


@dataclass
class ConcentrationReport:
    B: float
    eps: float
    r: float
    energy_runs: list = field(default_factory=list)
    energy_measure: float = 0.0
    spread_runs: list = field(default_factory=list)
    scaling: list = field(default_factory=list)

    @property
    def max_scaling(self):
        return max((row['statistic'] for row in self.scaling), default=0.0)

    def as_dict(self):
        return {
            'B': self.B,
            'eps': self.eps,
            'r': self.r,
            'I_B': [list(run) for run in self.energy_runs],
            'I_B_measure': self.energy_measure,
            'J_B': [list(run) for run in self.spread_runs],
            'scaling': self.scaling,
        }


def runs(times, mask):
    """Maximal runs of consecutive samples in ``mask`` as (first, last) time pairs."""
    out, start = [], None
    for t, flag in zip(times, mask):
        if flag and start is None:
            start = t
        if flag:
            end = t
        elif start is not None:
            out.append((float(start), float(end)))
            start = None
    if start is not None:
        out.append((float(start), float(end)))
    return out


def energy_measure(times, mask):
    """
    Time measure of the samples in ``mask``.

    The indicator of ``mask`` is integrated with the trapezoid rule, so an
    isolated sample counts for half of each neighbouring interval. A
    trajectory of a single sample measures 0.
    """
    times = np.asarray(times, dtype=float)
    if len(times) < 2:
        return 0.0
    return float(trapezoid(np.asarray(mask, dtype=float), times))


def max_arc_curvature(k, ds, r):
    """Largest total curvature over arcs of length r, starting at each vertex, cyclically."""
    n = len(k)
    s = np.concatenate([[0.0], np.cumsum(np.tile(ds, 2))])
    theta = np.concatenate([[0.0], np.cumsum(np.tile(k * ds, 2))])
    ends = np.searchsorted(s, s[:n] + r, side='left')
    ends = np.minimum(ends, 2 * n)
    return float(np.max(theta[ends] - theta[:n]))


def curvature_concentration(traj, B, eps, r):
    times = traj.times
    energy = traj.series('k2int')
    in_energy = energy <= B
    report = ConcentrationReport(B=B, eps=eps, r=r)
    report.energy_runs = runs(times, in_energy)
    report.energy_measure = energy_measure(times, in_energy)

    spread = np.zeros(len(times), dtype=bool)
    for j, sample in enumerate(traj.samples):
        if sample.monitor.L < r or not np.isfinite(sample.monitor.k_max):
            continue
        geo = curve_geometry(sample.curve, traj.background, sample.t)
        spread[j] = max_arc_curvature(geo.k, geo.ds, r) <= eps
    report.spread_runs = runs(times, spread)

    k_max = traj.series('k_max')
    for start, _ in report.spread_runs:
        window = (times > start) & (times <= start + eps * r ** 2)
        statistic = float(np.max(k_max[window] ** 2 * (times[window] - start))) if np.any(window) else 0.0
        report.scaling.append({'t_star': start, 'statistic': statistic})
    logger.info(
        f'I_B measure {report.energy_measure:.6g}, {len(report.spread_runs)} J_B runs, '
        f'max scaling statistic {report.max_scaling:.6g}'
    )
    return report
