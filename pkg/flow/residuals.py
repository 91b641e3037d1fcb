"""
Module: residuals.py

Residuals of the evolution identities and margins of the curvature
inequalities along a sampled trajectory.

Time derivatives are centred differences between neighbouring samples, so
every series is reported at the interior sample times. Identities that
follow a fixed parameter x (the tangent speed, the curvature at a vertex)
need trajectories run without redistribution.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .curves import arclength_derivative2, curve_geometry
from .exceptions import FlowError, InsufficientSamplesError
from .solver import Status

logger = logging.getLogger(__name__)


@dataclass
class ResidualSeries:
    name: str
    t: np.ndarray
    values: np.ndarray
    measured: np.ndarray = None
    predicted: np.ndarray = None

    @property
    def max(self):
        return float(np.max(self.values)) if len(self.values) else 0.0

    def at(self, t):
        """Residual at the sample time closest to ``t``."""
        return float(self.values[int(np.argmin(np.abs(self.t - t)))])

    def relative(self):
        """Residual relative to the predicted rate, where the latter is nonzero."""
        scale = np.maximum(np.abs(self.predicted), np.finfo(float).tiny)
        return self.values / scale


@dataclass
class MarginSeries:
    name: str
    t: np.ndarray
    margin: np.ndarray
    tolerance: float = 0.0
    violations: list = field(default_factory=list)

    @property
    def max(self):
        return float(np.max(self.margin)) if len(self.margin) else -np.inf

    @property
    def ok(self):
        return not self.violations


def centred_difference(times, values):
    """(t_j, (v_{j+1} - v_{j-1}) / (t_{j+1} - t_{j-1})) at every interior sample."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 3:
        raise InsufficientSamplesError(f'Centred differences need 3 samples, got {len(times)}')
    span = (times[2:] - times[:-2]).reshape((-1,) + (1,) * (values.ndim - 1))
    return times[1:-1], (values[2:] - values[:-2]) / span


def smooth_samples(traj):
    """Samples before any curvature blow-up, each with its curve geometry."""
    samples = traj.samples
    if traj.status == Status.CURVATURE_BLOWUP:
        samples = samples[:-1]
    bg = traj.background
    out = []
    for sample in samples:
        geo = curve_geometry(sample.curve, bg, sample.t)
        if np.any(geo.cusps) or not np.all(np.isfinite(geo.k)):
            raise FlowError(f'Curvature unbounded at t={sample.t:.6g}; no smooth segment')
        out.append((sample, geo))
    return out


def _require_fixed_parameter(traj, what):
    if traj.config.redistribute:
        raise FlowError(f'{what} follows a fixed parameter; run without redistribution')


def speed_identity_residual(traj, bg, vertex_index):
    """|d/dt g(X,X) + 2 Ric(X,X) + 2 g(X,X) k^2| at one parameter value."""
    _require_fixed_parameter(traj, 'The tangent speed identity')
    rows = smooth_samples(traj)
    i = vertex_index
    gxx, ric, k2 = [], [], []
    for sample, geo in rows:
        P = sample.curve.points[i:i + 1]
        X = geo.X[i:i + 1]
        gxx.append(bg.inner(P, sample.t, X, X)[0])
        ric.append(bg.ricci(P, X, X)[0])
        k2.append(geo.k[i] ** 2)
    times = [sample.t for sample, _ in rows]
    t, dgxx = centred_difference(times, gxx)
    gxx, ric, k2 = (np.asarray(v)[1:-1] for v in (gxx, ric, k2))
    predicted = -2.0 * ric - 2.0 * gxx * k2
    return ResidualSeries('speed_identity', t, np.abs(dgxx - predicted), dgxx, predicted)


def _curve_integrals(rows, bg):
    k2int, ricint = [], []
    for sample, geo in rows:
        k2int.append(float(np.sum(geo.k ** 2 * geo.ds)))
        ricint.append(float(np.sum(bg.ricci(sample.curve.points, geo.S, geo.S) * geo.ds)))
    return np.asarray(k2int), np.asarray(ricint)


def length_identity_residual(traj, bg):
    """|dL/dt + integral of (k^2 + Ric(S,S)) ds|."""
    rows = smooth_samples(traj)
    times = [sample.t for sample, _ in rows]
    t, dL = centred_difference(times, [np.sum(geo.ds) for _, geo in rows])
    k2int, ricint = _curve_integrals(rows, bg)
    predicted = -(k2int + ricint)[1:-1]
    return ResidualSeries('length_identity', t, np.abs(dL - predicted), dL, predicted)


def ambient_constant(bg, times, factor):
    return np.array([bg.ambient_constant(t, factor) for t in times])


def curvature_inequality_monitor(traj, bg, factor=None, tolerance=1e-6):
    """
    m(t) = max over vertices of dk/dt - k'' - k^3 - C(k + 1).

    C is ``factor`` times the background's curvature bound. Samples where
    m exceeds ``tolerance`` are reported as violations.
    """
    if traj.config.redistribute:
        logger.warning('Curvature monitor on a redistributed trajectory includes tangential drift')
    factor = traj.config.ambient_factor if factor is None else factor
    rows = smooth_samples(traj)
    times = np.array([sample.t for sample, _ in rows])
    k = np.array([geo.k for _, geo in rows])
    t, dk = centred_difference(times, k)
    kss = np.array([
        arclength_derivative2(geo.k, sample.curve, bg, sample.t) for sample, geo in rows[1:-1]
    ])
    C = ambient_constant(bg, t, factor)[:, None]
    kin = k[1:-1]
    margin = np.max(dk - kss - kin ** 3 - C * (kin + 1.0), axis=1)
    return _margins('curvature_inequality', t, margin, tolerance)


def length_inequality_monitor(traj, bg, factor=None, tolerance=1e-6):
    """dL/dt - integral of (C - k^2) ds."""
    factor = traj.config.ambient_factor if factor is None else factor
    rows = smooth_samples(traj)
    times = [sample.t for sample, _ in rows]
    t, dL = centred_difference(times, [np.sum(geo.ds) for _, geo in rows])
    L = np.array([np.sum(geo.ds) for _, geo in rows])[1:-1]
    k2int, _ = _curve_integrals(rows, bg)
    margin = dL - (ambient_constant(bg, t, factor) * L - k2int[1:-1])
    return _margins('length_inequality', t, margin, tolerance)


def total_curvature_monitor(traj, bg, factor=None, tolerance=1e-6):
    """dTheta/dt - integral of C (k + 1) ds."""
    factor = traj.config.ambient_factor if factor is None else factor
    rows = smooth_samples(traj)
    times = [sample.t for sample, _ in rows]
    theta = np.array([np.sum(geo.k * geo.ds) for _, geo in rows])
    L = np.array([np.sum(geo.ds) for _, geo in rows])
    t, dtheta = centred_difference(times, theta)
    margin = dtheta - ambient_constant(bg, t, factor) * (theta + L)[1:-1]
    return _margins('total_curvature_inequality', t, margin, tolerance)


def growth_envelope(traj, bg, factor=None, tolerance=1e-6):
    """
    Exponential growth bound for L and Theta.

    Returns one margin series per quantity: log X(t) - log X(t0) minus the
    integral of C from t0 to t. Quantities that vanish at t0 are skipped.
    """
    factor = traj.config.ambient_factor if factor is None else factor
    times = traj.times
    budget = cumulative_trapezoid(ambient_constant(bg, times, factor), times, initial=0.0)
    envelopes = {}
    for name in ('L', 'theta'):
        values = traj.series(name)
        if values[0] <= 0 or not np.all(np.isfinite(values)):
            continue
        with np.errstate(divide='ignore'):
            margin = np.log(values) - np.log(values[0]) - budget
        envelopes[name] = _margins(f'growth_{name}', times, margin, tolerance)
    return envelopes


def _margins(name, t, margin, tolerance):
    violations = [float(tj) for tj, m in zip(t, margin) if m > tolerance]
    if violations:
        logger.warning(f'{name}: {len(violations)} samples above tolerance {tolerance:g}')
    return MarginSeries(name, np.asarray(t), np.asarray(margin), tolerance, violations)
