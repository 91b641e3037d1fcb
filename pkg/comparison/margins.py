"""
Module: margins.py

Width series of oracle curves and their margins against the comparison
inequality, as one-sided forward difference quotients.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from flow.exceptions import InsufficientSamplesError
from flow.residuals import MarginSeries
from geometry.backgrounds import scalar_min

from .exceptions import ComparisonError
from .oracle import fit_oracle_disk

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
WIDTH_FLOOR = -1e-12


@dataclass(frozen=True)
class WidthSeries:
    """Minimal disk areas A at increasing times; A = 0 only at a declared extinction."""
    t: np.ndarray
    A: np.ndarray
    extinct: bool = False

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        A = np.asarray(self.A, dtype=float)
        if t.shape != A.shape or t.ndim != 1:
            raise ComparisonError(f'Width series needs matching 1-d t and A, got {t.shape} and {A.shape}')
        if np.any(np.diff(t) <= 0):
            raise ComparisonError('Width series times must increase strictly')
        if np.any(A < WIDTH_FLOOR):
            raise ComparisonError(f'Negative width {np.min(A):.3e}')
        if self.extinct and A[-1] > 0:
            raise ComparisonError(f'Declared extinction with width {A[-1]:.6g} left')
        zero = np.nonzero(A <= 0)[0]
        if len(zero) and (not self.extinct or zero[0] != len(A) - 1):
            if not np.all(A == 0):
                raise ComparisonError(f'Width vanishes at t={t[zero[0]]:.6g} without a declared extinction')
        object.__setattr__(self, 't', t)
        object.__setattr__(self, 'A', np.maximum(A, 0.0))

    @classmethod
    def from_samples(cls, samples, bg):
        """Widths of the oracle disks of ``(t, curve)`` pairs."""
        t, A = [], []
        for tj, curve in samples:
            t.append(tj)
            A.append(fit_oracle_disk(curve, bg, tj).area())
        return cls(t, A, extinct=bool(A and A[-1] == 0))

    @classmethod
    def from_trajectory(cls, traj):
        return cls.from_samples([(s.t, s.curve) for s in traj.samples], traj.background)

    def rows(self):
        return [{'t': float(t), 'A': float(A)} for t, A in zip(self.t, self.A)]


def _forward(ws):
    if len(ws.t) < 2:
        raise InsufficientSamplesError(f'Forward differences need 2 samples, got {len(ws.t)}')
    if not np.any(ws.A):
        raise ComparisonError('Width vanishes identically; constant loops take the length branch')
    return np.diff(ws.t)


def _margins(name, t, margin, rate, rtol, atol):
    limit = rtol * np.abs(rate) + atol
    violations = [float(tj) for tj, m, lim in zip(t, margin, limit) if m > lim]
    if violations:
        logger.warning(f'{name}: {len(violations)} samples above {rtol:g} of the rate')
    return MarginSeries(name, np.asarray(t), np.asarray(margin), rtol, violations)


def lemma_margin(ws, bg, rtol=1e-2, atol=1e-9):
    """
    Forward difference of A minus (-2 pi - R_min A / 2) at every sample but the last.

    A sample violates the inequality when its margin exceeds ``rtol`` of
    the measured rate plus ``atol``.
    """
    steps = _forward(ws)
    rate = np.diff(ws.A) / steps
    R = np.array([scalar_min(bg, tj) for tj in ws.t[:-1]])
    margin = rate + TWO_PI + 0.5 * R * ws.A[:-1]
    return _margins('lemma', ws.t[:-1], margin, rate, rtol, atol)


def normalized_width_check(ws, const, rtol=1e-2, atol=1e-9):
    """Forward difference of A / (t + const) plus 2 pi / (t + const)."""
    shifted = ws.t + const
    if np.any(shifted <= 0):
        raise ComparisonError(f'Normalizing shift {const:g} leaves t + const <= 0')
    steps = _forward(ws)
    normalized = ws.A / shifted
    rate = np.diff(normalized) / steps
    margin = rate + TWO_PI / shifted[:-1]
    return _margins('normalized_width', ws.t[:-1], margin, rate, rtol, atol)


def width_rows(ws, solution, margins):
    """CSV rows t, A, w, margin; the last sample has no forward margin."""
    margin = list(margins.margin) + [math.nan]
    return [
        {'t': float(t), 'A': float(A), 'w': solution.at(t), 'margin': float(m)}
        for t, A, m in zip(ws.t, ws.A, margin)
    ]
