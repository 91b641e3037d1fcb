"""Observed convergence orders from refinement studies."""

import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

# Below this, successive differences are rounding noise and the study is exact.
ROUNDOFF_FLOOR = 1e-11


@dataclass
class RefinementStudy:
    name: str
    levels: list
    residuals: list
    ratio: float
    threshold: float
    exact: bool = False

    @property
    def passed(self):
        return self.exact or self.ratio >= self.threshold

    @property
    def order(self):
        return math.log2(self.ratio) if self.ratio > 0 and math.isfinite(self.ratio) else math.inf

    def as_dict(self):
        return {
            'name': self.name,
            'levels': list(self.levels),
            'residuals': list(self.residuals),
            'ratio': self.ratio,
            'threshold': self.threshold,
            'exact': self.exact,
            'passed': self.passed,
        }


def halving_study(name, levels, measure, threshold, floor=ROUNDOFF_FLOOR):
    """
    Ratio r(level_0) / r(level_1) of a residual that should vanish under refinement.

    Used for the spatial order: halving h must shrink the residual by
    ``threshold``. Residuals already at rounding level count as exact.
    """
    residuals = [float(measure(level)) for level in levels[:2]]
    coarse, fine = residuals
    exact = coarse <= floor and fine <= floor
    ratio = coarse / fine if fine > 0 else math.inf
    logger.info(f'{name}: residuals {coarse:.3e} -> {fine:.3e}, ratio {ratio:.3f}')
    return RefinementStudy(name, list(levels[:2]), residuals, ratio, threshold, exact)


def richardson_study(name, levels, measure, threshold, floor=ROUNDOFF_FLOOR):
    """
    Three-level ratio |r_0 - r_1| / |r_1 - r_2| for a residual whose limit is not zero.

    Used for the time step: at fixed h the residual tends to its spatial
    part, and the step-size contribution shrinks by 2^p per halving.
    Differences at rounding level mean the residual does not depend on
    the step at all, which counts as exact.
    """
    residuals = [float(measure(level)) for level in levels[:3]]
    first = abs(residuals[0] - residuals[1])
    second = abs(residuals[1] - residuals[2])
    scale = max(1.0, max(abs(r) for r in residuals))
    exact = first <= floor * scale
    ratio = first / second if second > 0 else math.inf
    logger.info(f'{name}: residuals {residuals}, difference ratio {ratio:.3f}')
    return RefinementStudy(name, list(levels[:3]), residuals, ratio, threshold, exact)


def window_times(t0, t_mid, delta):
    """Sample times for a centred time difference of width 2 delta at ``t_mid``."""
    if not t0 < t_mid - delta:
        raise ValueError(f'Difference window around {t_mid} must start after {t0}')
    return [t0, t_mid - delta, t_mid, t_mid + delta]


def fitted_order(xs, ys):
    """Slope p of log y = log C + p log x by least squares."""
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)
