"""
Module: family.py

Deformation of a finite family of loops and the width-or-short verdict.

Every member is replaced by its geodesic polygon, lifted to a ramp,
flowed, and projected back. At the end time its oracle width is compared
with the comparison solution seeded at its initial width; a member that
is not width bounded must be shorter than xi instead. Constant members
skip the polygon step and have to stay constant.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from flow.curves import edge_lengths
from flow.polygon import geodesic_polygon
from ramps.run import ramp_flow_run

from .exceptions import ComparisonError, FamilyVerdictError, NotOracleCompatibleError
from .ode import DEFAULT_DT, comparison_ode
from .oracle import fit_oracle_disk

logger = logging.getLogger(__name__)

XI_FRACTION = 1e-2
CONSTANT_DRIFT = 1e-12


class Verdict(str, Enum):
    WIDTH_BOUNDED = 'width_bounded'
    SHORT = 'short'


@dataclass
class MemberOutcome:
    curve_id: str
    verdict: Verdict
    bound: float
    final_A: float = None
    final_L: float = None
    initial_A: float = None

    def as_dict(self):
        row = {'curve_id': self.curve_id, 'verdict': self.verdict.value, 'bound': self.bound}
        if self.verdict == Verdict.WIDTH_BOUNDED:
            row['final_A'] = self.final_A
        else:
            row['final_L'] = self.final_L
        return row


@dataclass
class FamilyOutcome:
    xi: float
    members: list = field(default_factory=list)

    @property
    def verdicts(self):
        return [member.verdict.value for member in self.members]

    def as_list(self):
        return [member.as_dict() for member in self.members]


def _length(c, bg, t):
    return float(np.sum(edge_lengths(c, bg, t)))


def _oracle_width(c, bg, t):
    try:
        return fit_oracle_disk(c, bg, t).area()
    except NotOracleCompatibleError:
        return None


def _deform_member(args):
    index, c, bg, lam, interval, xi, cfg, anchors, ode_dt = args
    t0, t1 = interval
    curve_id = c.label or f'curve{index}'
    initial_A = _oracle_width(c, bg, t0)

    if c.is_constant():
        run = ramp_flow_run(c, lam, bg, interval, cfg)
        drift = max(float(np.max(np.abs(run.projected(i).points - c.points))) for i in range(len(run.times)))
        if drift > CONSTANT_DRIFT:
            raise FamilyVerdictError(f'Constant member {curve_id} moved by {drift:.3e}')
        final = c
    else:
        polygon = geodesic_polygon(c, min(anchors or c.N, c.N), bg, t0)
        final = ramp_flow_run(polygon, lam, bg, interval, cfg).projected(-1)

    final_L = _length(final, bg, t1)
    if initial_A is not None:
        bound = comparison_ode(initial_A, bg, interval, dt=ode_dt).final + xi
        final_A = _oracle_width(final, bg, t1)
        if final_A is not None and final_A <= bound:
            return MemberOutcome(curve_id, Verdict.WIDTH_BOUNDED, bound, final_A, final_L, initial_A)
    if final_L <= xi:
        return MemberOutcome(curve_id, Verdict.SHORT, xi, final_L=final_L, initial_A=initial_A)
    logger.error(f'{curve_id}: final length {final_L:.4g} above xi={xi:.4g} and width not bounded')
    raise FamilyVerdictError(f'{curve_id} is neither width bounded nor shorter than xi={xi:.4g}')


def deform_family(family, bg, lam, interval, cfg, xi=None, jobs=1, anchors=None, ode_dt=DEFAULT_DT):
    """
    Width-or-short verdict for every member of ``family``.

    ``xi`` defaults to 1e-2 times the largest initial length (1e-2 for a
    family of constants). ``anchors`` is the vertex count of the geodesic
    polygons, N when omitted. Members run in worker processes when
    ``jobs > 1``; verdicts come back in input order.
    """
    if not family:
        raise ComparisonError('Cannot deform an empty family')
    t0 = interval[0]
    if xi is None:
        longest = max(_length(c, bg, t0) for c in family)
        xi = XI_FRACTION * longest if longest > 0 else XI_FRACTION
    if xi <= 0:
        raise ComparisonError(f'xi must be positive, got {xi}')

    tasks = [(i, c, bg, lam, interval, xi, cfg, anchors, ode_dt) for i, c in enumerate(family)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            members = list(pool.map(_deform_member, tasks))
    else:
        members = [_deform_member(task) for task in tasks]

    outcome = FamilyOutcome(xi=xi, members=members)
    logger.info(f'Family of {len(family)} on {bg.name}: {outcome.verdicts}')
    return outcome
