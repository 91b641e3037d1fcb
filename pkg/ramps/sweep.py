"""
Module: sweep.py

Convergence of projected ramp flows to the direct flow as lambda -> 0.

Members run one per worker process and are merged in the order of the
lambda list, so the report does not depend on the number of workers.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from flow.convergence import fitted_order
from flow.distance import hausdorff
from flow.solver import Status, flow_run

from .exceptions import RampError
from .run import ramp_flow_run

logger = logging.getLogger(__name__)

STATIONARY_DISTANCE = 1e-12


@dataclass
class SweepMember:
    lam: float
    projected: object
    summary: dict


@dataclass
class ConvergenceReport:
    lambdas: list
    members: list = field(default_factory=list)
    direct_status: str = None
    distances: list = field(default_factory=list)
    pairwise: list = field(default_factory=list)
    order: float = None
    stationary: bool = False

    def as_dict(self):
        return {
            'lambdas': list(self.lambdas),
            'members': [dict(member.summary, distance_to_direct=d)
                        for member, d in zip(self.members, self.distances or [None] * len(self.members))],
            'direct_status': self.direct_status,
            'pairwise': self.pairwise,
            'order': self.order,
            'stationary': self.stationary,
        }


def _member(args):
    c, lam, bg, interval, cfg = args
    run = ramp_flow_run(c, lam, bg, interval, cfg)
    return SweepMember(lam=lam, projected=run.projected(-1), summary=run.summary())


def lambda_sweep(c, lambdas, bg, interval, cfg, jobs=1):
    """
    Ramp runs for each lambda against the direct flow of ``c``.

    The fitted order p solves distance ~ C lambda^p by least squares on
    the Hausdorff distances of the final projected loops to the direct
    final loop. Distances all below rounding mark the input as stationary;
    no order is fitted then, nor when the direct flow does not complete.
    """
    lambdas = [float(lam) for lam in lambdas]
    if len(lambdas) < 3:
        raise RampError(f'A sweep needs at least 3 lambdas, got {len(lambdas)}')
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])) or lambdas[-1] <= 0:
        raise RampError(f'Lambdas must be positive and strictly decreasing, got {lambdas}')

    tasks = [(c, lam, bg, interval, cfg) for lam in lambdas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            members = list(pool.map(_member, tasks))
    else:
        members = [_member(task) for task in tasks]

    report = ConvergenceReport(lambdas=lambdas, members=members)
    report.pairwise = [
        {'lambda_a': a.lam, 'lambda_b': b.lam, 'distance': hausdorff(a.projected, b.projected)}
        for i, a in enumerate(members) for b in members[i + 1:]
    ]

    direct = flow_run(c, bg, interval, cfg)
    report.direct_status = direct.status.value
    if direct.status != Status.COMPLETED:
        logger.warning(f'Direct flow ended with {direct.status.value}; no convergence order')
        return report

    report.distances = [hausdorff(member.projected, direct.final.curve) for member in members]
    if max(report.distances) <= STATIONARY_DISTANCE:
        report.stationary = True
    else:
        report.order = fitted_order(lambdas, np.maximum(report.distances, STATIONARY_DISTANCE))
    logger.info(f'Sweep over {lambdas}: distances {report.distances}, order {report.order}')
    return report
