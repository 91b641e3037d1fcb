"""
Module: exporters.py

Plain-text outputs of the harness.

CSV goes through tablib with every float at 17 significant digits. JSON
is written with sorted keys and two-space indentation; floats keep their
shortest round-trip form and non-finite values become the strings
"nan", "inf" and "-inf". Snapshots are one text file per recorded
sample, one vertex per line.
"""

import json
import logging
import math
from enum import Enum
from pathlib import Path

import numpy as np
import tablib
from django.conf import settings

logger = logging.getLogger(__name__)

MONITOR_HEADERS = ['t', 'L', 'theta', 'k2int', 'k_max', 'status']
WIDTH_HEADERS = ['t', 'A', 'w', 'margin']


def format_cell(value):
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)


def to_csv(headers, rows):
    """CSV text of ``rows`` (sequences or dicts keyed by ``headers``)."""
    data = tablib.Dataset(headers=list(headers))
    for row in rows:
        if isinstance(row, dict):
            row = [row.get(name) for name in headers]
        data.append([format_cell(value) for value in row])
    return data.export('csv')


def jsonable(value):
    if isinstance(value, dict):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [jsonable(item) for item in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    if isinstance(value, Path):
        return str(value)
    return value


def to_json(payload):
    return json.dumps(jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + '\n'


def _write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding='utf-8', newline='')
    logger.debug(f'Wrote {path}')
    return path


def write_csv(path, headers, rows):
    return _write(path, to_csv(headers, rows))


def write_json(path, payload):
    return _write(path, to_json(payload))


def write_family_report(path, outcome):
    """JSON array with one {curve_id, verdict, final_A or final_L, bound} object per member."""
    return write_json(path, outcome.as_list())


def output_prefix(name, configured):
    """
    Prefix of every file of a scenario.

    ``EXTLAB['OUTPUT_PREFIX']`` (from the EXTLAB_OUT environment variable)
    replaces the configured prefix with ``<EXTLAB_OUT>/<name>``.
    """
    override = settings.EXTLAB.get('OUTPUT_PREFIX')
    if override:
        return Path(override) / name
    return Path(configured) if configured else Path('out') / name


def suffixed(prefix, suffix):
    prefix = Path(prefix)
    return prefix.with_name(f'{prefix.name}_{suffix}')


class SnapshotWriter:
    """``snapshot(index, t, curve)`` callback writing ``<prefix>_snapshots/<index>.txt``."""

    def __init__(self, prefix):
        self.directory = suffixed(prefix, 'snapshots')
        self.paths = []

    def __call__(self, index, t, curve):
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.directory / f'{index:06d}.txt'
        header = f't={format(float(t), ".17g")} N={curve.N} chart={curve.chart_id}'
        np.savetxt(path, curve.points, fmt='%.17g', header=header)
        self.paths.append(path)
