import numpy as np


def _closing_segments(points, shift=None):
    ends = np.roll(points, -1, axis=0)
    if shift is not None:
        ends[-1] += shift
    return points, ends - points


def directed_hausdorff(P, Q, shift=None):
    """Largest distance from a vertex of P to the closed polyline through Q."""
    starts, edges = _closing_segments(np.asarray(Q, dtype=float), shift)
    P = np.asarray(P, dtype=float)
    rel = P[:, None, :] - starts[None, :, :]
    lengths2 = np.einsum('ij,ij->i', edges, edges)
    safe = np.where(lengths2 > 0, lengths2, 1.0)
    u = np.clip(np.einsum('pij,ij->pi', rel, edges) / safe, 0.0, 1.0)
    u = np.where(lengths2 > 0, u, 0.0)
    gaps = rel - u[:, :, None] * edges[None, :, :]
    return float(np.max(np.min(np.linalg.norm(gaps, axis=2), axis=1)))


def hausdorff(c1, c2):
    """Symmetric Hausdorff distance between two closed polylines, in chart coordinates."""
    return max(
        directed_hausdorff(c1.points, c2.points, c2.shift),
        directed_hausdorff(c2.points, c1.points, c1.shift),
    )
