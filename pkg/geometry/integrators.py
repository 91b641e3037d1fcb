"""Classical fourth order Runge-Kutta used by every ODE in the lab."""

import numpy as np


def rk4_step(rhs, t, y, dt):
    """Advance ``y' = rhs(t, y)`` by one RK4 step of size ``dt``."""
    f1 = rhs(t, y)
    f2 = rhs(t + dt / 2.0, y + dt * f1 / 2.0)
    f3 = rhs(t + dt / 2.0, y + dt * f2 / 2.0)
    f4 = rhs(t + dt, y + dt * f3)
    return y + dt * (f1 + 2.0 * f2 + 2.0 * f3 + f4) / 6.0


def rk4(rhs, tspan, y0, dt, stop=None):
    """
    Integrate ``y' = rhs(t, y)`` over ``tspan`` with fixed steps.

    The last step is shortened so the grid ends exactly at ``tspan[1]``.
    ``stop(t, y)`` may end the integration early; the sample that
    triggered it is kept.

    Returns ``(t, y)`` with ``t`` of shape ``(n+1,)`` and ``y`` of shape
    ``(n+1,)`` for scalar problems, ``(n+1, m)`` otherwise.
    """
    t0, t1 = float(tspan[0]), float(tspan[1])
    n = max(int(np.ceil((t1 - t0) / dt - 1e-9)), 1)
    grid = t0 + dt * np.arange(n + 1)
    grid[-1] = t1

    y = np.asarray(y0, dtype=float)
    ts, ys = [t0], [y]
    for i in range(n):
        y = rk4_step(rhs, grid[i], y, grid[i + 1] - grid[i])
        ts.append(grid[i + 1])
        ys.append(y)
        if stop is not None and stop(grid[i + 1], y):
            break
    return np.array(ts), np.array(ys)
