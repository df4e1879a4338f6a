"""Independent reference computations used by the acceptance checks.

Nothing here is used by the primary evaluation paths; these routines exist
so that results can be cross-checked by a different method.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp

from . import phase_plane as pp


def shooting_half_period(r0: float, rtol: float = 1e-12, atol: float = 1e-14) -> float:
    """Integrate phi'' = phi - log(phi^2) phi from (r0, s0) until phi' = 0.

    Returns the elapsed x, i.e. the half-period of the orbit through r0.
    """
    s0 = pp.boundary_slope(r0)

    def rhs(_, y):
        return [y[1], y[0] - math.log(y[0] * y[0]) * y[0]]

    def turn(_, y):
        return y[1]

    turn.terminal = True
    turn.direction = -1
    span = 50.0
    sol = solve_ivp(rhs, (0.0, span), [r0, s0], method="DOP853", events=turn,
                    rtol=rtol, atol=atol * max(r0, 1e-300))
    if not sol.t_events[0].size:
        raise ArithmeticError(f"no turning point within x < {span} for r0 = {r0}")
    return float(sol.t_events[0][0])


def dense_scan_turning_point(r0: float, points: int = 200001) -> float:
    """Turning point located on a dense grid of (r*, e) and refined linearly."""
    x = np.linspace(pp.R_STAR, math.e, points)
    g = pp.A(x) - 0.75 * pp.A(r0)
    j = int(np.nonzero(np.diff(np.sign(g)))[0][0])
    return float(x[j] - g[j] * (x[j + 1] - x[j]) / (g[j + 1] - g[j]))
