"""Positive single-lobe standing waves on the tadpole.

The ring part solves ``-phi'' + phi - log(phi^2) phi = 0`` (frequency 1) with
``phi(+-L) = r0``; any other frequency c follows from the scaling
``phi_c = e^{(c-1)/2} phi_1``.  The tail is the translated Gausson
``psi_c(x) = e^{(c+1)/2} exp(-(x - L + a)^2 / 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import phase_plane as pp
from .errors import IntegrationError
from .graph import (
    NEUMANN_KIRCHHOFF,
    GraphDomain,
    GraphFunction,
    check_same_grid,
    derivatives,
    inner_product,
    vertex_residuals,
)

POSITIVITY_GUARD = 1e-3
DEFAULT_MARGIN = 8.0  # tail truncation R = a + margin


@lru_cache(maxsize=64)
def matched_r0(L: float) -> float:
    return pp.solve_match(L)


def standing_wave_domain(L: float, h: float = 1e-3, margin: float = DEFAULT_MARGIN) -> GraphDomain:
    """Grid of spacing <= h whose tail reaches a + margin past the vertex."""
    a = pp.shift_from_r0(matched_r0(L))
    return GraphDomain.from_spacing(L, a + margin, h)


def _rhs(phi: float, xi: float) -> tuple[float, float]:
    return xi, phi - math.log(phi * phi) * phi


@dataclass(frozen=True)
class RingShot:
    phi: np.ndarray
    dphi: np.ndarray
    value_error: float  # |phi(L) - r0|
    slope_error: float  # |phi'(L) + s0|, or |phi'(0)| when mirrored


def shoot_ring(r0: float, L: float, n_ring: int, full: bool = False) -> RingShot:
    """Classical RK4 from x = -L with phi = r0, phi' = s0.

    By default only [-L, 0] is integrated and the result mirrored; ``full``
    integrates the whole ring as a cross-check.
    """
    if n_ring % 2:
        raise ValueError("n_ring must be even")
    s0 = pp.boundary_slope(r0)
    h = 2.0 * L / n_ring
    steps = n_ring if full else n_ring // 2
    phi = np.empty(steps + 1)
    xi = np.empty(steps + 1)
    p, q = r0, s0
    phi[0], xi[0] = p, q
    floor = POSITIVITY_GUARD * r0
    for j in range(steps):
        x = -L + j * h

        def rhs(pv, qv):
            if pv < floor:
                raise IntegrationError(f"profile fell below {floor:g} near x = {x:g}; r0 is not matched")
            return _rhs(pv, qv)

        k1 = rhs(p, q)
        k2 = rhs(p + 0.5 * h * k1[0], q + 0.5 * h * k1[1])
        k3 = rhs(p + 0.5 * h * k2[0], q + 0.5 * h * k2[1])
        k4 = rhs(p + h * k3[0], q + h * k3[1])
        p += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        q += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        phi[j + 1], xi[j + 1] = p, q
    if phi[-1] < floor:
        raise IntegrationError(f"profile fell below {floor:g} at the end of the shot; r0 is not matched")
    if full:
        return RingShot(phi, xi, abs(phi[-1] - r0), abs(xi[-1] + s0))
    mid = xi[-1]
    phi = np.concatenate((phi, phi[-2::-1]))
    xi = np.concatenate((xi, -xi[-2::-1]))
    xi[steps] = 0.0
    return RingShot(phi, xi, 0.0, abs(mid))


def build_ring_profile(r0: float, d: GraphDomain, full: bool = False) -> np.ndarray:
    return shoot_ring(r0, d.L, d.n_ring, full).phi


@lru_cache(maxsize=32)
def _phi1(L: float, n_ring: int) -> np.ndarray:
    phi = build_ring_profile(matched_r0(L), GraphDomain(L, 1.0, n_ring, 8))
    phi.setflags(write=False)
    return phi


@dataclass(frozen=True)
class StandingWave:
    c: float
    L: float
    r0: float
    a: float
    s0: float
    ring_profile: np.ndarray  # phi_1 on the ring grid, independent of c
    domain: GraphDomain

    @property
    def ring(self) -> np.ndarray:
        return math.exp(0.5 * (self.c - 1.0)) * self.ring_profile

    def tail_values(self, x) -> np.ndarray:
        t = np.asarray(x, dtype=float) - self.L + self.a
        return math.exp(0.5 * (self.c + 1.0)) * np.exp(-0.5 * t * t)

    @property
    def tail(self) -> np.ndarray:
        return self.tail_values(self.domain.x_tail)

    def function(self) -> GraphFunction:
        return GraphFunction(self.ring, self.tail)

    def log_square(self) -> GraphFunction:
        """log(Theta^2) from the ring samples and the closed-form tail exponent."""
        t = self.domain.x_tail - self.L + self.a
        return GraphFunction(
            (self.c - 1.0) + 2.0 * np.log(self.ring_profile),
            (self.c + 1.0) - t * t,
        )

    def with_c(self, c: float) -> "StandingWave":
        return StandingWave(float(c), self.L, self.r0, self.a, self.s0, self.ring_profile, self.domain)


def assemble_standing_wave(c: float, L: float, d: GraphDomain | None = None) -> StandingWave:
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    if d is None:
        d = standing_wave_domain(L)
    if not math.isclose(d.L, L, rel_tol=0, abs_tol=1e-14):
        raise ValueError(f"domain half-length {d.L} differs from L = {L}")
    r0 = matched_r0(float(L))
    a = pp.shift_from_r0(r0)
    return StandingWave(float(c), float(L), r0, a, pp.boundary_slope(r0), _phi1(float(L), d.n_ring), d)


def stationary_residual(wave: StandingWave) -> dict:
    """Max-norm residual of -u'' + c u - u log u^2 and of the vertex conditions."""
    d = wave.domain
    u = wave.function()
    logs = wave.log_square()
    out = {}
    for name, f, lg, h in (("ring", u.ring, logs.ring, d.h_ring), ("tail", u.tail, logs.tail, d.h_tail)):
        lap = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2
        out[name] = float(np.max(np.abs(-lap + wave.c * f[1:-1] - f[1:-1] * lg[1:-1])))
    vr = vertex_residuals(u, NEUMANN_KIRCHHOFF, d)
    out["flux"] = abs(vr.flux)
    out["continuity"] = max(abs(vr.continuity_ring), abs(vr.continuity_vertex))
    out["max"] = max(out.values())
    return out


@dataclass(frozen=True)
class FunctionalValues:
    mass: float
    energy: float
    action: float


def _xlogx(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = s[pos] * np.log(s[pos])
    return out


def functionals(u: GraphFunction, c: float, d: GraphDomain) -> FunctionalValues:
    check_same_grid(u, d)
    mass = float(np.real(inner_product(u, u, d)))
    du = derivatives(u, d)
    kinetic = float(np.real(inner_product(du, du, d)))
    potential = float(
        np.sum(d.w_ring * _xlogx(np.abs(u.ring) ** 2)) + np.sum(d.w_tail * _xlogx(np.abs(u.tail) ** 2))
    )
    energy = kinetic - potential
    # S_c = E + (c+1) Q is the sign for which Theta_c is a critical point
    return FunctionalValues(mass, energy, energy + (c + 1.0) * mass)


def wave_mass(c: float, d: GraphDomain) -> float:
    w = assemble_standing_wave(c, d.L, d)
    u = w.function()
    return float(inner_product(u, u, d))


def vk_slope(c: float, d: GraphDomain, step: float = 1e-4) -> float:
    """d mu / dc by a centred difference."""
    return (wave_mass(c + step, d) - wave_mass(c - step, d)) / (2.0 * step)
