"""Phase-plane machinery for the ring boundary-value problem.

The ring equation ``-phi'' + phi - log(phi^2) phi = 0`` has the first integral
``xi^2 - A(phi)`` with ``A(phi) = 2 phi^2 - log(phi^2) phi^2``.  A positive
single-lobe ring profile starts at ``(r0, s0)`` with ``s0 = sqrt(A(r0))/2``,
climbs to the turning point ``r_plus`` and comes back; the half-period ``T(r0)``
must equal the ring half-length.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import DomainError

R_STAR = math.exp(0.5)
A_STAR = math.e  # A(R_STAR)
E = math.e

# Guard radius around R_STAR where the 0/0 quotients switch to their Taylor
# expansions.  With d = phi - r*, A''(r*) = -4 and A'''(r*) = -4/r*:
#   A - A* = -2 d^2 - (2/3) d^3 / r* + O(d^4),   A' = -4 d - 2 d^2 / r* + O(d^3)
# hence
#   2 (A - A*) A'' / A'^2 = 1 + d / (3 r*) + O(d^2)
#   2 (A - A*) / A'       = d - d^2 / (6 r*) + O(d^3)
TAYLOR_GUARD = 1e-4

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 400
QUAD_ACCEPT = 1e-10


def A(phi):
    phi = np.asarray(phi, dtype=float)
    return phi**2 * (2.0 - np.log(phi**2))


def dA(phi):
    phi = np.asarray(phi, dtype=float)
    return 2.0 * phi * (1.0 - np.log(phi**2))


def d2A(phi):
    phi = np.asarray(phi, dtype=float)
    return -2.0 - 2.0 * np.log(phi**2)


def _check_r0(r0: float) -> float:
    r0 = float(r0)
    if not (0.0 < r0 < E):
        raise DomainError(f"r0 must lie in (0, e), got {r0!r}")
    return r0


def eval_energy(phi: float, xi: float) -> float:
    """First integral ``xi^2 - A(phi)``; constant along ring solutions."""
    if phi <= 0:
        raise DomainError(f"phi must be positive, got {phi!r}")
    return float(xi * xi - A(phi))


def boundary_slope(r0: float) -> float:
    """Slope ``s0 = sqrt(A(r0)) / 2`` imposed at x = -L."""
    return 0.5 * math.sqrt(float(A(_check_r0(r0))))


def level_energy(r0: float) -> float:
    """``E0 = s0^2 - A(r0) = -(3/4) A(r0)``."""
    return -0.75 * float(A(_check_r0(r0)))


def bisect(f, lo: float, hi: float, max_iter: int = 200) -> float:
    """Bisection on a sign change of ``f``; runs until the bracket stops shrinking."""
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _A_below_e(delta: float) -> float:
    """``A(e - delta)``, accurate to full relative precision as delta -> 0."""
    return 2.0 * (E - delta) ** 2 * -math.log1p(-delta / E)


def _turning_offset(r0: float) -> float:
    """``e - r_plus``; carried separately because r_plus is within an ulp of e for tiny r0."""
    target = 0.75 * float(A(r0))
    return bisect(lambda dl: _A_below_e(dl) - target, 0.0, E - R_STAR)


def turning_point(r0: float) -> float:
    """Right turning point ``r_plus`` in (r*, e) with ``A(r_plus) = (3/4) A(r0)``.

    A is strictly decreasing on (r*, e), from e down to 0, so the root is
    bracketed for every r0 in (0, e).
    """
    r0 = _check_r0(r0)
    return E - _turning_offset(r0)


class _Orbit:
    """Level curve through (r0, s0), parametrised by the depth v = r_plus - phi below the turning point."""

    def __init__(self, r0: float):
        self.r0 = r0
        self.delta = _turning_offset(r0)
        self.rp = E - self.delta
        self.target = 0.75 * float(A(r0))
        self._log_gap = -math.log1p(-self.delta / E)  # 1 - log r_plus

    def xi_sq_depth(self, v: float) -> float:
        """``xi^2 = A(r_plus - v) - A(r_plus)`` at depth v below the turning point.

        Near the turning point this is rewritten as
        2 [(p - v)^2 log(p / (p - v)) - (1 - log p)(2 p v - v^2)],  p = r_plus,
        which has no cancellation as v -> 0.
        """
        p = self.rp
        if v > 0.25 * p:
            return float(A(p - v)) - self.target
        return 2.0 * ((p - v) ** 2 * -math.log1p(-v / p) - self._log_gap * (2.0 * p * v - v * v))

    def xi_sq(self, phi: float) -> float:
        v = (E - phi) - self.delta
        if v > 0.25 * self.rp:
            return float(A(phi)) - self.target
        return self.xi_sq_depth(max(v, 0.0))


def _guarded_quotient(phi: float) -> float:
    """``2 (A(phi) - A*) A''(phi) / A'(phi)^2``, equal to 1 at phi = r*."""
    d = phi - R_STAR
    if abs(d) < TAYLOR_GUARD:
        return 1.0 + d / (3.0 * R_STAR)
    return float(2.0 * (A(phi) - A_STAR) * d2A(phi) / dA(phi) ** 2)


def _boundary_term(r0: float, s0: float) -> float:
    d = r0 - R_STAR
    if abs(d) < TAYLOR_GUARD:
        return (d - d * d / (6.0 * R_STAR)) * s0
    return float(2.0 * (A(r0) - A_STAR) * s0 / dA(r0))


def _derivative_kernel(phi: float) -> float:
    # 1 - 2 (A - A*) A'' / A'^2 = f(phi) / (phi^2 (1 - log phi^2)^2), vanishing at r*
    d = phi - R_STAR
    if abs(d) < TAYLOR_GUARD:
        return -d / (3.0 * R_STAR)
    ell = math.log(phi * phi)
    f = phi * phi * (3.0 - ell) - E * (1.0 + ell)
    return f / (phi * phi * (1.0 - ell) ** 2)


def _breakpoints(r0: float, rp: float) -> list[float]:
    """Interior breakpoints for integrals over [r0, rp] in phi.

    The integrands behave like 1/phi for small phi, so decades below 1 get
    their own panels; r* is added because the guarded quotient switches form there.
    """
    pts = []
    p = 10.0 * r0
    while p < 1.0:
        pts.append(p)
        p *= 10.0
    if r0 < R_STAR < rp:
        pts.append(R_STAR)
    return [q for q in pts if r0 < q < rp]


def _integrate(f, a: float, b: float, points=None, log_below: float = 0.0) -> float:
    """Adaptive Gauss-Kronrod over [a, b], one call per panel between breakpoints.

    Panels lying below ``log_below`` are integrated in ``s = log x``, which
    flattens integrands that grow like 1/x near the origin.
    """
    edges = [a, *sorted(points or []), b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if not hi > lo:
            continue
        if hi <= log_below:
            g, glo, ghi = (lambda s: f(math.exp(s)) * math.exp(s)), math.log(lo), math.log(hi)
        else:
            g, glo, ghi = f, lo, hi
        with warnings.catch_warnings():
            # tolerances sit at the roundoff floor; the returned error bound is checked instead
            warnings.simplefilter("ignore", IntegrationWarning)
            val, err = quad(g, glo, ghi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
        if not err <= QUAD_ACCEPT * max(1.0, abs(val)):
            raise ArithmeticError(f"quadrature on [{lo:.6g}, {hi:.6g}] reports error {err:.3e}")
        total += val
    return total


def period(r0: float) -> float:
    """Half-period ``T(r0)`` of the orbit through ``(r0, sqrt(A(r0))/2)``.

    Evaluated through the regularised identity

        [E0 + A*] T = int_{r0}^{r+} [3 - 2(A - A*) A'' / A'^2] xi dphi
                      + 2 (A(r0) - A*) s0 / A'(r0)

    whose integrand is bounded on the whole interval.
    """
    r0 = _check_r0(r0)
    orbit = _Orbit(r0)
    rp = orbit.rp
    s0 = boundary_slope(r0)
    e0 = level_energy(r0)

    def integrand(phi):
        xi = math.sqrt(max(orbit.xi_sq(phi), 0.0))
        return (3.0 - _guarded_quotient(phi)) * xi

    total = _integrate(integrand, r0, rp, _breakpoints(r0, rp), log_below=1.0) + _boundary_term(r0, s0)
    return total / (e0 + A_STAR)


def _singular_integral(kernel, orbit: _Orbit) -> float:
    """``int_{r0}^{r+} kernel(phi) dphi / xi``.

    The upper half of the interval is mapped by ``phi = r+ - u^2`` so the
    inverse-square-root singularity at the turning point becomes a smooth
    integrand; the lower half, where xi stays away from zero, is integrated in phi.
    """
    r0, rp = orbit.r0, orbit.rp
    split = max(r0, 0.5 * (max(r0, R_STAR) + rp))
    slope = math.sqrt(-float(dA(rp)))

    def in_u(u):
        if u == 0.0:
            return 2.0 * kernel(rp) / slope
        v = u * u
        return 2.0 * u * kernel(rp - v) / math.sqrt(orbit.xi_sq_depth(v))

    def in_phi(phi):
        return kernel(phi) / math.sqrt(orbit.xi_sq(phi))

    upper = _integrate(in_u, 0.0, math.sqrt(rp - split), [math.sqrt(rp - p) for p in _breakpoints(split, rp)])
    lower = _integrate(in_phi, r0, split, _breakpoints(r0, split), log_below=1.0) if split > r0 else 0.0
    return upper + lower


def period_direct(r0: float) -> float:
    """``T(r0) = int_{r0}^{r+} dphi / xi`` with ``phi = r+ - u^2`` removing the endpoint singularity.

    Independent of the regularised path in :func:`period`; kept as a cross-check.
    """
    r0 = _check_r0(r0)
    return _singular_integral(lambda phi: 1.0, _Orbit(r0))


def period_derivative(r0: float) -> float:
    """``T'(r0)`` from the differentiated regularised identity.

        [E0 + A*] T' = -A* / (4 s0)
                       - (3 A'(r0) / 8) int_{r0}^{r+} f(phi) / (phi^2 (1 - log phi^2)^2 xi) dphi

    with ``f(phi) = phi^2 (3 - log phi^2) - e (1 + log phi^2)``.
    """
    r0 = _check_r0(r0)
    s0 = boundary_slope(r0)
    e0 = level_energy(r0)
    integral = _singular_integral(_derivative_kernel, _Orbit(r0))
    rhs = -A_STAR / (4.0 * s0) - 0.375 * float(dA(r0)) * integral
    return rhs / (e0 + A_STAR)


def solve_match(target_half_length: float, tol: float = 1e-10) -> float:
    """Unique r0 in (0, e) with ``T(r0) = target_half_length``.

    T decreases from +inf to 0 on (0, e); bisection runs in log r0 so that long
    rings (r0 exponentially small) are bracketed as easily as short ones.
    """
    target = float(target_half_length)
    if not target > 0:
        raise DomainError(f"target half-length must be positive, got {target!r}")
    k = 1
    while period(E - 10.0 ** (-k)) >= target:
        k += 1
        if k > 14:
            raise DomainError(f"target {target} too small to bracket")
    hi = math.log(E - 10.0 ** (-k))
    lo = 0.0
    while period(math.exp(lo)) <= target:
        lo = 2.0 * lo - 1.0
        if lo < -700:
            raise DomainError(f"target {target} too large to bracket")
    r0 = math.exp(bisect(lambda s: period(math.exp(s)) - target, lo, hi))
    residual = period(r0) - target
    if abs(residual) > tol:
        raise ArithmeticError(f"match residual {residual:.3e} exceeds {tol:g}")
    return r0


def shift_from_r0(r0: float) -> float:
    """Tail shift ``a`` with ``e exp(-a^2/2) = r0``."""
    r0 = _check_r0(r0)
    return math.sqrt(2.0 * (1.0 - math.log(r0)))


def r0_from_shift(a: float) -> float:
    return E * math.exp(-0.5 * a * a)


@dataclass(frozen=True)
class LevelCurve:
    r0: float
    s0: float
    E0: float
    r_plus: float

    @classmethod
    def from_r0(cls, r0: float) -> "LevelCurve":
        s0 = boundary_slope(r0)
        # E0 taken from the invariant itself so that E0 = s0^2 - A(r0) holds bitwise
        return cls(r0=r0, s0=s0, E0=eval_energy(r0, s0), r_plus=turning_point(r0))


def period_scan(r_from: float, r_to: float, points: int) -> list[tuple[float, float, float, float, float]]:
    """Rows ``(r0, T, T', r_plus, E0)`` on a uniform grid."""
    rows = []
    for r0 in np.linspace(r_from, r_to, points):
        r0 = float(r0)
        rows.append((r0, period(r0), period_derivative(r0), turning_point(r0), level_energy(r0)))
    return rows
