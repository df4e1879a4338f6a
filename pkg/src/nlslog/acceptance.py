"""Acceptance suite: one function per criterion, each returning its checks.

Every check records the measured value, the tolerance it is compared with and
the verdict.  Expensive intermediate results (evolution runs) are cached so the
suite can be run from the CLI and from pytest without repeating work.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import evolution as ev
from . import oracles
from . import phase_plane as pp
from . import profile as pr
from . import spectral as spc
from .graph import GraphDomain, VertexCondition

H = 1e-3
L_DEFAULT = math.pi
C_SWEEP = (-2.0, -1.0, 0.0, 1.0, 2.0)
L_SWEEP = (math.pi / 2, math.pi, 2 * math.pi)
RATE_BAND = 0.10  # refinement ratio 4 +- 10 % for grid studies
DT_RATE_BAND = 0.15  # and +- 15 % for time-step studies
STABILITY_K = 5.0
SEED = 0


@dataclass
class Check:
    name: str
    value: object
    tolerance: object
    passed: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "tolerance": self.tolerance, "passed": self.passed}


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def line(self) -> str:
        failed = [c.name for c in self.checks if not c.passed]
        tail = "" if not failed else "  failed: " + ", ".join(failed)
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.title} ({len(self.checks)} checks, {self.seconds:.1f}s){tail}"

    def as_dict(self) -> dict:
        return {
            "number": self.number,
            "title": self.title,
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
        }


def _le(name, value, tol) -> Check:
    return Check(name, float(value), float(tol), bool(value <= tol))


def _ratio_check(name, coarse, fine, band) -> Check:
    ratio = coarse / fine if fine else float("inf")
    return Check(name, float(ratio), [4.0 * (1 - band), 4.0 * (1 + band)],
                 bool(4.0 * (1 - band) <= ratio <= 4.0 * (1 + band)))


# -- phase plane ------------------------------------------------------------

def period_monotonicity() -> list:
    start = time.perf_counter()
    grid = np.linspace(0.05, math.e - 0.01, 200)
    T = np.array([pp.period(r) for r in grid])
    Tp = np.array([pp.period_derivative(r) for r in grid])
    step = 1e-5
    fd = np.array([(pp.period(r + step) - pp.period(r - step)) / (2 * step) for r in grid])
    elapsed = time.perf_counter() - start
    return [
        Check("T_strictly_decreasing(max dT)", float(np.max(np.diff(T))), 0.0, bool(np.all(np.diff(T) < 0))),
        Check("Tprime_negative(max T')", float(np.max(Tp)), 0.0, bool(np.all(Tp < 0))),
        _le("Tprime_vs_fd_rel_error", np.max(np.abs(Tp - fd) / np.abs(fd)), 1e-4),
        _le("runtime_seconds", elapsed, 10.0),
    ]


def period_limits() -> list:
    top = [pp.period(math.e - 10.0**-k) for k in range(1, 7)]
    bottom = [pp.period(10.0**-k) for k in range(1, 5)]
    shifts = [pp.shift_from_r0(10.0**-k) for k in range(1, 5)]
    decay = top[-2] / top[-1]
    return [
        Check("T(e-10^-k)_decreasing", top, "strict", bool(np.all(np.diff(top) < 0))),
        _le("T(e-10^-6)", top[-1], 1e-3),
        Check("sqrt_delta_decay_ratio(k=5->6)", decay, [math.sqrt(10) * 0.99, math.sqrt(10) * 1.01],
              bool(abs(decay / math.sqrt(10) - 1) <= 0.01)),
        Check("T(10^-k)_increasing", bottom, "strict", bool(np.all(np.diff(bottom) > 0))),
        Check("T(10^-k)_above_divergent_shift_a(r0)", [t - a for t, a in zip(bottom, shifts)], 0.0,
              bool(all(t > a for t, a in zip(bottom, shifts)))),
    ]


def matching() -> list:
    r0 = pp.solve_match(math.pi)
    grid = np.geomspace(1e-9, math.e - 1e-6, 60)
    sign_changes = int(np.sum(np.diff(np.sign([pp.period(r) - math.pi for r in grid])) != 0))
    return [
        _le("|T(r0)-pi|", abs(pp.period(r0) - math.pi), 1e-10),
        Check("sign_changes_of_T-pi", sign_changes, 1, sign_changes == 1),
        _le("|shooting_half_period(r0)-pi|", abs(oracles.shooting_half_period(r0) - math.pi), 1e-6),
    ]


# -- standing wave ----------------------------------------------------------

def standing_wave_residual() -> list:
    residuals, hs = [], []
    for h in (4e-3, 2e-3, 1e-3):
        d = pr.standing_wave_domain(L_DEFAULT, h)
        w = pr.assemble_standing_wave(0.0, L_DEFAULT, d)
        residuals.append(pr.stationary_residual(w)["max"])
        hs.append(d.h)
    consts = [r / h**2 for r, h in zip(residuals, hs)]
    return [
        Check("max_residual_per_h", residuals, "C h^2", True),
        _le("C = residual/h^2 at h=1e-3", consts[-1], 1.0),
        _ratio_check("ratio h=4e-3/2e-3", residuals[0], residuals[1], RATE_BAND),
        _ratio_check("ratio h=2e-3/1e-3", residuals[1], residuals[2], RATE_BAND),
    ]


# -- spectra ----------------------------------------------------------------

LAPLACIAN_R = 40.0


def laplacian_spectrum() -> list:
    checks = []
    for Z, L in ((1.0, 1.0), (3.0, 1.0), (1.0, 2.0)):
        rho = spc.transcendental_rho(Z, L)
        errs = []
        for h in (2e-3, 1e-3):
            d = GraphDomain.from_spacing(L, LAPLACIAN_R, h)
            lam = spc.eigen_lowest(spc.assemble("laplacian", VertexCondition.delta(Z), None, d), 2).eigenvalues[0]
            errs.append(abs(lam + rho**2) / rho**2)
        checks.append(_le(f"rel_error(Z={Z:g},L={L:g})", errs[-1], 1e-3))
        checks.append(_ratio_check(f"ratio(Z={Z:g},L={L:g})", errs[0], errs[1], RATE_BAND))
    d = GraphDomain.from_spacing(1.0, LAPLACIAN_R, H)
    rep = spc.eigen_lowest(spc.assemble("laplacian", VertexCondition(), None, d), 2)
    checks.append(Check("Z=0 lowest eigenvalue >= -tol_null", float(rep.eigenvalues[0]), -rep.tol_null,
                        bool(rep.eigenvalues[0] >= -rep.tol_null)))
    return checks


@lru_cache(maxsize=None)
def _wave(c: float, L: float, h: float = H) -> pr.StandingWave:
    return pr.assemble_standing_wave(c, L, pr.standing_wave_domain(L, h))


def _Lname(L: float) -> str:
    return {math.pi / 2: "pi/2", math.pi: "pi", 2 * math.pi: "2pi"}.get(L, f"{L:g}")


def l1_theorem() -> list:
    checks = []
    for L in L_SWEEP:
        for c in C_SWEEP:
            rep = spc.analyze_L1(_wave(c, L))
            dg = rep.diagnostics
            tag = f"c={c:g},L={_Lname(L)}"
            checks.append(Check(f"morse_index({tag})", rep.morse_index, 1, rep.morse_index == 1))
            checks.append(Check(f"nullity({tag}) [lambda_1={dg['gap']:.3e}, tol_null={rep.tol_null:.3e}]",
                                rep.nullity, 0, rep.nullity == 0))
            checks.append(Check(f"ground_sign_definite({tag})", dg["ground_sign_definite"], True,
                                bool(dg["ground_sign_definite"])))
            checks.append(_le(f"ground_ring_evenness({tag})", dg["ground_ring_evenness"], 1e-6))
    return checks


def l2_theorem() -> list:
    checks = []
    for L in L_SWEEP:
        for c in C_SWEEP:
            rep = spc.analyze_L2(_wave(c, L))
            dg = rep.diagnostics
            tag = f"c={c:g},L={_Lname(L)}"
            checks.append(_le(f"|lambda_min|({tag})", abs(dg["lambda_min"]), rep.tol_null))
            checks.append(Check(f"kernel_cosine({tag})", dg["kernel_cosine"], 1 - 1e-6,
                                bool(dg["kernel_cosine"] >= 1 - 1e-6)))
            checks.append(Check(f"second_eigenvalue({tag})", dg["second_eigenvalue"], rep.tol_null,
                                bool(dg["second_positive"])))
            checks.append(Check(f"no_negative({tag})", float(rep.eigenvalues[0]), -rep.tol_null,
                                bool(dg["no_negative"])))
    return checks


def rayleigh_identity() -> list:
    rep = spc.analyze_L1(_wave(0.0, L_DEFAULT))
    q = rep.diagnostics["rayleigh_quotient"]
    return [
        _le("|<L1 Theta,Theta>/|Theta|^2 + 2|", abs(q + 2.0), 1e-4),
        Check("lambda0 <= Rayleigh quotient", float(rep.eigenvalues[0]), q, bool(rep.eigenvalues[0] <= q)),
    ]


def splitting() -> list:
    rep = spc.split_compare(_wave(0.0, L_DEFAULT))
    ground = rep["pairs"][0]
    return [
        _le("ground: distance to periodic-ring spectrum", ground["distance_ring"], rep["tolerance"]),
        _le("ground: distance to Neumann-tail spectrum", ground["distance_tail"], rep["tolerance"]),
        Check("ground has g(L) != 0", ground["vertex_trace"], "> 1e-6 |g|", not ground["exempt"]),
    ]


def oscillator() -> list:
    exact = np.array([-2.0, 2.0, 6.0])
    errs = []
    for h in (2e-3, 1e-3):
        lam = spc.eigen_lowest(spc.oscillator_operator(12.0, h), 3).eigenvalues
        errs.append(np.abs(lam - exact))
    checks = []
    for j, e in enumerate(exact):
        checks.append(_le(f"|lambda_{j} - ({e:g})| at h=1e-3", errs[1][j], 10.0 * H**2))
        checks.append(_ratio_check(f"ratio lambda_{j}", errs[0][j], errs[1][j], RATE_BAND))
    return checks


# -- evolution ---------------------------------------------------------------

CONSERVATION_C = 1.0
# Modulation depth of the zero-free datum.  At 0.1 the dt^2 energy error (~4e-10)
# sits on the accumulated round-off floor (~2e-10) and the refinement ratio
# measures round-off; at 0.5 it is ~6e-8, still far inside the 1e-6 bound.
CONSERVATION_ETA = 0.5


@lru_cache(maxsize=None)
def conservation_run(dt: float) -> ev.TrajectoryRecord:
    wave = _wave(CONSERVATION_C, L_DEFAULT)
    u0 = ev.modulated_wave(wave, CONSERVATION_ETA, SEED)
    cfg = ev.EvolutionConfig(dt=dt, t_end=10.0, record_every=max(1, int(round(0.01 / dt))))
    return ev.run(u0, cfg, wave.domain)


def conservation() -> list:
    base, half = conservation_run(1e-3), conservation_run(5e-4)
    m_b, m_h = base.relative_drift("mass_series"), half.relative_drift("mass_series")
    e_b, e_h = base.relative_drift("energy_series"), half.relative_drift("energy_series")
    return [
        _le("mass_drift(dt=1e-3)", m_b, 1e-8),
        _le("energy_drift(dt=1e-3)", e_b, 1e-6),
        _ratio_check("mass_drift ratio dt=1e-3/5e-4", m_b, m_h, DT_RATE_BAND),
        _ratio_check("energy_drift ratio dt=1e-3/5e-4", e_b, e_h, DT_RATE_BAND),
    ]


@lru_cache(maxsize=None)
def propagation_run() -> ev.TrajectoryRecord:
    wave = _wave(0.0, L_DEFAULT)
    return ev.run(wave.function(), ev.EvolutionConfig(dt=1e-3, t_end=10.0, record_every=100), wave.domain)


@lru_cache(maxsize=None)
def stability_run(eta: float = 1e-2) -> ev.StabilityResult:
    wave = _wave(0.0, L_DEFAULT)
    cfg = ev.EvolutionConfig(dt=1e-3, t_end=20.0, record_every=20)
    return ev.stability_experiment(0.0, eta, cfg, wave.domain, seed=SEED)


def propagation_and_stability() -> list:
    wave = _wave(0.0, L_DEFAULT)
    err = ev.phase_corrected_error(propagation_run().final, wave, 10.0, wave.domain)
    stab = stability_run()
    return [
        _le("phase-corrected error at t=10", err, 1e-4),
        _le("sup_t d(t) / eta (eta=1e-2, t_end=20)", stab.K, STABILITY_K),
    ]


def vakhitov_kolokolov() -> list:
    d = pr.standing_wave_domain(L_DEFAULT, H)
    checks = []
    for c in (-1.0, 0.0, 2.0):
        slope = pr.vk_slope(c, d)
        mu = pr.wave_mass(c, d)
        checks.append(Check(f"dmu/dc(c={c:g}) > 0", slope, 0.0, slope > 0))
        checks.append(_le(f"|dmu/dc / mu - 1|(c={c:g})", abs(slope / mu - 1.0), 1e-6))
    return checks


CRITERIA = {
    1: ("Period-function monotonicity", period_monotonicity),
    2: ("Period limits", period_limits),
    3: ("Matching T(r0)=pi", matching),
    4: ("Standing-wave residual", standing_wave_residual),
    5: ("Laplacian spectrum", laplacian_spectrum),
    6: ("L1 spectral theorem", l1_theorem),
    7: ("L2 spectral theorem", l2_theorem),
    8: ("Rayleigh identity", rayleigh_identity),
    9: ("Splitting lemma", splitting),
    10: ("Oscillator oracle", oscillator),
    11: ("Conservation", conservation),
    12: ("Standing-wave propagation and stability", propagation_and_stability),
    13: ("Vakhitov-Kolokolov slope", vakhitov_kolokolov),
}


@lru_cache(maxsize=None)
def run_criterion(number: int) -> CriterionResult:
    title, fn = CRITERIA[number]
    start = time.perf_counter()
    checks = fn()
    return CriterionResult(number, title, checks, time.perf_counter() - start)


def run_all(numbers=None, echo=None) -> list:
    results = []
    for n in numbers or sorted(CRITERIA):
        res = run_criterion(n)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
