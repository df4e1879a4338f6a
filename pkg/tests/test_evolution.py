import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlslog import acceptance
from nlslog import evolution as ev
from nlslog import profile as pr
from nlslog.errors import DomainError, StepError
from nlslog.graph import GraphFunction, VertexCondition, inner_product, vertex_residuals, NEUMANN_KIRCHHOFF

# sup_t d(t) / eta measured at 5.545 on the first verified run (eta = 1e-2, c = 0, seed 0)
K_REGRESSION = 5.545 * 1.02


def test_f_trunc_examples():
    for n in (1, 5, 50):
        assert ev.f_trunc(1.0, n) == 0.0
        assert ev.f_trunc(math.exp(2 * n + 1), n) == n
        assert ev.f_trunc(0.0, n) == -n
    s = np.exp(np.linspace(-3, 3, 13))
    np.testing.assert_array_equal(ev.f_trunc(s, 3), np.log(s))
    with pytest.raises(DomainError):
        ev.f_trunc(-1e-3, 3)


def test_nonlinearity_vanishes_at_zero():
    assert ev.nonlinearity(np.zeros(3, dtype=complex), 50).tolist() == [0, 0, 0]


def test_truncated_integrand_is_primitive():
    n = 2
    s = np.linspace(1e-4, 20.0, 4001)
    G = ev.truncated_integrand(s, n)
    dG = np.gradient(G, s)
    inner = (s > 0.2) & (s < 7.0)
    np.testing.assert_allclose(dG[inner], ev.f_trunc(s[inner], n) + 1, atol=1e-3)


def test_config_validation():
    with pytest.raises(ValueError):
        ev.EvolutionConfig(dt=0.0)
    with pytest.raises(ValueError):
        ev.EvolutionConfig(n_trunc=0)


def test_zero_is_fixed(wave_coarse):
    d = wave_coarse.domain
    out = ev.step(GraphFunction.zeros(d, complex), ev.EvolutionConfig(dt=1e-2), NEUMANN_KIRCHHOFF, d)
    assert not np.any(out.ring) and not np.any(out.tail)


def test_delta_vertex_rejected(wave_coarse):
    d = wave_coarse.domain
    with pytest.raises(ValueError):
        ev.step(wave_coarse.function(), ev.EvolutionConfig(), VertexCondition.delta(1.0), d)


def test_single_step_mass_drift(wave_coarse):
    d = wave_coarse.domain
    cfg = ev.EvolutionConfig(dt=1e-3)
    u0 = ev.modulated_wave(wave_coarse, 0.1, 0)
    u1 = ev.step(u0, cfg, NEUMANN_KIRCHHOFF, d)
    cn = ev._stepper(d, cfg, NEUMANN_KIRCHHOFF)
    m0, m1 = cn.mass(d.to_nodes(u0)), cn.mass(d.to_nodes(u1))
    assert abs(m1 - m0) / m0 <= 1e-11


def test_step_keeps_vertex_continuity(wave_coarse):
    d = wave_coarse.domain
    u1 = ev.step(wave_coarse.function(), ev.EvolutionConfig(dt=1e-3), NEUMANN_KIRCHHOFF, d)
    r = vertex_residuals(u1, NEUMANN_KIRCHHOFF, d)
    assert r.continuity_ring == 0 and r.continuity_vertex == 0


def test_fixed_point_failure_is_reported(wave_coarse):
    d = wave_coarse.domain
    cfg = ev.EvolutionConfig(dt=5.0, t_end=10.0, fp_max_iter=5)
    with pytest.raises(StepError) as info:
        ev.step(wave_coarse.function(), cfg, NEUMANN_KIRCHHOFF, d)
    assert info.value.diagnostics["fp_tol"] == cfg.fp_tol
    rec = ev.run(wave_coarse.function(), cfg, d)
    assert rec.error.startswith("step 1") and len(rec.times) == 1


def test_short_standing_wave_propagation(wave_coarse):
    d = wave_coarse.domain
    c = 1.0
    wave = wave_coarse.with_c(c)
    cfg = ev.EvolutionConfig(dt=1e-3, t_end=0.5, record_every=50)
    rec = ev.run(wave.function(), cfg, d, ref=wave)
    assert ev.phase_corrected_error(rec.final, wave, 0.5, d) < 1e-4
    assert max(rec.orbital_distance_series) < 1e-4
    assert len(rec.times) == len(rec.mass_series) == len(rec.energy_series) == len(rec.orbital_distance_series)
    assert rec.clamp_checks and all(same for _, _, same in rec.clamp_checks)


def test_orbital_distance_on_orbit(wave_coarse):
    d = wave_coarse.domain
    for theta0 in (0.0, 0.7, -2.9):
        u = wave_coarse.function().scale(np.exp(1j * theta0))
        assert ev.orbital_distance(u, wave_coarse, d) < 1e-12 * ev.wtilde_norm(u, d)


def _scan(u, ref, d, n=10_000):
    """Dense theta scan of ||u - e^{i theta} ref||^2 through the expanded quadratic."""
    uu = ev.wtilde_inner(u, u, d).real
    rr = ev.wtilde_inner(ref, ref, d).real
    ur = ev.wtilde_inner(u, ref, d)
    theta = np.linspace(0, 2 * np.pi, n, endpoint=False)
    vals = uu + rr - 2 * np.real(np.exp(-1j * theta) * ur)
    j = int(np.argmin(vals))
    return theta[j], vals[j], abs(ur)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_orbital_distance_against_dense_scan(wave_coarse, seed):
    d = wave_coarse.domain
    theta = wave_coarse.function()
    u = (theta + ev.perturbation(wave_coarse, seed).scale(0.3)).scale(np.exp(0.4j + seed))
    n = 10_000
    dist = ev.orbital_distance(u, wave_coarse, d)
    t_scan, d2_scan, overlap = _scan(u, theta, d, n)
    # the scan minimum exceeds the true one by at most 2|<u,Theta>|(1 - cos(pi/n))
    assert 0 <= d2_scan - dist**2 <= 2 * overlap * (1 - math.cos(math.pi / n)) + 1e-12
    t_star = ev.optimal_phase(u, wave_coarse, d)
    assert abs(np.angle(np.exp(1j * (t_star - t_scan)))) <= 2 * math.pi / n
    # theta* maximises Re e^{-i theta}<u, Theta> over the whole scan
    grid = np.linspace(0, 2 * np.pi, n, endpoint=False)
    ur = ev.wtilde_inner(u, theta, d)
    assert np.real(np.exp(-1j * t_star) * ur) >= np.max(np.real(np.exp(-1j * grid) * ur))


@pytest.mark.parametrize("eps", [1e-3, 1e-2, 1e-1])
def test_orbital_distance_of_imaginary_perturbation(wave_coarse, eps):
    # Theta + i eps Theta = sqrt(1 + eps^2) e^{i atan eps} Theta lies on the ray of the orbit:
    # its unaligned distance is eps ||Theta||, the aligned one (sqrt(1 + eps^2) - 1) ||Theta||
    d = wave_coarse.domain
    theta = wave_coarse.function()
    u = theta + theta.scale(1j * eps)
    norm = ev.wtilde_norm(theta, d)
    assert ev.wtilde_norm(u - theta, d) == pytest.approx(eps * norm, rel=1e-12)
    assert ev.orbital_distance(u, wave_coarse, d) == pytest.approx((math.hypot(1, eps) - 1) * norm, rel=1e-6)
    assert ev.optimal_phase(u, wave_coarse, d) == pytest.approx(math.atan(eps), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(-math.pi, math.pi), st.integers(0, 1000))
def test_orbital_distance_phase_invariant(wave_coarse, phase, seed):
    d = wave_coarse.domain
    u = wave_coarse.function() + ev.perturbation(wave_coarse, seed).scale(0.05)
    a = ev.orbital_distance(u, wave_coarse, d)
    b = ev.orbital_distance(u.scale(np.exp(1j * phase)), wave_coarse, d)
    assert abs(a - b) <= 1e-12 * max(1.0, a)


def test_perturbation_is_reproducible_and_normalised(wave_coarse):
    d = wave_coarse.domain
    p, q = ev.perturbation(wave_coarse, 7), ev.perturbation(wave_coarse, 7)
    np.testing.assert_array_equal(p.ring, q.ring)
    assert ev.wtilde_norm(p, d) == pytest.approx(1.0, rel=1e-12)
    assert not np.array_equal(p.ring, ev.perturbation(wave_coarse, 8).ring)


def test_modulated_wave_has_no_zeros(wave_coarse):
    u = ev.modulated_wave(wave_coarse, 0.1, 0)
    theta = wave_coarse.function()
    ratio = np.abs(u.ring) / theta.ring
    assert ratio.min() > 0.89 and ratio.max() < 1.11


def test_moving_gausson_on_half_line():
    # exp(i(v x/2 - v^2 t/4 + w t)) e^{(w+1)/2} e^{-(x - x0 - v t)^2/2} solves the equation on the line;
    # centred far from the Neumann end it translates undisturbed
    R, h, v, w, x0, t_end = 30.0, 1e-2, 1.0, 0.0, 10.0, 2.0
    x = np.linspace(0, R, int(round(R / h)) + 1)

    def exact(t):
        return np.exp(1j * (v * x / 2 - v * v * t / 4 + w * t)) * math.exp((w + 1) / 2) * np.exp(-0.5 * (x - x0 - v * t) ** 2)

    u = ev.half_line_run(exact(0.0), h, ev.EvolutionConfig(dt=1e-2, t_end=t_end))
    assert np.max(np.abs(u - exact(t_end))) < 5e-4


def test_stability_eta_zero(wave_coarse):
    cfg = ev.EvolutionConfig(dt=1e-3, t_end=1.0, record_every=100)
    res = ev.stability_experiment(0.0, 0.0, cfg, wave_coarse.domain)
    assert res.sup_distance <= 1e-4
    with pytest.raises(ValueError):
        ev.stability_experiment(0.0, 0.2, cfg, wave_coarse.domain)


def test_stability_regression_and_linear_response():
    small, large = acceptance.stability_run(1e-2), acceptance.stability_run(2e-2)
    assert small.K <= K_REGRESSION
    assert large.sup_distance / small.sup_distance == pytest.approx(2.0, rel=0.05)
    assert all(same for _, _, same in small.record.clamp_checks)


def test_mass_is_conserved_over_short_run(wave_coarse):
    d = wave_coarse.domain
    u0 = ev.modulated_wave(wave_coarse, 0.1, 1)
    rec = ev.run(u0, ev.EvolutionConfig(dt=1e-3, t_end=0.5, record_every=50), d)
    assert rec.relative_drift("mass_series") <= 1e-10
    assert inner_product(rec.final, rec.final, d) == pytest.approx(rec.mass_series[-1], rel=1e-12)
