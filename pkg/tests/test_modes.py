import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from breather_lab.grid import Grid, Trajectory, integrate
from breather_lab.model import BreatherParams, Q_profile, breather_trajectory, make_model
from breather_lab.modes import (AliasingError, AmbiguousDominanceError, ModeStack, analyze, dominant_index,
                                dominant_split, forcing, h3_ratio, measured_alpha, mode_residual,
                                mode_residuals, parseval_gap, rescaled_norms_direct, spectral_params,
                                synthesize, synthesize_trajectory)


@pytest.fixture(scope="module")
def small_grid():
    return Grid(40.0, 401)


@pytest.fixture(scope="module")
def b02():
    p = BreatherParams.from_eps(0.2)
    g = Grid.for_amplitude(0.2, h=0.1)
    return p, g, analyze(breather_trajectory(p, g, 64))


def random_stack(grid, rng, n_max=4, omega=0.9):
    st_ = ModeStack.zeros(grid, omega, n_max)
    env = np.exp(-grid.x ** 2 / 50)
    st_.a[:] = rng.normal(size=st_.a.shape) * env
    st_.b[1:] = rng.normal(size=(n_max, grid.n_points)) * env
    return st_


def test_single_cosine_analyzed(small_grid):
    g = small_grid
    w = 0.9
    prof = np.exp(-g.x ** 2)
    t = 2 * np.pi / w * np.arange(32) / 32
    tr = Trajectory(g, 2 * np.pi / w, np.cos(w * t)[:, None] * prof, -w * np.sin(w * t)[:, None] * prof)
    st_ = analyze(tr, n_max=8)
    np.testing.assert_allclose(st_.a[1], prof, atol=1e-14)
    others = np.delete(st_.a, 1, axis=0)
    assert np.abs(others).max() < 1e-14 and np.abs(st_.b).max() < 1e-14


def test_aliasing_guard(small_grid):
    tr = Trajectory(small_grid, 1.0, np.zeros((24, 401)), np.zeros((24, 401)))
    with pytest.raises(AliasingError):
        analyze(tr, n_max=4)
    tr = Trajectory(small_grid, 1.0, np.zeros((16, 401)), np.zeros((16, 401)))
    with pytest.raises(AliasingError):
        analyze(tr, n_max=8)


def test_round_trip(small_grid, rng):
    st_ = random_stack(small_grid, rng)
    back = analyze(synthesize_trajectory(st_, 64), n_max=4)
    np.testing.assert_allclose(back.a, st_.a, atol=1e-12)
    np.testing.assert_allclose(back.b, st_.b, atol=1e-12)


def test_round_trip_with_offset(small_grid, rng):
    st_ = random_stack(small_grid, rng)
    back = analyze(synthesize_trajectory(st_, 64, t0=0.7), n_max=4)
    np.testing.assert_allclose(back.a, st_.a, atol=1e-12)


def test_synthesize_zero_and_single(small_grid):
    z = ModeStack.zeros(small_grid, 0.9)
    s = synthesize(z, 1.3)
    assert not np.any(s.phi) and not np.any(s.phi_t)
    one = ModeStack.zeros(small_grid, 0.9)
    one.a[1] = np.exp(-small_grid.x ** 2)
    s = synthesize(one, 1.3)
    np.testing.assert_allclose(s.phi, math.cos(0.9 * 1.3) * one.a[1], atol=1e-15)
    np.testing.assert_allclose(s.phi_t, -0.9 * math.sin(0.9 * 1.3) * one.a[1], atol=1e-15)


def test_breather_stack(b02):
    p, g, st_ = b02
    a1 = st_.a[1]
    err = math.sqrt(integrate(g, (a1 - 0.2 * Q_profile(0.2 * g.x)) ** 2))
    assert err <= 0.02 * math.sqrt(integrate(g, a1 ** 2))
    rel = [np.abs(st_.a[n]).max() / np.abs(a1).max() for n in range(9) if n != 1]
    assert max(rel) <= 0.2 ** 2      # O(eps^2) relative size
    s = synthesize(st_, 0.9)
    from breather_lab.model import sine_gordon_breather
    assert np.abs(s.phi - sine_gordon_breather(p, 0.9, g.x)).max() < 1e-8


def test_dominant_index(b02, small_grid):
    assert dominant_index(b02[2]) == 1
    tie = ModeStack.zeros(small_grid, 0.9)
    tie.a[1] = tie.a[2] = np.exp(-small_grid.x ** 2)
    with pytest.raises(AmbiguousDominanceError):
        dominant_index(tie)


def test_single_mode_split_has_no_remainder(small_grid):
    one = ModeStack.zeros(small_grid, 0.9)
    one.a[1] = np.exp(-small_grid.x ** 2)
    one.b[1] = 0.3 * np.exp(-small_grid.x ** 2)
    d = dominant_split(one, 1.0)
    assert d.perp_L2L2 == d.perp_LinfL2 == d.perp_L4Linf == 0.0
    assert d.n_star == 1


def test_split_time_translation(b02):
    _, _, st_ = b02
    alpha = measured_alpha(st_)
    d0 = dominant_split(st_, alpha)
    for tau in (0.4, 2.2):
        d1 = dominant_split(st_.rotated(tau), alpha)
        assert d1.n_star == d0.n_star
        assert d1.perp_L2L2 == pytest.approx(d0.perp_L2L2, abs=1e-10)
        c, s = math.cos(st_.omega * tau), math.sin(st_.omega * tau)
        np.testing.assert_allclose(d1.a_star, c * d0.a_star + s * d0.b_star, atol=1e-12)


def test_split_ratio_bounded_on_exact_family():
    ratios = []
    for eps in (0.2, 0.1, 0.05):
        g = Grid.for_amplitude(eps, h=0.1)
        st_ = analyze(breather_trajectory(BreatherParams.from_eps(eps), g, 64))
        alpha = measured_alpha(st_)
        ratios.append(dominant_split(st_, alpha).perp_L2L2 / alpha)
    assert max(ratios) / min(ratios) <= 4


def test_rescaled_norms_match_direct(b02):
    _, _, st_ = b02
    alpha = measured_alpha(st_)
    tr = synthesize_trajectory(st_, 64)
    full = ModeStack(st_.grid, st_.omega, st_.a, st_.b)
    from breather_lab.modes import _mixed_norms
    direct = rescaled_norms_direct(tr, alpha)
    scaled = _mixed_norms(full.grid, tr.phi, alpha)
    np.testing.assert_allclose(direct, scaled, rtol=1e-12)


def test_parseval(small_grid, rng, b02):
    assert parseval_gap(random_stack(small_grid, rng)) < 1e-10
    assert parseval_gap(b02[2]) < 1e-10


def test_spectral_params(b02):
    sp = spectral_params(b02[2], 2.0)
    n = np.arange(9)
    np.testing.assert_allclose(sp.mu, (n * b02[2].omega) ** 2 - 1)
    np.testing.assert_allclose(sp.lam, -sp.mu / 4)
    assert sp.mu[sp.n_star] < 0


def test_mode_residual_examples(b02, sg, small_grid):
    assert mode_residual(ModeStack.zeros(small_grid, 0.9), sg, 1) == 0.0
    g = Grid(150.0, 4001)
    exact = analyze(breather_trajectory(BreatherParams.from_eps(0.2), g, 64))
    res = [mode_residual(exact, sg, n) for n in range(5)]
    assert max(res) <= 1e-6
    lead = ModeStack.zeros(g, exact.omega)
    lead.a[1] = 0.2 * Q_profile(0.2 * g.x)
    r_lead = mode_residual(lead, sg, 1)
    assert r_lead > res[1]
    assert r_lead < 0.2 ** 3
    with pytest.raises(ValueError):
        mode_residual(exact, sg, 9)


def test_cubic_single_mode_forcing(small_grid, rng):
    one = ModeStack.zeros(small_grid, 0.95, 6)
    a = rng.normal(size=401) * np.exp(-small_grid.x ** 2 / 30)
    b = rng.normal(size=401) * np.exp(-small_grid.x ** 2 / 30)
    one.a[2], one.b[2] = a, b
    f, g = forcing(one, make_model("cubic"))
    np.testing.assert_allclose(f[2], a * (a ** 2 + b ** 2) / 8, atol=1e-14)
    np.testing.assert_allclose(g[2], b * (a ** 2 + b ** 2) / 8, atol=1e-14)
    # cubic powers of one harmonic feed n* and 3 n* only
    assert np.abs(f[4]).max() < 1e-14 and np.abs(f[0]).max() < 1e-14


def test_h3_ratio_exact(b02):
    st_ = b02[2]
    r = h3_ratio(st_, measured_alpha(st_))
    assert 1e-3 < r < 0.01


@given(st.floats(0, 20), st.integers(0, 2 ** 31))
def test_rotation_consistent_with_synthesis(tau, seed):
    g = Grid(10.0, 33)
    st_ = random_stack(g, np.random.default_rng(seed), n_max=3, omega=1.3)
    a = synthesize(st_.rotated(tau), 0.4).phi
    b = synthesize(st_, 0.4 + tau).phi
    assert np.allclose(a, b, atol=1e-10)


@given(st.integers(0, 2 ** 31))
def test_mode_residuals_nonnegative(seed):
    g = Grid(10.0, 33)
    st_ = random_stack(g, np.random.default_rng(seed), n_max=3)
    r = mode_residuals(st_, make_model("sine_gordon"))
    assert np.all(r >= 0) and np.all(np.isfinite(r))
