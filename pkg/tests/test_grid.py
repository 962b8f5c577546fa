import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from breather_lab.grid import (FieldState, Grid, GridError, InvalidStateError, Trajectory, d1, d2, d2_matrix,
                               d2_symbol, fourier_integral, integrate, norms)
from breather_lab.model import Q_profile


def test_grid_rejects_small_or_even():
    with pytest.raises(GridError):
        Grid(10.0, 15)
    with pytest.raises(GridError):
        Grid(10.0, 100)
    with pytest.raises(GridError):
        Grid(-1.0, 101)


def test_nodes_symmetric_with_origin():
    g = Grid(30.0, 2001)
    assert g.x[g.center] == 0.0
    np.testing.assert_array_equal(g.x[::-1], -g.x)
    assert np.all(np.diff(g.x) > 0)
    assert g.h == pytest.approx(0.03)


def test_for_amplitude_decay():
    g = Grid.for_amplitude(0.1)
    assert g.half_length == pytest.approx(300.0)
    assert 0.1 * Q_profile(0.1 * g.x[-1]) < 1e-10


def test_field_state_shape_check():
    g = Grid(10.0, 101)
    with pytest.raises(InvalidStateError):
        FieldState(g, np.zeros(100), np.zeros(101))
    s = FieldState(g, np.zeros(101), np.zeros(101))
    s.phi[3] = np.nan
    with pytest.raises(InvalidStateError):
        s.check_finite()


def test_trajectory_uniformity():
    g = Grid(10.0, 101)
    states = [FieldState(g, np.zeros(101), np.zeros(101), t) for t in (0.0, 1.0, 2.5)]
    with pytest.raises(GridError):
        Trajectory.from_states(states, period=2.5, closed=True)
    good = [FieldState(g, np.zeros(101), np.zeros(101), t) for t in (0.0, 1.0, 2.0)]
    tr = Trajectory.from_states(good, period=3.0, closed=False)
    np.testing.assert_allclose(tr.times, [0, 1, 2])


def test_d2_constant_interior():
    g = Grid(10.0, 101)
    f = np.ones(101)
    f[[0, -1]] = 0.0
    assert np.abs(d2(g, f)[3:-3]).max() < 1e-10


def test_d2_on_soliton_profile(grid_q):
    # fourth-order truncation at h = 0.03 leaves a few 1e-6; refinement shows the h^4 law
    errs = []
    for n in (2001, 4001):
        g = Grid(30.0, n)
        Q = Q_profile(g.x)
        errs.append(np.abs(d2(g, Q) - (Q - Q ** 3 / 8))[2:-2].max())
    assert errs[0] <= 5e-6
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.05)


def test_d2_order_on_sine():
    errs = []
    for n in (101, 201, 401):
        g = Grid(1.0, n)
        f = np.sin(np.pi * g.x)
        errs.append(np.abs(d2(g, f) + np.pi ** 2 * f).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 3.8)


def test_d2_matrix_and_symbol_agree():
    g = Grid(5.0, 41)
    f = np.sin(np.arange(41) * 0.7)
    f[[0, -1]] = 0
    np.testing.assert_allclose(d2_matrix(g) @ f[1:-1], d2(g, f)[1:-1], atol=1e-12)
    ev = np.sort(np.linalg.eigvalsh(-d2_matrix(g).toarray()))
    np.testing.assert_allclose(ev, np.sort(d2_symbol(g)), rtol=1e-10)


def test_d2_too_small():
    class Tiny:
        n_points = 5
        h = 1.0
    with pytest.raises(GridError):
        d2(Tiny(), np.zeros(5))


def test_norms_of_Q(grid_q):
    Q = Q_profile(grid_q.x)
    oracle = quad(lambda y: 16.0 / math.cosh(y) ** 2, -30, 30, limit=200)[0]
    assert oracle == pytest.approx(32.0, abs=1e-9)
    n = norms(grid_q, Q)
    assert n.L2 ** 2 == pytest.approx(32.0, abs=1e-6)
    assert n.Linf == pytest.approx(4.0, abs=1e-12)
    assert norms(grid_q, np.zeros_like(Q)) == (0.0, 0.0, 0.0)


def test_d1_fourth_order():
    errs = []
    for n in (201, 401):
        g = Grid(20.0, n)
        errs.append(np.abs(d1(g, Q_profile(g.x)) + 4 * np.tanh(g.x) / np.cosh(g.x)).max())
    assert errs[0] / errs[1] > 14


def test_fourier_integrals(grid_q):
    g = Grid(40.0, 8001)
    odd = -np.tanh(g.x) / np.cosh(g.x)
    assert abs(fourier_integral(g, odd, 1.3).cos_part) <= 1e-10
    gauss = fourier_integral(g, np.exp(-g.x ** 2), math.sqrt(3))
    assert gauss.cos_part == pytest.approx(math.sqrt(math.pi) * math.exp(-0.75), abs=1e-8)
    assert abs(gauss.sin_part) < 1e-14
    assert fourier_integral(grid_q, Q_profile(grid_q.x), 0.0).cos_part == pytest.approx(4 * math.pi, abs=1e-8)


def test_fourier_decay_warning():
    g = Grid(5.0, 101)
    assert fourier_integral(g, np.exp(-g.x ** 2 / 10), 1.0).decay_warning
    assert not fourier_integral(g, np.exp(-g.x ** 2 * 4), 1.0).decay_warning


def test_gaussian_transform_converges_fast():
    exact = math.sqrt(math.pi) * math.exp(-0.75)
    errs = [abs(fourier_integral(Grid(8.0, n), np.exp(-Grid(8.0, n).x ** 2), math.sqrt(3)).cos_part - exact)
            for n in (33, 65)]
    assert errs[1] <= errs[0] / 16 or errs[1] < 1e-14


finite = st.floats(-10, 10, allow_nan=False)


@given(st.lists(finite, min_size=33, max_size=33), st.floats(-5, 5))
def test_norm_homogeneity(vals, c):
    g = Grid(4.0, 33)
    f = np.array(vals)
    a, b = norms(g, c * f), norms(g, f)
    assert a.L2 == pytest.approx(abs(c) * b.L2, rel=1e-12, abs=1e-12)
    assert a.H1 == pytest.approx(abs(c) * b.H1, rel=1e-12, abs=1e-12)
    assert a.Linf == pytest.approx(abs(c) * b.Linf, rel=1e-12, abs=1e-12)


@given(st.lists(finite, min_size=33, max_size=33), st.lists(finite, min_size=33, max_size=33),
       st.floats(-3, 3), st.floats(-3, 3))
def test_d2_linear(f, g_, a, b):
    g = Grid(4.0, 33)
    f, g_ = np.array(f), np.array(g_)
    lhs = d2(g, a * f + b * g_)
    rhs = a * d2(g, f) + b * d2(g, g_)
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


@given(st.lists(finite, min_size=17, max_size=17), st.floats(0.1, 5))
def test_even_functions_have_no_sine_part(half, k):
    g = Grid(4.0, 33)
    f = np.concatenate([half[::-1], half[1:]])
    assert abs(fourier_integral(g, f, k).sin_part) <= 1e-12 * (1 + np.abs(f).sum())


def test_integrate_trapezoid_exact_for_linear():
    g = Grid(2.0, 21)
    assert integrate(g, 3 + g.x) == pytest.approx(12.0)
