import math

import numpy as np
import pytest

from breather_lab.acceptance import jacobian_fd_errors
from breather_lab.evolve import EvolveConfig, period_residual
from breather_lab.grid import Grid, integrate
from breather_lab.model import BreatherParams, breather_trajectory, make_model
from breather_lab.modes import ModeStack, analyze, mode_residual, mode_residuals, synthesize, synthesize_trajectory
from breather_lab.solver import (DomainTooSmallError, GaugeError, NewtonConfig, continue_family,
                                 load_solution, newton_solve, save_solution, seed)


@pytest.fixture(scope="module")
def sol02():
    p = BreatherParams.from_eps(0.2)
    g = Grid.for_amplitude(0.2)
    return p, newton_solve(seed(p, g), make_model("sine_gordon"), NewtonConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        NewtonConfig(tol=0)
    with pytest.raises(ValueError):
        NewtonConfig(damping=1.5)
    with pytest.raises(ValueError):
        NewtonConfig(gauge=("nonsense",))
    c = NewtonConfig(gauge=("centroid", "zero_b_fundamental"))
    assert NewtonConfig.from_dict(c.to_dict()) == c


def test_seed(sg):
    p = BreatherParams.from_eps(0.2)
    st_ = seed(p, Grid.for_amplitude(0.2))
    assert st_.a[1][st_.grid.center] == pytest.approx(0.8)
    assert not np.any(st_.b)
    assert st_.omega == pytest.approx(math.sqrt(0.96))
    with pytest.raises(DomainTooSmallError):
        seed(p, Grid(50.0, 501))


def test_seed_residual_scaling(sg):
    r = []
    for eps in (0.1, 0.05):
        st_ = seed(BreatherParams.from_eps(eps), Grid.for_amplitude(eps, h=0.1))
        r.append(mode_residual(st_, sg, 1))
    assert r[0] <= 1e-3
    assert r[0] / r[1] >= 8      # at least cubic decay under halving


def test_solution_matches_exact_breather(sol02):
    p, sol = sol02
    assert sol.converged
    assert sol.residual_norm == max(sol.diagnostics["mode_residuals"]) <= 1e-8
    g = sol.grid
    tr = synthesize_trajectory(sol.stack, 64)
    ex = breather_trajectory(p, g, 64)
    assert np.max(np.sqrt(integrate(g, (tr.phi - ex.phi) ** 2))) <= 1e-5


def test_solution_revalidated_by_evolution(sol02):
    p, sol = sol02
    gap = period_residual(synthesize(sol.stack, 0.0), make_model("sine_gordon"), p.period,
                          EvolveConfig.for_period(p.period, 4096))
    assert gap.phi_gap <= 1e-5 and gap.phit_gap <= 1e-5


def test_gauge_and_evenness_preserved(sol02):
    _, sol = sol02
    assert np.all(sol.stack.b[1] == 0.0)
    np.testing.assert_allclose(sol.stack.a, sol.stack.a[:, ::-1], atol=1e-14)


def test_zero_seed_converges_in_one_step(sg):
    sol = newton_solve(ModeStack.zeros(Grid(30.0, 301), 0.9), sg)
    assert sol.converged and sol.newton_iterations == 1 and sol.residual_norm == 0.0


def test_larger_amplitude(sg):
    p = BreatherParams.from_eps(0.4)
    g = Grid.for_amplitude(0.4)
    sol = newton_solve(seed(p, g), sg)
    assert sol.converged and sol.residual_norm <= 1e-9
    # oracle: time-Fourier transform of the closed form on many samples
    ex = analyze(breather_trajectory(p, g, 256))
    assert np.abs(sol.stack.a[1]).max() == pytest.approx(np.abs(ex.a[1]).max(), rel=0.03)


def test_even_gauge_needs_even_potential():
    p = BreatherParams.from_eps(0.2)
    with pytest.raises(GaugeError):
        newton_solve(seed(p, Grid(150.0, 1501)), make_model("odd_sech_tanh"), NewtonConfig())


def test_centroid_gauge_on_odd_potential():
    p = BreatherParams.from_eps(0.2)
    cfg = NewtonConfig(gauge=("centroid", "zero_b_fundamental"))
    sol = newton_solve(seed(p, Grid(150.0, 1501)), make_model("odd_sech_tanh", amplitude=0.3), cfg)
    assert sol.converged
    g = sol.grid
    centroid = integrate(g, g.x * (sol.stack.a[1] ** 2 + sol.stack.b[1] ** 2))
    assert abs(centroid) < 1e-8


def test_non_convergence_is_data(sg):
    p = BreatherParams.from_eps(0.2)
    sol = newton_solve(seed(p, Grid(150.0, 1501)), sg, NewtonConfig(max_iter=1))
    assert not sol.converged
    assert len(sol.residual_history) == 2
    assert "no convergence" in sol.message


def test_jacobian_matches_finite_differences():
    g = Grid(110.0, 1101)
    st_ = seed(BreatherParams.from_eps(0.3), g)
    st_.a[2] = 0.05 * st_.a[1]
    st_.b[3] = 0.02 * st_.a[1] ** 2
    for m in (make_model("sine_gordon"), make_model("gaussian", amplitude=0.7)):
        assert max(jacobian_fd_errors(st_, m, n_dirs=10, rng_seed=5)) <= 1e-6
    sponge = NewtonConfig(boundary="sponge", sponge_strength=0.8)
    assert max(jacobian_fd_errors(st_, make_model("sine_gordon"), sponge, n_dirs=3)) <= 1e-6


def test_family_and_persistence(tmp_path, sg):
    fam = continue_family(sg, [0.3, 0.2, 0.1], n_max=8)
    assert [s.converged for s in fam] == [True] * 3
    for s in fam:
        assert s.diagnostics["h3_ok"]
        assert s.diagnostics["period"] == pytest.approx(2 * math.pi / s.omega)
    assert fam[-1].alpha == pytest.approx(32 * 0.1, rel=0.1)
    d = save_solution(fam[1], tmp_path / "s")
    back = load_solution(d)
    np.testing.assert_array_equal(back.stack.a, fam[1].stack.a)
    np.testing.assert_array_equal(back.stack.b, fam[1].stack.b)
    assert back.alpha == fam[1].alpha and back.converged


def test_family_edge_cases(sg):
    assert continue_family(sg, []) == []
    with pytest.raises(ValueError):
        continue_family(sg, [0.1, 0.2])


def test_gaussian_family_recorded_as_data():
    fam = continue_family(make_model("gaussian"), [0.2, 0.14], NewtonConfig(max_iter=15))
    assert len(fam) == 2
    for s in fam:
        assert s.converged in (True, False)
        assert np.isfinite(s.residual_norm) or s.message
