import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from breather_lab.fermi import (SQRT3, FermiConfigError, golden_rule_integrals, golden_rule_report,
                                limiting_functional, localization_mass, potentials_table, resonance_defect,
                                resonance_wavenumber, second_harmonic_gap, write_potentials_csv)
from breather_lab.grid import Grid
from breather_lab.model import BreatherParams, Q_profile, breather_trajectory, make_model
from breather_lab.modes import ModeStack, analyze, measured_alpha
from breather_lab.solver import BreatherSolution

G40 = Grid(40.0, 4001)


def exact_solution(eps, h=0.1):
    g = Grid.for_amplitude(eps, h=h)
    p = BreatherParams.from_eps(eps)
    st_ = analyze(breather_trajectory(p, g, 64))
    return BreatherSolution(stack=st_, omega=p.omega, model_name="sine_gordon", residual_norm=0.0,
                            newton_iterations=0, converged=True, eps=eps, alpha=measured_alpha(st_))


def test_gaussian_cos_integral():
    gi = golden_rule_integrals(make_model("gaussian"), G40)
    oracle = 2 * quad(lambda x: math.cos(SQRT3 * x) * math.exp(-x * x), 0, 40, limit=200)[0]
    assert gi.cos_integral == pytest.approx(oracle, rel=1e-10)
    assert gi.cos_integral == pytest.approx(math.sqrt(math.pi) * math.exp(-0.75), rel=1e-10)
    assert abs(gi.sin_integral) < 1e-14


def test_odd_potential_has_sine_part():
    gi = golden_rule_integrals(make_model("odd_sech_tanh"), G40)
    assert abs(gi.cos_integral) < 1e-12 and abs(gi.sin_integral) > 0.1


def test_zero_potential():
    gi = golden_rule_integrals(make_model("sine_gordon"), G40)
    assert gi.cos_integral == 0.0 and gi.sin_integral == 0.0


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_integrals_linear_in_potential(c1, c2):
    m1 = make_model("gaussian", amplitude=c1)
    m2 = make_model("gaussian", amplitude=c2)
    m12 = make_model("gaussian", amplitude=c1 + c2)
    g = Grid(20.0, 401)
    s = golden_rule_integrals(m1, g).cos_integral + golden_rule_integrals(m2, g).cos_integral
    assert golden_rule_integrals(m12, g).cos_integral == pytest.approx(s, abs=1e-12)


def test_resonance_wavenumber():
    assert resonance_wavenumber(1.0, 2) == pytest.approx(SQRT3)
    with pytest.raises(FermiConfigError):
        resonance_wavenumber(0.9, 1)


def test_resonance_defect_sine_gordon_vanishes():
    rd = resonance_defect(exact_solution(0.2), make_model("sine_gordon"))
    assert rd.defect_f < 1e-12 and rd.defect_g < 1e-12
    assert rd.kappa == pytest.approx(math.sqrt(4 * 0.96 - 1))


def test_resonance_defect_zero_stack():
    rd = resonance_defect(ModeStack.zeros(G40, 0.9), make_model("gaussian"))
    assert rd.defect_f == rd.defect_g == 0.0


def test_even_data_gives_no_quadrature_component():
    # b = 0 throughout keeps G identically zero at 2 n*
    st_ = ModeStack.zeros(G40, 0.98)
    st_.a[1] = 0.2 * Q_profile(0.2 * G40.x)
    rd = resonance_defect(st_, make_model("gaussian"))
    assert rd.defect_g < 1e-15 and rd.defect_f > 0.1


def test_second_harmonic_gap():
    st_ = ModeStack.zeros(G40, 0.98)
    st_.a[1] = 0.2 * Q_profile(0.2 * G40.x)
    st_.b[1] = 0.1 * Q_profile(0.2 * G40.x)
    gap = second_harmonic_gap(st_, make_model("gaussian"), alpha=1.0)
    assert gap.quadratic_gap < 1e-12
    # only quartic and higher terms remain, so the gap is far below the quadratic forcing
    assert 0 < gap.gap_physical < 1e-2
    assert gap.gap_rescaled == gap.gap_physical
    assert second_harmonic_gap(ModeStack.zeros(G40, 0.9), make_model("gaussian")).gap_physical == 0.0


def test_sine_gordon_gap_zero():
    gap = second_harmonic_gap(exact_solution(0.2), make_model("sine_gordon"))
    assert gap.gap_physical < 1e-12


def test_localization_mass_matches_quadrature():
    eps = 0.1
    sol = exact_solution(eps)
    m = localization_mass(sol, 5.0)
    p = BreatherParams.from_eps(eps)
    B0 = lambda x: 4 * math.atan((eps / p.omega) / math.cosh(eps * x))
    oracle = 2 * quad(lambda x: B0(x) ** 2, 0, 5 / eps, limit=200)[0] / eps
    assert m == pytest.approx(oracle, rel=1e-4)
    assert m == pytest.approx(32 * math.tanh(5), rel=0.02)


def test_localization_mass_shifted_profile_small():
    g = Grid(400.0, 8001)
    st_ = ModeStack.zeros(g, math.sqrt(1 - 0.1 ** 2))
    st_.a[1] = 0.1 * Q_profile(0.1 * (g.x - 350))
    assert localization_mass(st_, 0.5) <= 1e-20


def test_localization_mass_edge_cases():
    assert localization_mass(ModeStack.zeros(G40, 0.99), 1.0) == 0.0
    with pytest.raises(FermiConfigError):
        localization_mass(ModeStack.zeros(G40, 0.99), 100.0)


def test_limiting_functional():
    c, s = limiting_functional(1.0, 0.25, 0.0, 0.0)
    assert c == pytest.approx(0.25 * 16) and s == pytest.approx(0.0, abs=1e-15)
    c, s = limiting_functional(2.0, 1.0, 0.0, math.pi / 4)
    assert c == pytest.approx(0.0, abs=1e-12) and s == pytest.approx(32.0)
    assert limiting_functional(0.0, 1.0, 3.0, 1.0) == (0.0, 0.0)


def test_report_and_table(tmp_path):
    sol = exact_solution(0.2)
    rep = golden_rule_report(sol, make_model("sine_gordon"))
    d = rep.to_dict()
    assert d["cos_integral"] == 0.0 and d["kappa"] > 0
    rows = potentials_table([make_model("gaussian"), make_model("sine_gordon")], G40)
    path = write_potentials_csv(rows, tmp_path / "p.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "name,cos_integral,sin_integral,decay_warning" and len(lines) == 3
