"""Second-harmonic resonance diagnostics and the potential's Fourier data at sqrt(3)."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .grid import Grid, fourier_integral, integrate
from .model import ModelSpec, Q_profile
from .modes import AmbiguousDominanceError, ModeStack, dominant_index, forcing, synthesize_trajectory

SQRT3 = math.sqrt(3.0)


class FermiConfigError(ValueError):
    pass


class GoldenRuleIntegrals(NamedTuple):
    cos_integral: float
    sin_integral: float
    decay_warning: bool


def golden_rule_integrals(model: ModelSpec, grid: Grid, k: float = SQRT3) -> GoldenRuleIntegrals:
    """int cos(k x) U dx and int sin(k x) U dx, by default at k = sqrt 3."""
    fi = fourier_integral(grid, model.U(grid.x), k)
    return GoldenRuleIntegrals(fi.cos_part, fi.sin_part, fi.decay_warning)


def _stack(obj) -> ModeStack:
    return obj if isinstance(obj, ModeStack) else obj.stack


def _n_star(stack: ModeStack, n_star: int | None) -> int:
    if n_star is not None:
        return n_star
    try:
        return dominant_index(stack)
    except AmbiguousDominanceError:
        return 1


def resonance_wavenumber(omega: float, n: int) -> float:
    mu = (n * omega) ** 2 - 1
    if mu <= 0:
        raise FermiConfigError(f"mode {n} is not oscillatory at omega={omega}")
    return math.sqrt(mu)


class ResonanceDefect(NamedTuple):
    defect_f: float
    defect_g: float
    kappa: float


def _second_harmonic(stack, model, n_star, M):
    n2 = 2 * n_star
    if n2 > stack.n_max:
        raise FermiConfigError(f"mode budget n_max={stack.n_max} cannot hold harmonic {n2}")
    f, g = forcing(stack, model, M)
    return n2, f[n2], g[n2]


def resonance_defect(solution, model: ModelSpec, n_star: int | None = None,
                     M: int | None = None) -> ResonanceDefect:
    """|int cos(kappa x) F_2n* dx| and the G counterpart, kappa = sqrt((2 n* w)^2 - 1).

    Works in physical units; a genuine finite-energy solution makes both vanish.
    """
    st = _stack(solution)
    if not (np.any(st.a) or np.any(st.b)):
        return ResonanceDefect(0.0, 0.0, resonance_wavenumber(st.omega, 2 * (n_star or 1)))
    ns = _n_star(st, n_star)
    n2, F, G = _second_harmonic(st, model, ns, M)
    kappa = resonance_wavenumber(st.omega, n2)
    c = np.cos(kappa * st.grid.x)
    return ResonanceDefect(float(abs(integrate(st.grid, c * F))), float(abs(integrate(st.grid, c * G))), kappa)


class SecondHarmonicGap(NamedTuple):
    gap_physical: float     # ||F - U (a^2-b^2)/2||_L1 + ||G - U a b||_L1 in x
    gap_rescaled: float     # same for the v = phi/alpha, y = alpha x forcings
    ratio_sqrt_alpha: float
    quadratic_gap: float    # gap of the U phi^2 part alone


def second_harmonic_gap(solution, model: ModelSpec, alpha: float | None = None,
                        n_star: int | None = None, M: int | None = None) -> SecondHarmonicGap:
    st = _stack(solution)
    g = st.grid
    if not (np.any(st.a) or np.any(st.b)):
        return SecondHarmonicGap(0.0, 0.0, 0.0, 0.0)
    ns = _n_star(st, n_star)
    n2, F, G = _second_harmonic(st, model, ns, M)
    if alpha is None:
        alpha = getattr(solution, "alpha", None)
    if alpha is None or not alpha > 0:
        from .modes import measured_alpha
        alpha = measured_alpha(st)
    U = model.U(g.x)
    a, b = st.a[ns], st.b[ns]
    pa, pb = 0.5 * U * (a ** 2 - b ** 2), U * a * b
    gap = float(integrate(g, np.abs(F - pa)) + integrate(g, np.abs(G - pb)))

    # the U phi^2 part of the forcing, from the dominant harmonic alone
    only = ModeStack.zeros(g, st.omega, st.n_max)
    only.a[ns], only.b[ns] = a, b
    quadratic = ModelSpec(name="quadratic_only", potential=model.potential, remainder=lambda z: -z ** 3 / 6)
    Fq, Gq = forcing(only, quadratic, M)
    qgap = float(integrate(g, np.abs(Fq[n2] - pa)) + integrate(g, np.abs(Gq[n2] - pb)))
    # L1 in y of F / alpha^3 equals ||F||_L1(x) / alpha^2
    resc = gap / alpha ** 2
    return SecondHarmonicGap(gap, resc, resc / math.sqrt(alpha), qgap)


def localization_mass(solution, L_window: float, M: int = 64) -> float:
    """eps^-1 sup_t int_{|x| < L_window / eps} phi^2 dx."""
    st = _stack(solution)
    g = st.grid
    eps = math.sqrt(1 - st.omega ** 2)
    R = L_window / eps
    if R > g.half_length:
        raise FermiConfigError(f"window {R:.4g} exceeds the domain half-length {g.half_length:.4g}")
    traj = synthesize_trajectory(st, M)
    inside = (np.abs(g.x) < R).astype(float)
    return float(np.max(integrate(g, inside * traj.phi ** 2)) / eps)


def limiting_functional(cos_integral: float, lambda_hat: float, r1: float, theta1: float) -> tuple[float, float]:
    """(cos 2theta, sin 2theta) * lam Q(sqrt(lam) r1)^2 * int cos(sqrt3 x) U dx."""
    base = lambda_hat * Q_profile(math.sqrt(lambda_hat) * r1) ** 2 * cos_integral
    return float(math.cos(2 * theta1) * base), float(math.sin(2 * theta1) * base)


@dataclass
class GoldenRuleReport:
    cos_integral: float
    sin_integral: float
    resonance_defect_f: float
    resonance_defect_g: float
    second_harmonic_gap: float
    limiting_functional: float
    localization_mass: float
    kappa: float = SQRT3
    decay_warning: bool = False

    def to_dict(self) -> dict:
        return {k: (float(v) if not isinstance(v, bool) else v) for k, v in asdict(self).items()}


def golden_rule_report(solution, model: ModelSpec, decomposition=None,
                       L_window: float = 5.0) -> GoldenRuleReport:
    """Assemble every golden-rule diagnostic for one solution.

    The limiting functional uses the profile closest to the origin, as only a
    bounded centre survives the limit.
    """
    st = _stack(solution)
    gi = golden_rule_integrals(model, st.grid)
    rd = resonance_defect(solution, model)
    gap = second_harmonic_gap(solution, model)
    lim = 0.0
    if decomposition is not None and decomposition.J:
        p = min(decomposition.profiles, key=lambda q: abs(q.r))
        lim = limiting_functional(gi.cos_integral, decomposition.lambda_hat, p.r, p.theta)[0]
    try:
        loc = localization_mass(solution, L_window)
    except FermiConfigError:
        loc = float("nan")
    return GoldenRuleReport(gi.cos_integral, gi.sin_integral, rd.defect_f, rd.defect_g,
                            gap.gap_physical, lim, loc, rd.kappa, gi.decay_warning)


def potentials_table(models, grid: Grid) -> list[dict]:
    rows = []
    for m in models:
        gi = golden_rule_integrals(m, grid)
        rows.append({"name": m.name, "cos_integral": gi.cos_integral, "sin_integral": gi.sin_integral,
                     "decay_warning": gi.decay_warning})
    return rows


def write_potentials_csv(rows, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["name", "cos_integral", "sin_integral", "decay_warning"],
                           lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "cos_integral": format(r["cos_integral"], ".17g"),
                        "sin_integral": format(r["sin_integral"], ".17g")})
    return path
