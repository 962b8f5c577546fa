"""Symplectic time stepping of the semi-discrete equation and periodicity diagnostics."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.fft import dst, idst

from .grid import FieldState, Grid, GridError, Trajectory, d1, d2, d2_symbol, h1_squared, integrate
from .model import ModelSpec, energy

log = logging.getLogger(__name__)

SCHEMES = ("leapfrog", "strang")


class ConfigError(ValueError):
    pass


class BlowUpError(RuntimeError):
    def __init__(self, step_index: int):
        super().__init__(f"non-finite field after step {step_index}")
        self.step_index = step_index


@dataclass(frozen=True)
class EvolveConfig:
    dt: float
    steps_per_period: int
    scheme: str = "leapfrog"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0 or self.steps_per_period < 1:
            raise ConfigError("dt and steps_per_period must be positive")

    @classmethod
    def for_period(cls, T: float, steps_per_period: int, scheme: str = "leapfrog") -> "EvolveConfig":
        return cls(T / steps_per_period, steps_per_period, scheme)

    @property
    def period(self) -> float:
        return self.dt * self.steps_per_period


def check_cfl(grid: Grid, dt: float):
    if dt > 0.5 * grid.h:
        raise ConfigError(f"dt={dt:.3g} violates dt <= h/2 = {0.5 * grid.h:.3g}")


def acceleration(grid: Grid, model: ModelSpec, phi: np.ndarray) -> np.ndarray:
    acc = d2(grid, phi) - phi + model.q(grid.x, phi)
    acc[0] = acc[-1] = 0.0
    return acc


class _LinearFlow:
    """Exact flow of phi_tt = d2 phi - phi on the interior, via DST-I."""

    def __init__(self, grid: Grid, dt: float):
        freq = np.sqrt(1.0 + d2_symbol(grid))
        self.c = np.cos(freq * dt)
        self.s = np.sin(freq * dt)
        self.freq = freq

    def __call__(self, phi, phi_t):
        u = dst(phi[1:-1], type=1)
        v = dst(phi_t[1:-1], type=1)
        u2 = self.c * u + self.s / self.freq * v
        v2 = -self.freq * self.s * u + self.c * v
        out_phi = np.zeros_like(phi)
        out_phit = np.zeros_like(phi_t)
        out_phi[1:-1] = idst(u2, type=1)
        out_phit[1:-1] = idst(v2, type=1)
        return out_phi, out_phit


def _nonlinear(grid, model, phi):
    f = model.q(grid.x, phi)
    f[0] = f[-1] = 0.0
    return f


def step(state: FieldState, model: ModelSpec, dt: float, scheme: str = "leapfrog",
         _flow: _LinearFlow | None = None) -> FieldState:
    """One second-order symplectic step."""
    g = state.grid
    check_cfl(g, dt)
    phi, phit = state.phi.copy(), state.phi_t.copy()
    phi[0] = phi[-1] = 0.0
    phit[0] = phit[-1] = 0.0
    if scheme == "leapfrog":
        phit += 0.5 * dt * acceleration(g, model, phi)
        phi += dt * phit
        phit += 0.5 * dt * acceleration(g, model, phi)
    elif scheme == "strang":
        flow = _flow or _LinearFlow(g, dt)
        phit += 0.5 * dt * _nonlinear(g, model, phi)
        phi, phit = flow(phi, phit)
        phit += 0.5 * dt * _nonlinear(g, model, phi)
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")
    out = FieldState(g, phi, phit, state.time + dt)
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(phit))):
        raise BlowUpError(0)
    return out


def integrate_steps(state: FieldState, model: ModelSpec, dt: float, n_steps: int,
                    scheme: str = "leapfrog", record_every: int | None = None):
    """Advance ``n_steps``; returns the final state and the recorded states (if any)."""
    check_cfl(state.grid, dt)
    flow = _LinearFlow(state.grid, dt) if scheme == "strang" else None
    cur = state
    recorded = [state.copy()] if record_every else []
    for k in range(n_steps):
        try:
            cur = step(cur, model, dt, scheme, _flow=flow)
        except BlowUpError:
            raise BlowUpError(k + 1) from None
        if record_every and (k + 1) % record_every == 0:
            recorded.append(cur.copy())
    return cur, recorded


def evolve_period(state0: FieldState, model: ModelSpec, cfg: EvolveConfig,
                  samples: int = 64) -> Trajectory:
    """Closed trajectory (samples + 1 snapshots) over one period cfg.period."""
    if cfg.steps_per_period % samples:
        raise ConfigError("steps_per_period must be a multiple of the sample count")
    _, rec = integrate_steps(state0, model, cfg.dt, cfg.steps_per_period, cfg.scheme,
                             record_every=cfg.steps_per_period // samples)
    return Trajectory(state0.grid, cfg.period, np.array([s.phi for s in rec]),
                      np.array([s.phi_t for s in rec]), closed=True, t0=state0.time)


class PeriodGap(NamedTuple):
    phi_gap: float
    phit_gap: float
    energy_drift: float


def period_residual(state0: FieldState, model: ModelSpec, T: float, cfg: EvolveConfig) -> PeriodGap:
    """Evolve over T and return L2 gaps to the initial data and |E(T)-E(0)|/|E(0)|."""
    n = int(round(T / cfg.dt))
    if abs(n * cfg.dt - T) > 1e-9 * T:
        raise ConfigError("T must be an integer multiple of dt")
    final, _ = integrate_steps(state0, model, cfg.dt, n, cfg.scheme)
    g = state0.grid
    gap = np.sqrt(integrate(g, (final.phi - state0.phi) ** 2))
    gapt = np.sqrt(integrate(g, (final.phi_t - state0.phi_t) ** 2))
    e0 = energy(state0, model)
    drift = abs(energy(final, model) - e0) / abs(e0) if e0 != 0 else abs(energy(final, model))
    return PeriodGap(float(gap), float(gapt), float(drift))


def energy_history(traj: Trajectory, model: ModelSpec) -> np.ndarray:
    return np.array([energy(s, model) for s in traj.states()])


def observed_order(errors, refinement: float = 2.0) -> np.ndarray:
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(refinement)


# -- time averaged virial identities -------------------------------------

def zeta(x, A):
    return 1.0 / np.cosh(x / A)


def theta(x, A):
    """Primitive of zeta vanishing at 0: A * gd(x / A)."""
    return 2 * A * np.arctan(np.tanh(x / (2 * A)))


@dataclass
class VirialReport:
    alpha: float
    A: float
    I1_defect: float
    I2_defect: float
    identity_defect: float
    ratio_kinetic_mass: float    # <|phi_t|^2 + |phi|^2> / alpha
    ratio_gradient: float        # <|phi_x|^2> / alpha^3
    ratio_linf4: float           # <|phi|_inf^4> / alpha^4
    h3_ratio: float              # <|phi|_inf^2> / alpha^2

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


def virial_diagnostics(traj: Trajectory, model: ModelSpec, A: float | None = None) -> VirialReport:
    """Periodicity of I1, I2 and the time-averaged identity from d/dt I1.

    ``traj`` must be closed (first and last samples one period apart).
    """
    if not traj.closed:
        raise ConfigError("virial diagnostics need a closed trajectory")
    if len(traj.times) > 2:
        dt = np.diff(traj.times)
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
            raise ConfigError("trajectory is not uniformly sampled")
    g = traj.grid
    x = g.x
    A = g.half_length / 4 if A is None else A
    phi, phit = traj.phi, traj.phi_t
    phix = d1(g, phi)

    I1 = integrate(g, phi * phit)
    I2 = integrate(g, (theta(x, A) * phix + 0.5 * zeta(x, A) * phi) * phit)

    per_phi, per_phit = traj.periodic_samples()
    per_phix = phix[:-1]
    kin = integrate(g, per_phit ** 2)
    mass = integrate(g, per_phi ** 2)
    grad = integrate(g, per_phix ** 2)
    nl = integrate(g, model.U(x) * per_phi ** 3 + per_phi ** 4 / 6 + per_phi * model.p(per_phi))
    identity = kin.mean() - (grad + mass).mean() + nl.mean()

    alpha = float(np.max(h1_squared(g, phi)))
    linf = np.max(np.abs(per_phi), axis=1)
    if alpha == 0:
        ratios = (0.0, 0.0, 0.0, 0.0)
    else:
        ratios = ((kin + mass).mean() / alpha, grad.mean() / alpha ** 3,
                  (linf ** 4).mean() / alpha ** 4, (linf ** 2).mean() / alpha ** 2)
    return VirialReport(alpha, A, float(abs(I1[-1] - I1[0])), float(abs(I2[-1] - I2[0])),
                        float(abs(identity)), *map(float, ratios))
