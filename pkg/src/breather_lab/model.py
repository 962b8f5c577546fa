"""Model class  phi_tt = phi_xx - phi + U(x) phi^2 + phi^3/6 + p(phi).

A model is the pair (U, p).  The registry ships the potentials used by the
experiments; sine-Gordon is the member U = 0, p(phi) = phi - sin(phi) - phi^3/6,
so that -phi + q(x, phi) = -sin(phi).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import FieldState, Grid, InvalidStateError, Trajectory, d2, integrate

ArrayFn = Callable[[np.ndarray], np.ndarray]


def _zero(z):
    return np.zeros_like(np.asarray(z, dtype=float))


@dataclass(frozen=True)
class ModelSpec:
    name: str
    potential: ArrayFn = _zero
    remainder: ArrayFn = _zero
    remainder_prime: ArrayFn = _zero
    remainder_primitive: ArrayFn = _zero
    params: dict = field(default_factory=dict, compare=False)
    p_bound: float = 0.0
    even_potential: bool = True
    # pointwise bound |U(x)| <= decay_bound * exp(-|x|/2)
    decay_bound: float = 0.0

    def U(self, x):
        return self.potential(np.asarray(x, dtype=float))

    def p(self, phi):
        return self.remainder(np.asarray(phi, dtype=float))

    def q(self, x, phi):
        phi = np.asarray(phi, dtype=float)
        return self.U(x) * phi ** 2 + phi ** 3 / 6 + self.p(phi)

    def dq(self, x, phi):
        """Derivative of q with respect to phi."""
        phi = np.asarray(phi, dtype=float)
        return 2 * self.U(x) * phi + phi ** 2 / 2 + self.remainder_prime(phi)

    def P(self, phi):
        return self.remainder_primitive(np.asarray(phi, dtype=float))

    def describe(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


def q_eval(model: ModelSpec, x, phi):
    return model.q(x, phi)


# -- registry ---------------------------------------------------------------

def _sg_p(phi):
    return phi - np.sin(phi) - phi ** 3 / 6


def _sg_dp(phi):
    return 1 - np.cos(phi) - phi ** 2 / 2


def _sg_P(phi):
    return phi ** 2 / 2 + np.cos(phi) - 1 - phi ** 4 / 24


def _gaussian(amplitude=1.0, width=1.0):
    def U(x):
        return amplitude * np.exp(-(x / width) ** 2)
    # sup_x exp(-x^2/w^2 + |x|/2) = exp(w^2/16)
    return U, abs(amplitude) * np.exp(width ** 2 / 16)


def _odd_sech_tanh(amplitude=1.0):
    def U(x):
        return -amplitude * np.tanh(x) / np.cosh(x)
    return U, 2.0 * abs(amplitude)


def make_model(name: str, **params) -> ModelSpec:
    """Build a registry model by name.

    Known names: ``cubic`` (U = 0, p = 0), ``sine_gordon``, ``gaussian``
    (params ``amplitude``, ``width``), ``odd_sech_tanh`` (``amplitude``) and
    ``tabulated`` (``x`` and ``u`` lists, linear interpolation, zero outside).
    """
    if name in ("cubic", "zero"):
        return ModelSpec(name=name, params=params)
    if name == "sine_gordon":
        return ModelSpec(name=name, remainder=_sg_p, remainder_prime=_sg_dp,
                         remainder_primitive=_sg_P, params=params, p_bound=1 / 120 + 1e-12)
    if name == "gaussian":
        U, C = _gaussian(**params)
        return ModelSpec(name=name, potential=U, params=params, decay_bound=C)
    if name == "odd_sech_tanh":
        U, C = _odd_sech_tanh(**params)
        return ModelSpec(name=name, potential=U, params=params, even_potential=False, decay_bound=C)
    if name == "tabulated":
        xs = np.asarray(params["x"], dtype=float)
        us = np.asarray(params["u"], dtype=float)
        if xs.shape != us.shape or xs.ndim != 1 or np.any(np.diff(xs) <= 0):
            raise ValueError("tabulated potential needs increasing x and matching u")

        def U(x):
            return np.interp(x, xs, us, left=0.0, right=0.0)
        even = bool(np.allclose(U(-xs), us, atol=1e-14))
        C = float(np.max(np.abs(us) * np.exp(np.abs(xs) / 2), initial=0.0))
        return ModelSpec(name=name, potential=U, params=params, even_potential=even, decay_bound=C)
    raise KeyError(f"unknown model {name!r}")


REGISTRY = ("cubic", "sine_gordon", "gaussian", "odd_sech_tanh", "tabulated")


# -- reference solutions ----------------------------------------------------

def Q_profile(y):
    """Canonical soliton 4 / cosh(y)."""
    return 4.0 / np.cosh(y)


def Q_prime(y):
    return -4.0 * np.tanh(y) / np.cosh(y)


def Q_second(y):
    y = np.asarray(y, dtype=float)
    return 4.0 * (np.tanh(y) ** 2 - 1.0 / np.cosh(y) ** 2) / np.cosh(y)


def sgq_residual(y):
    """Q'' - Q + Q^3/8 with the analytic second derivative."""
    Q = Q_profile(y)
    return Q_second(y) - Q + Q ** 3 / 8


@dataclass(frozen=True)
class BreatherParams:
    eps: float
    omega: float

    @classmethod
    def from_eps(cls, eps: float) -> "BreatherParams":
        if not 0 < eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        return cls(float(eps), float(np.sqrt(1 - eps ** 2)))

    @classmethod
    def from_omega(cls, omega: float) -> "BreatherParams":
        if not 0 < omega < 1:
            raise ValueError("omega must lie in (0, 1)")
        return cls(float(np.sqrt(1 - omega ** 2)), float(omega))

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega


def sine_gordon_breather(params: BreatherParams, t, x):
    e, w = params.eps, params.omega
    return 4 * np.arctan(e / w * np.cos(w * np.asarray(t)) / np.cosh(e * np.asarray(x)))


def sine_gordon_breather_dt(params: BreatherParams, t, x):
    e, w = params.eps, params.omega
    t = np.asarray(t)
    s = 1 / np.cosh(e * np.asarray(x))
    z = e / w * np.cos(w * t) * s
    return -4 * e * np.sin(w * t) * s / (1 + z ** 2)


def breather_state(params: BreatherParams, grid: Grid, t: float = 0.0, shift: float = 0.0) -> FieldState:
    x = grid.x - shift
    return FieldState(grid, sine_gordon_breather(params, t, x),
                      sine_gordon_breather_dt(params, t, x), time=t)


def breather_trajectory(params: BreatherParams, grid: Grid, M: int = 64, closed: bool = False,
                        t0: float = 0.0, shift: float = 0.0) -> Trajectory:
    """Exact B_eps sampled at M uniform times over one period 2 pi / omega."""
    T = params.period
    rows = M + 1 if closed else M
    t = t0 + T * np.arange(rows) / M
    x = grid.x - shift
    return Trajectory(grid, T, sine_gordon_breather(params, t[:, None], x[None, :]),
                      sine_gordon_breather_dt(params, t[:, None], x[None, :]), closed=closed, t0=t0)


# -- conserved energy -------------------------------------------------------

def energy(state: FieldState, model: ModelSpec) -> float:
    """Hamiltonian with 1/2 weights on the quadratic terms.

    The gradient term is taken as -<phi, d2 phi>, the summation-by-parts
    form that makes this exactly the energy of the semi-discrete system.
    """
    state.check_finite()
    g = state.grid
    phi = state.phi
    x = g.x
    grad2 = -integrate(g, phi * d2(g, phi))
    dens = (0.5 * state.phi_t ** 2 + 0.5 * phi ** 2 - model.U(x) * phi ** 3 / 3
            - phi ** 4 / 24 - model.P(phi))
    return float(integrate(g, dens) + 0.5 * grad2)
