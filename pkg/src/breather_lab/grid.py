"""Uniform spatial grid on [-L, L] with Dirichlet truncation.

Derivatives are fourth-order central differences.  Values beyond the two
end nodes are filled by odd reflection, which is the ghost-point closure
consistent with phi(+-L) = 0 and keeps the second-difference operator
symmetric (it is diagonalised exactly by the type-I discrete sine
transform, see ``d2_symbol``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, NamedTuple

import numpy as np
import scipy.sparse as sp


class GridError(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    half_length: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 16:
            raise GridError(f"need at least 16 nodes, got {self.n_points}")
        if self.n_points % 2 == 0:
            raise GridError("n_points must be odd so that x=0 is a node")
        if not self.half_length > 0:
            raise GridError("half_length must be positive")

    @classmethod
    def for_amplitude(cls, eps: float, h: float = 0.075, decay_widths: float = 30.0,
                      min_half_length: float = 30.0) -> "Grid":
        """Grid wide enough that a profile of width 1/eps has decayed by exp(-decay_widths)."""
        L = max(min_half_length, decay_widths / eps)
        n = int(np.ceil(2 * L / h)) + 1
        if n % 2 == 0:
            n += 1
        return cls(float(L), n)

    @property
    def h(self) -> float:
        return 2 * self.half_length / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        # exact mirror symmetry: x[c - k] == -x[c + k]
        x = self.h * (np.arange(self.n_points) - self.center)
        x.setflags(write=False)
        return x

    @property
    def center(self) -> int:
        return (self.n_points - 1) // 2

    def to_dict(self) -> dict:
        return {"half_length": self.half_length, "n_points": self.n_points}


@dataclass
class FieldState:
    grid: Grid
    phi: np.ndarray
    phi_t: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        self.phi_t = np.asarray(self.phi_t, dtype=float)
        n = self.grid.n_points
        if self.phi.shape != (n,) or self.phi_t.shape != (n,):
            raise InvalidStateError(
                f"field arrays must have shape ({n},), got {self.phi.shape} and {self.phi_t.shape}")

    def check_finite(self):
        if not (np.all(np.isfinite(self.phi)) and np.all(np.isfinite(self.phi_t))):
            raise InvalidStateError("state contains non-finite samples")

    def copy(self) -> "FieldState":
        return FieldState(self.grid, self.phi.copy(), self.phi_t.copy(), self.time)

    @classmethod
    def zeros(cls, grid: Grid, time: float = 0.0) -> "FieldState":
        return cls(grid, np.zeros(grid.n_points), np.zeros(grid.n_points), time)


@dataclass
class Trajectory:
    """Uniform time samples of a field over one period.

    ``closed`` trajectories include the sample at t = period (M + 1 rows);
    open ones stop one step short (M rows), which is what the discrete
    Fourier transform in time wants.
    """
    grid: Grid
    period: float
    phi: np.ndarray
    phi_t: np.ndarray
    closed: bool = False
    t0: float = 0.0
    times: np.ndarray = field(init=False)

    def __post_init__(self):
        self.phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        self.phi_t = np.atleast_2d(np.asarray(self.phi_t, dtype=float))
        if self.phi.shape != self.phi_t.shape or self.phi.shape[1] != self.grid.n_points:
            raise InvalidStateError("trajectory arrays have inconsistent shapes")
        m = self.n_intervals
        self.times = self.t0 + self.period * np.arange(self.phi.shape[0]) / m

    @property
    def n_intervals(self) -> int:
        return self.phi.shape[0] - 1 if self.closed else self.phi.shape[0]

    def periodic_samples(self) -> tuple[np.ndarray, np.ndarray]:
        """Samples at t_j = t0 + j T / M for j < M."""
        if self.closed:
            return self.phi[:-1], self.phi_t[:-1]
        return self.phi, self.phi_t

    def states(self) -> Iterator[FieldState]:
        for t, p, pt in zip(self.times, self.phi, self.phi_t):
            yield FieldState(self.grid, p, pt, float(t))

    @classmethod
    def from_states(cls, states, period: float, closed: bool) -> "Trajectory":
        states = list(states)
        times = np.array([s.time for s in states])
        m = len(states) - 1 if closed else len(states)
        expected = times[0] + period * np.arange(len(states)) / m
        if not np.allclose(times, expected, rtol=0, atol=1e-9 * max(1.0, period)):
            raise GridError("trajectory samples are not uniform over one period")
        return cls(states[0].grid, period, np.array([s.phi for s in states]),
                   np.array([s.phi_t for s in states]), closed=closed, t0=float(times[0]))


def _odd_padded(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Pad with two odd-reflected ghost nodes on each side; end values forced to 0."""
    g = np.array(f, dtype=float, copy=True)
    g[..., 0] = 0.0
    g[..., -1] = 0.0
    left = -g[..., [2, 1]]
    right = -g[..., [-2, -3]]
    return np.concatenate([left, g, right], axis=-1)


def d2(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Fourth-order second derivative with homogeneous Dirichlet closure.

    Works along the last axis; end values of the result are 0.
    """
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != grid.n_points:
        raise GridError("array length does not match grid")
    if grid.n_points < 7:
        raise GridError("grid too small for the five-point stencil")
    p = _odd_padded(grid, f)
    out = (-p[..., :-4] + 16 * p[..., 1:-3] - 30 * p[..., 2:-2]
           + 16 * p[..., 3:-1] - p[..., 4:]) / (12 * grid.h ** 2)
    out[..., 0] = 0.0
    out[..., -1] = 0.0
    return out


def d1(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Fourth-order first derivative, odd-reflection closure at both ends."""
    p = _odd_padded(grid, np.asarray(f, dtype=float))
    return (p[..., :-4] - 8 * p[..., 1:-3] + 8 * p[..., 3:-1] - p[..., 4:]) / (12 * grid.h)


def d2_matrix(grid: Grid) -> sp.csr_matrix:
    """Sparse form of ``d2`` restricted to the N - 2 interior nodes."""
    n = grid.n_points - 2
    c = 1.0 / (12 * grid.h ** 2)
    main = np.full(n, -30.0 * c)
    main[0] += c   # ghost -f[1] enters with weight -1
    main[-1] += c
    off1 = np.full(n - 1, 16.0 * c)
    off2 = np.full(n - 2, -1.0 * c)
    return sp.diags([off2, off1, main, off1, off2], [-2, -1, 0, 1, 2], format="csr")


def d2_symbol(grid: Grid) -> np.ndarray:
    """Eigenvalues of -d2 on the interior, ordered like scipy's DST-I modes."""
    n = grid.n_points - 2
    theta = np.pi * np.arange(1, n + 1) / (n + 1)
    return (30 - 32 * np.cos(theta) + 2 * np.cos(2 * theta)) / (12 * grid.h ** 2)


def integrate(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Trapezoid rule along the last axis."""
    f = np.asarray(f, dtype=float)
    return grid.h * (f.sum(axis=-1) - 0.5 * (f[..., 0] + f[..., -1]))


class Norms(NamedTuple):
    L2: float
    H1: float
    Linf: float


def norms(grid: Grid, f: np.ndarray) -> Norms:
    f = np.asarray(f, dtype=float)
    l2sq = integrate(grid, f ** 2)
    h1sq = l2sq + integrate(grid, d1(grid, f) ** 2)
    return Norms(float(np.sqrt(l2sq)), float(np.sqrt(h1sq)), float(np.max(np.abs(f), initial=0.0)))


def h1_squared(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Squared discrete H1 norm along the last axis (vectorised over rows)."""
    return integrate(grid, f ** 2) + integrate(grid, d1(grid, f) ** 2)


class FourierIntegral(NamedTuple):
    cos_part: float
    sin_part: float
    decay_warning: bool


def fourier_integral(grid: Grid, f: np.ndarray, k: float, decay_tol: float = 1e-10) -> FourierIntegral:
    """Trapezoid values of int cos(kx) f(x) dx and int sin(kx) f(x) dx over [-L, L]."""
    f = np.asarray(f, dtype=float)
    x = grid.x
    warn = bool(max(abs(f[0]), abs(f[-1])) > decay_tol)
    return FourierIntegral(float(integrate(grid, np.cos(k * x) * f)),
                           float(integrate(grid, np.sin(k * x) * f)), warn)
