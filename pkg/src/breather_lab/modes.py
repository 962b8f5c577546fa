"""Fourier-in-time representation of periodic fields.

    phi(t, x) = a_0(x)/2 + sum_n a_n(x) cos(n w t) + b_n(x) sin(n w t)

``b`` is stored with the same shape as ``a``; row 0 of ``b`` is always zero.
Forcings (f_n, g_n) are the same coefficients of q(x, phi(t, x)), computed
by collocation on a zero-padded time grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .grid import FieldState, Grid, Trajectory, d1, d2, integrate
from .model import ModelSpec


class AliasingError(ValueError):
    pass


class AmbiguousDominanceError(ValueError):
    pass


@dataclass
class ModeStack:
    grid: Grid
    omega: float
    a: np.ndarray
    b: np.ndarray
    tail_energy: float = 0.0

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.a.ndim != 2 or self.a.shape != self.b.shape or self.a.shape[1] != self.grid.n_points:
            raise ValueError("a and b must both have shape (n_max + 1, N)")
        if self.a.shape[0] < 2:
            raise ValueError("need n_max >= 1")
        self.b[0] = 0.0

    @property
    def n_max(self) -> int:
        return self.a.shape[0] - 1

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega

    @classmethod
    def zeros(cls, grid: Grid, omega: float, n_max: int = 8) -> "ModeStack":
        return cls(grid, omega, np.zeros((n_max + 1, grid.n_points)), np.zeros((n_max + 1, grid.n_points)))

    def copy(self) -> "ModeStack":
        return ModeStack(self.grid, self.omega, self.a.copy(), self.b.copy(), self.tail_energy)

    def rotated(self, tau: float) -> "ModeStack":
        """Stack of the time-translated field t -> phi(t + tau)."""
        n = np.arange(self.n_max + 1)[:, None]
        c, s = np.cos(n * self.omega * tau), np.sin(n * self.omega * tau)
        return ModeStack(self.grid, self.omega, self.a * c + self.b * s, self.b * c - self.a * s)

    def mode_energy(self) -> np.ndarray:
        """||a_n||^2 + ||b_n||^2 in L2(x), n = 0..n_max."""
        return integrate(self.grid, self.a ** 2 + self.b ** 2)


# -- transforms ---------------------------------------------------------------

def analyze(traj: Trajectory, n_max: int = 8, omega: float | None = None) -> ModeStack:
    """Discrete Fourier transform in time at every grid node."""
    phi, _ = traj.periodic_samples()
    M = phi.shape[0]
    if M & (M - 1) or M < 4 * n_max:
        raise AliasingError(f"need a power-of-two sample count >= {4 * n_max}, got {M}")
    omega = 2 * np.pi / traj.period if omega is None else omega
    c = np.fft.rfft(phi, axis=0) * (2.0 / M)
    if traj.t0:
        n = np.arange(c.shape[0])[:, None]
        c = c * np.exp(-1j * n * 2 * np.pi * traj.t0 / traj.period)
    a = c.real[: n_max + 1].copy()
    b = -c.imag[: n_max + 1].copy()
    b[0] = 0.0
    tail = c[n_max + 1:].copy()
    if M % 2 == 0 and tail.shape[0]:
        tail[-1] *= 0.5   # Nyquist row counts once
    tail_energy = float(integrate(traj.grid, np.abs(tail) ** 2).sum()) if tail.shape[0] else 0.0
    return ModeStack(traj.grid, omega, a, b, tail_energy)


def basis(n_max: int, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """cos / sin basis rows at phases s, shape (len(s), n_max + 1); cos column 0 is 1/2."""
    n = np.arange(n_max + 1)
    C = np.cos(np.outer(s, n))
    C[:, 0] = 0.5
    S = np.sin(np.outer(s, n))
    return C, S


def synthesize(stack: ModeStack, t: float) -> FieldState:
    n = np.arange(stack.n_max + 1)
    w = stack.omega
    c, s = np.cos(n * w * t), np.sin(n * w * t)
    c[0] = 0.5
    phi = c @ stack.a + s @ stack.b
    phit = (n * w * np.cos(n * w * t)) @ stack.b - (n * w * np.sin(n * w * t)) @ stack.a
    return FieldState(stack.grid, phi, phit, float(t))


def synthesize_trajectory(stack: ModeStack, M: int = 64, closed: bool = False, t0: float = 0.0) -> Trajectory:
    rows = M + 1 if closed else M
    s = stack.omega * t0 + 2 * np.pi * np.arange(rows) / M
    C, S = basis(stack.n_max, s)
    n = np.arange(stack.n_max + 1)
    w = stack.omega
    phi = C @ stack.a + S @ stack.b
    phit = (np.cos(np.outer(s, n)) * n * w) @ stack.b - (np.sin(np.outer(s, n)) * n * w) @ stack.a
    return Trajectory(stack.grid, stack.period, phi, phit, closed=closed, t0=t0)


def collocation_size(n_max: int, M: int | None = None) -> int:
    """Time samples used for q: twice the analysis size M (default max(64, 8 n_max))."""
    if M is None:
        M = max(64, 8 * n_max)
        M = 1 << (M - 1).bit_length()
    return 2 * M


def forcing(stack: ModeStack, model: ModelSpec, M: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Fourier coefficients (f_n, g_n) of q(x, phi), n = 0..n_max."""
    Mc = collocation_size(stack.n_max, M)
    s = 2 * np.pi * np.arange(Mc) / Mc
    C, S = basis(stack.n_max, s)
    phi = C @ stack.a + S @ stack.b
    q = model.q(stack.grid.x, phi)
    n = np.arange(stack.n_max + 1)
    f = (2.0 / Mc) * np.cos(np.outer(n, s)) @ q
    g = (2.0 / Mc) * np.sin(np.outer(n, s)) @ q
    g[0] = 0.0
    return f, g


def mode_operator(stack: ModeStack, n: int, u: np.ndarray) -> np.ndarray:
    """u'' + (n^2 w^2 - 1) u."""
    return d2(stack.grid, u) + ((n * stack.omega) ** 2 - 1) * u


def residual_fields(stack: ModeStack, model: ModelSpec, M: int | None = None,
                    sponge: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Mode-equation residuals a_n'' + (n^2w^2-1)a_n + f_n and the b_n analogue.

    Rows n = 0..n_max; boundary nodes are set to 0.  ``sponge`` is an optional
    damping profile gamma(x) for the equation phi_tt + gamma phi_t = ...
    """
    f, g = forcing(stack, model, M)
    n = np.arange(stack.n_max + 1)[:, None]
    lin = (n * stack.omega) ** 2 - 1
    ra = d2(stack.grid, stack.a) + lin * stack.a + f
    rb = d2(stack.grid, stack.b) + lin * stack.b + g
    if sponge is not None:
        ra -= sponge * n * stack.omega * stack.b
        rb += sponge * n * stack.omega * stack.a
    rb[0] = 0.0
    for r in (ra, rb):
        r[:, 0] = 0.0
        r[:, -1] = 0.0
    return ra, rb


def mode_residuals(stack: ModeStack, model: ModelSpec, M: int | None = None) -> np.ndarray:
    ra, rb = residual_fields(stack, model, M)
    return np.sqrt(integrate(stack.grid, ra ** 2 + rb ** 2))


def mode_residual(stack: ModeStack, model: ModelSpec, n: int, M: int | None = None) -> float:
    """Combined L2 norm of the a_n and b_n mode-equation residuals."""
    if not 0 <= n <= stack.n_max:
        raise ValueError(f"mode {n} outside 0..{stack.n_max}")
    return float(mode_residuals(stack, model, M)[n])


# -- spectral bookkeeping -----------------------------------------------------

class SpectralParams(NamedTuple):
    mu: np.ndarray
    lam: np.ndarray
    alpha: float
    n_star: int


def spectral_params(stack: ModeStack, alpha: float, n_star: int | None = None) -> SpectralParams:
    n = np.arange(stack.n_max + 1)
    mu = (n * stack.omega) ** 2 - 1
    if n_star is None:
        n_star = dominant_index(stack)
    return SpectralParams(mu, -mu / alpha ** 2, float(alpha), int(n_star))


def dominant_index(stack: ModeStack, tie_tol: float = 0.01) -> int:
    e = stack.mode_energy()[1:]
    if not np.any(e > 0):
        raise AmbiguousDominanceError("stack has no oscillating content")
    order = np.argsort(e)[::-1]
    if len(e) > 1 and e[order[1]] >= (1 - tie_tol) * e[order[0]]:
        raise AmbiguousDominanceError(
            f"modes {order[0] + 1} and {order[1] + 1} carry energies within {tie_tol:.0%}")
    return int(order[0] + 1)


def measured_alpha(stack: ModeStack, M: int = 64) -> float:
    """sup over collocation times of the squared discrete H1 norm."""
    from .grid import h1_squared
    traj = synthesize_trajectory(stack, M)
    return float(np.max(h1_squared(stack.grid, traj.phi)))


@dataclass
class DominantSplit:
    n_star: int
    a_star: np.ndarray
    b_star: np.ndarray
    alpha: float
    # rescaled v = phi/alpha, y = alpha x, s = w t
    perp_L2L2: float
    perp_LinfL2: float
    perp_L4Linf: float
    perp_ds_L2L2: float
    star_L2L2: float
    extras: dict = field(default_factory=dict)

    def norms_dict(self) -> dict:
        return {"n_star": self.n_star, "alpha": self.alpha, "perp_L2L2": self.perp_L2L2,
                "perp_LinfL2": self.perp_LinfL2, "perp_L4Linf": self.perp_L4Linf,
                "perp_ds_L2L2": self.perp_ds_L2L2, "star_L2L2": self.star_L2L2, **self.extras}


def _mixed_norms(grid: Grid, v: np.ndarray, alpha: float):
    """Rescaled mixed norms of physical samples v[j, x] at M uniform phases."""
    M = v.shape[0]
    ds = 2 * np.pi / M
    l2y_sq = integrate(grid, v ** 2) / alpha          # int |phi/alpha|^2 d(alpha x)
    linf = np.max(np.abs(v), axis=1) / alpha
    return (np.sqrt(ds * l2y_sq.sum()), np.sqrt(l2y_sq.max()), (ds * (linf ** 4).sum()) ** 0.25)


def dominant_split(stack: ModeStack, alpha: float, M: int = 64, tie_tol: float = 0.01) -> DominantSplit:
    """Split into the dominant harmonic and the remainder, with rescaled remainder norms."""
    n_star = dominant_index(stack, tie_tol)
    perp = stack.copy()
    perp.a[n_star] = 0.0
    perp.b[n_star] = 0.0
    star = ModeStack(stack.grid, stack.omega, np.zeros_like(stack.a), np.zeros_like(stack.b))
    star.a[n_star] = stack.a[n_star]
    star.b[n_star] = stack.b[n_star]
    tp = synthesize_trajectory(perp, M)
    ts = synthesize_trajectory(star, M)
    l2l2, linfl2, l4linf = _mixed_norms(stack.grid, tp.phi, alpha)
    # d/ds = (1/w) d/dt
    ds_l2l2 = _mixed_norms(stack.grid, tp.phi_t / stack.omega, alpha)[0]
    star_l2 = _mixed_norms(stack.grid, ts.phi, alpha)[0]
    return DominantSplit(n_star, stack.a[n_star].copy(), stack.b[n_star].copy(), float(alpha),
                         float(l2l2), float(linfl2), float(l4linf), float(ds_l2l2), float(star_l2))


def rescaled_mode_sup(stack: ModeStack, alpha: float, exclude: int) -> float:
    """max over n != exclude of ||a_n||_inf + ||b_n||_inf in v = phi/alpha units."""
    vals = [np.max(np.abs(stack.a[n])) + np.max(np.abs(stack.b[n]))
            for n in range(stack.n_max + 1) if n != exclude]
    return float(max(vals)) / alpha


def rescaled_norms_direct(traj: Trajectory, alpha: float) -> tuple[float, float, float]:
    """(L2L2, LinfL2, L4Linf) norms of v(s, y) = phi(T s / 2pi, y / alpha) / alpha,
    evaluated by resampling phi onto the y-grid, as a cross-check of the scaled formulas."""
    phi, _ = traj.periodic_samples()
    y = alpha * traj.grid.x
    dy = y[1] - y[0]
    v = phi / alpha
    M = v.shape[0]
    ds = 2 * np.pi / M
    l2y = dy * (np.sum(v ** 2, axis=1) - 0.5 * (v[:, 0] ** 2 + v[:, -1] ** 2))
    linf = np.max(np.abs(v), axis=1)
    return (float(np.sqrt(ds * l2y.sum())), float(np.sqrt(l2y.max())), float((ds * (linf ** 4).sum()) ** 0.25))


def parseval_gap(stack: ModeStack, M: int = 64) -> float:
    """|int_0^T int phi^2 - T (||a_0||^2/4 + sum (||a_n||^2 + ||b_n||^2)/2)| / (same)."""
    traj = synthesize_trajectory(stack, M)
    T = stack.period
    direct = T / M * integrate(stack.grid, traj.phi ** 2).sum()
    e = stack.mode_energy()
    spectral = T * (e[0] / 4 + e[1:].sum() / 2)
    return float(abs(direct - spectral) / max(spectral, 1e-300))


def h3_ratio(stack: ModeStack, alpha: float, M: int = 64) -> float:
    traj = synthesize_trajectory(stack, M)
    return float(np.mean(np.max(np.abs(traj.phi), axis=1) ** 2) / alpha ** 2)


def stack_derivative_norm(stack: ModeStack, n: int) -> float:
    return float(np.sqrt(integrate(stack.grid, d1(stack.grid, stack.a[n]) ** 2 + d1(stack.grid, stack.b[n]) ** 2)))
