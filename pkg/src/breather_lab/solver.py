"""Newton iteration for time-periodic solutions at fixed frequency.

Unknowns are the harmonic profiles a_0..a_nmax, b_1..b_nmax on the interior
nodes; the equations are

    a_n'' + (n^2 w^2 - 1) a_n + f_n = 0,    b_n'' + (n^2 w^2 - 1) b_n + g_n = 0.

Time translation is removed by pinning b_{n*} = 0; space translation by
restricting to even profiles (even potentials) or by a bordered centroid
constraint.  The sparse Jacobian is stored with channels interleaved node by
node, so it is banded with half-bandwidth 2K (K channels) and a plain LU in
natural order keeps the fill inside the band.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .grid import Grid, d1, d2_matrix, integrate
from .model import BreatherParams, ModelSpec, Q_profile
from .modes import (ModeStack, basis, collocation_size, h3_ratio, measured_alpha,
                    residual_fields)

log = logging.getLogger(__name__)

H3_FLOOR = 1e-3


class DomainTooSmallError(ValueError):
    pass


class GaugeError(RuntimeError):
    pass


GAUGES = ("even_x", "zero_b_fundamental", "centroid")


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-10
    max_iter: int = 50
    damping: float = 1.0
    gauge: tuple = ("even_x", "zero_b_fundamental")
    residual_tol: float = 1e-8
    boundary: str = "dirichlet"          # or "sponge"
    sponge_strength: float = 0.5
    sponge_start: float = 0.8            # fraction of L where damping begins
    collocation_M: int | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        bad = set(self.gauge) - set(GAUGES)
        if bad:
            raise ValueError(f"unknown gauge flags {sorted(bad)}")
        if "even_x" in self.gauge and "centroid" in self.gauge:
            raise ValueError("choose one of even_x / centroid")
        if self.boundary not in ("dirichlet", "sponge"):
            raise ValueError("boundary must be 'dirichlet' or 'sponge'")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["gauge"] = list(self.gauge)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NewtonConfig":
        d = dict(d)
        if "gauge" in d:
            d["gauge"] = tuple(d["gauge"])
        return cls(**d)


@dataclass
class BreatherSolution:
    stack: ModeStack
    omega: float
    model_name: str
    residual_norm: float
    newton_iterations: int
    converged: bool
    residual_history: list = field(default_factory=list)
    update_history: list = field(default_factory=list)
    eps: float = float("nan")
    alpha: float = float("nan")
    n_star: int = 1
    diagnostics: dict = field(default_factory=dict)
    message: str = ""

    @property
    def period(self) -> float:
        """Period of the orbit, 2 pi / omega with omega the fundamental frequency."""
        return 2 * np.pi / self.omega

    @property
    def grid(self) -> Grid:
        return self.stack.grid


def seed(params: BreatherParams, grid: Grid, n_max: int = 8, decay_tol: float = 1e-10) -> ModeStack:
    """Leading-order profile eps Q(eps x) cos(w t)."""
    a1 = params.eps * Q_profile(params.eps * grid.x)
    if max(abs(a1[0]), abs(a1[-1])) > decay_tol:
        raise DomainTooSmallError(
            f"eps Q(eps L) = {abs(a1[-1]):.2e} > {decay_tol:g}; enlarge L (need about 30/eps)")
    st = ModeStack.zeros(grid, params.omega, n_max)
    st.a[1] = a1
    return st


def sponge_profile(grid: Grid, cfg: NewtonConfig) -> np.ndarray | None:
    if cfg.boundary != "sponge":
        return None
    L = grid.half_length
    x0 = cfg.sponge_start * L
    r = np.clip((np.abs(grid.x) - x0) / (L - x0), 0.0, None)
    return cfg.sponge_strength * r ** 2


# -- packing ------------------------------------------------------------------

def _channels(n_max: int):
    """(kind, n) per channel: a_0..a_nmax then b_1..b_nmax."""
    return [("a", n) for n in range(n_max + 1)] + [("b", n) for n in range(1, n_max + 1)]


def pack(stack: ModeStack) -> np.ndarray:
    """(K, N) channel array."""
    return np.vstack([stack.a, stack.b[1:]])


def unpack(U: np.ndarray, template: ModeStack) -> ModeStack:
    n1 = template.n_max + 1
    b = np.zeros_like(template.b)
    b[1:] = U[n1:]
    return ModeStack(template.grid, template.omega, U[:n1].copy(), b)


def residual_channels(stack: ModeStack, model: ModelSpec, cfg: NewtonConfig) -> np.ndarray:
    ra, rb = residual_fields(stack, model, cfg.collocation_M, sponge_profile(stack.grid, cfg))
    return np.vstack([ra, rb[1:]])


def jacobian(stack: ModeStack, model: ModelSpec, cfg: NewtonConfig | None = None,
             chunk: int = 2048) -> sp.csr_matrix:
    """Full Jacobian of the interior residual, index i*K + k (node i, channel k)."""
    cfg = cfg or NewtonConfig()
    g = stack.grid
    n_max = stack.n_max
    chans = _channels(n_max)
    K = len(chans)
    Ni = g.n_points - 2
    w0 = stack.omega

    Mc = collocation_size(n_max, cfg.collocation_M)
    s = 2 * np.pi * np.arange(Mc) / Mc
    C, S = basis(n_max, s)
    n_idx = np.array([n for _, n in chans])
    is_a = np.array([k == "a" for k, _ in chans])
    B = np.where(is_a[None, :], C[:, n_idx], S[:, n_idx])                    # (Mc, K)
    Pr = (2.0 / Mc) * np.where(is_a[:, None], np.cos(np.outer(n_idx, s)), np.sin(np.outer(n_idx, s)))

    phi = C @ stack.a + S @ stack.b
    x_int = g.x[1:-1]
    w = model.dq(x_int, phi[:, 1:-1])                                          # (Mc, Ni)

    blocks = np.empty((Ni, K, K))
    for start in range(0, Ni, chunk):
        wc = w[:, start:start + chunk].T                                       # (c, Mc)
        blocks[start:start + chunk] = np.matmul(Pr[None], wc[:, :, None] * B[None])

    rows, cols, vals = [], [], []
    base = np.arange(Ni)[:, None, None] * K
    kk = np.arange(K)
    rows.append(np.broadcast_to(base + kk[None, :, None], blocks.shape).ravel())
    cols.append(np.broadcast_to(base + kk[None, None, :], blocks.shape).ravel())
    vals.append(blocks.ravel())

    D = d2_matrix(g).tocoo()
    lin = (n_idx * w0) ** 2 - 1
    for k in range(K):
        rows.append(D.row * K + k)
        cols.append(D.col * K + k)
        vals.append(D.data)
        rows.append(np.arange(Ni) * K + k)
        cols.append(np.arange(Ni) * K + k)
        vals.append(np.full(Ni, lin[k]))

    gam = sponge_profile(g, cfg)
    if gam is not None:
        gi = gam[1:-1]
        for n in range(1, n_max + 1):
            ka, kb = n, n_max + n
            rows += [np.arange(Ni) * K + ka, np.arange(Ni) * K + kb]
            cols += [np.arange(Ni) * K + kb, np.arange(Ni) * K + ka]
            vals += [-gi * n * w0, gi * n * w0]

    J = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(Ni * K, Ni * K))
    return J.tocsr()


class _Reduction:
    """Index bookkeeping for the gauge-fixed unknown vector."""

    def __init__(self, stack: ModeStack, cfg: NewtonConfig, n_star: int):
        g = stack.grid
        n_max = stack.n_max
        self.K = 2 * n_max + 1
        self.Ni = g.n_points - 2
        self.even = "even_x" in cfg.gauge
        self.centroid = "centroid" in cfg.gauge
        pinned = n_max + n_star if "zero_b_fundamental" in cfg.gauge else None
        self.active = np.array([k for k in range(self.K) if k != pinned])
        self.ci = g.center - 1
        self.nodes = np.arange(self.ci, self.Ni) if self.even else np.arange(self.Ni)
        chan_map = -np.ones(self.K, dtype=int)
        chan_map[self.active] = np.arange(len(self.active))
        self.chan_map = chan_map
        Ka = len(self.active)
        node_map = np.abs(np.arange(self.Ni) - self.ci) if self.even else np.arange(self.Ni)
        full_node = np.repeat(np.arange(self.Ni), self.K)
        full_chan = np.tile(np.arange(self.K), self.Ni)
        self.col_of_full = np.where(chan_map[full_chan] >= 0,
                                    node_map[full_node] * Ka + chan_map[full_chan], -1)
        row_ok = (chan_map[full_chan] >= 0) & (full_node >= (self.ci if self.even else 0))
        self.row_of_full = np.where(row_ok, (full_node - (self.ci if self.even else 0)) * Ka
                                    + chan_map[full_chan], -1)
        self.size = len(self.nodes) * Ka

    def reduce_matrix(self, J: sp.csr_matrix) -> sp.csr_matrix:
        Jc = J.tocoo()
        r = self.row_of_full[Jc.row]
        c = self.col_of_full[Jc.col]
        ok = (r >= 0) & (c >= 0)
        return sp.csr_matrix((Jc.data[ok], (r[ok], c[ok])), shape=(self.size, self.size))

    def reduce_vector(self, R: np.ndarray) -> np.ndarray:
        """(K, N) residual -> reduced equation vector."""
        inner = R[:, 1:-1].T.ravel()          # node-major, channel-minor
        out = np.zeros(self.size)
        ok = self.row_of_full >= 0
        out[self.row_of_full[ok]] = inner[ok]
        return out

    def expand(self, d: np.ndarray, N: int) -> np.ndarray:
        """Reduced update -> (K, N) channel array (pinned channel zero)."""
        out = np.zeros(self.Ni * self.K)
        ok = self.col_of_full >= 0
        out[ok] = d[self.col_of_full[ok]]
        U = np.zeros((self.K, N))
        U[:, 1:-1] = out.reshape(self.Ni, self.K).T
        return U


def _centroid(stack: ModeStack, n_star: int) -> float:
    g = stack.grid
    return float(integrate(g, g.x * (stack.a[n_star] ** 2 + stack.b[n_star] ** 2)))


def _solve_step(stack, model, cfg, red: _Reduction, n_star: int, R: np.ndarray):
    J = red.reduce_matrix(jacobian(stack, model, cfg))
    rhs = -red.reduce_vector(R)
    if red.centroid:
        # bordered system: unfolding column u_x (the translation kernel),
        # constraint row = gradient of the fundamental-mode centroid
        g = stack.grid
        U = pack(stack)
        col = red.reduce_vector(d1(g, U))
        grad = np.zeros_like(U)
        grad[n_star] = 2 * g.h * g.x * stack.a[n_star]
        grad[stack.n_max + n_star] = 2 * g.h * g.x * stack.b[n_star]
        row = np.zeros(red.size)
        ok = red.col_of_full >= 0
        np.add.at(row, red.col_of_full[ok], grad[:, 1:-1].T.ravel()[ok])
        J = sp.bmat([[J, sp.csr_matrix(col[:, None])], [sp.csr_matrix(row[None, :]), None]])
        rhs = np.append(rhs, -_centroid(stack, n_star))
    try:
        lu = splu(J.tocsc(), permc_spec="NATURAL")
        d = lu.solve(rhs)
    except RuntimeError as exc:
        raise GaugeError(f"singular Jacobian ({exc}); check the gauge flags") from exc
    if not np.all(np.isfinite(d)):
        raise GaugeError("non-finite Newton update; Jacobian is numerically singular")
    sigma = 0.0
    if red.centroid:
        sigma, d = float(d[-1]), d[:-1]
    return red.expand(d, stack.grid.n_points), sigma


def _merit(red: _Reduction, R: np.ndarray, h: float) -> float:
    return float(np.sqrt(h * np.sum(red.reduce_vector(R) ** 2)))


def newton_solve(seed_stack: ModeStack, model: ModelSpec, cfg: NewtonConfig | None = None,
                 n_star: int = 1) -> BreatherSolution:
    """Newton iteration at the seed's frequency; never raises on non-convergence."""
    cfg = cfg or NewtonConfig()
    if "even_x" in cfg.gauge and not model.even_potential:
        raise GaugeError("even_x gauge requires an even potential")
    stack = seed_stack.copy()
    if "zero_b_fundamental" in cfg.gauge:
        stack.b[n_star] = 0.0
    red = _Reduction(stack, cfg, n_star)
    h = stack.grid.h
    res_hist, upd_hist = [], []
    converged_update = False
    sigma = 0.0
    R = residual_channels(stack, model, cfg)
    it = 0
    for it in range(1, cfg.max_iter + 1):
        merit = _merit(red, R, h)
        res_hist.append(merit)
        dU, sigma = _solve_step(stack, model, cfg, red, n_star, R)
        step = cfg.damping
        while True:
            trial = unpack(pack(stack) + step * dU, stack)
            Rt = residual_channels(trial, model, cfg)
            mt = _merit(red, Rt, h)
            if mt <= (1 - 1e-4 * step) * merit or merit < 1e-13 or step < 1 / 64:
                break
            step /= 2
        upd = float(np.max(np.abs(step * dU)))
        upd_hist.append(upd)
        stack, R = trial, Rt
        log.debug("newton it=%d merit=%.3e update=%.3e step=%.3g", it, merit, upd, step)
        if not np.all(np.isfinite(pack(stack))):
            break
        if upd < cfg.tol:
            converged_update = True
            break
    res_hist.append(_merit(red, R, h))
    per_mode = mode_residuals_cfg(stack, model, cfg)
    resid = float(np.max(per_mode))
    ok = converged_update and resid <= cfg.residual_tol
    if cfg.boundary == "dirichlet" and not ok and converged_update:
        msg = f"update converged but residual {resid:.2e} above {cfg.residual_tol:g}"
    elif not converged_update:
        msg = f"no convergence after {it} iterations; residual history tail {res_hist[-3:]}"
    else:
        msg = "converged"
    sol = BreatherSolution(stack, stack.omega, model.name, resid, it, ok, res_hist, upd_hist,
                           eps=float(np.sqrt(max(0.0, 1 - stack.omega ** 2))), n_star=n_star, message=msg)
    sol.diagnostics["mode_residuals"] = [float(v) for v in per_mode]
    if red.centroid:
        sol.diagnostics["unfolding_sigma"] = sigma
    _tag(sol)
    return sol


def mode_residuals_cfg(stack, model, cfg):
    R = residual_channels(stack, model, cfg)
    n1 = stack.n_max + 1
    ra, rb = R[:n1], np.vstack([np.zeros(stack.grid.n_points), R[n1:]])
    return np.sqrt(integrate(stack.grid, ra ** 2 + rb ** 2))


def _tag(sol: BreatherSolution):
    """Attach alpha, period and (H1)-(H3) diagnostics."""
    st = sol.stack
    if not np.any(st.a) and not np.any(st.b):
        sol.alpha = 0.0
        sol.diagnostics.update(period=sol.period, h3_ratio=0.0, h3_ok=False)
        return
    alpha = measured_alpha(st)
    sol.alpha = alpha
    r = h3_ratio(st, alpha)
    sol.diagnostics.update(period=sol.period, alpha=alpha, h3_ratio=r, h3_ok=bool(r >= H3_FLOOR),
                           boundary_max=float(max(np.max(np.abs(st.a[:, [1, -2]])),
                                                  np.max(np.abs(st.b[:, [1, -2]])))))


def rescale_seed(prev: ModeStack, params: BreatherParams, grid: Grid) -> ModeStack:
    """Previous solution stretched to amplitude eps: mode n scaled by (eps'/eps)^max(n,1)."""
    eps_prev = np.sqrt(1 - prev.omega ** 2)
    r = params.eps / eps_prev
    st = ModeStack.zeros(grid, params.omega, prev.n_max)
    xs = grid.x * r          # point in the old grid that maps to x
    for n in range(prev.n_max + 1):
        fac = r ** max(n, 1)
        st.a[n] = fac * np.interp(xs, prev.grid.x, prev.a[n], left=0.0, right=0.0)
        st.b[n] = fac * np.interp(xs, prev.grid.x, prev.b[n], left=0.0, right=0.0)
    st.a[:, [0, -1]] = 0.0
    st.b[:, [0, -1]] = 0.0
    return st


def continue_family(model: ModelSpec, eps_list, cfg: NewtonConfig | None = None, n_max: int = 8,
                    grid_factory=None) -> list[BreatherSolution]:
    """Solve along decreasing eps, each solve seeded by the rescaled previous one."""
    cfg = cfg or NewtonConfig()
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    grid_factory = grid_factory or (lambda e: Grid.for_amplitude(e, h=0.1))
    out: list[BreatherSolution] = []
    prev = None
    for eps in eps_list:
        params = BreatherParams.from_eps(eps)
        grid = grid_factory(eps)
        try:
            st = seed(params, grid, n_max) if prev is None else rescale_seed(prev.stack, params, grid)
            sol = newton_solve(st, model, cfg)
        except (GaugeError, DomainTooSmallError, np.linalg.LinAlgError) as exc:
            zero = ModeStack.zeros(grid, params.omega, n_max)
            sol = BreatherSolution(zero, params.omega, model.name, float("nan"), 0, False,
                                   eps=eps, message=f"{type(exc).__name__}: {exc}")
        sol.eps = eps
        out.append(sol)
        log.info("eps=%.4g converged=%s residual=%.3e alpha=%.4g", eps, sol.converged,
                 sol.residual_norm, sol.alpha)
        if sol.converged:
            prev = sol
    return out


# -- persistence --------------------------------------------------------------

def save_solution(sol: BreatherSolution, directory) -> Path:
    """Write metadata.json and modes.csv (columns n, x, a, b) into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    meta = {
        "model": sol.model_name, "omega": sol.omega, "eps": sol.eps, "alpha": sol.alpha,
        "period": sol.period, "n_star": sol.n_star, "residual_norm": sol.residual_norm,
        "newton_iterations": sol.newton_iterations, "converged": sol.converged,
        "residual_history": sol.residual_history, "update_history": sol.update_history,
        "message": sol.message, "grid": sol.grid.to_dict(), "n_max": sol.stack.n_max,
        "diagnostics": sol.diagnostics,
    }
    (d / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=float))
    st = sol.stack
    x = st.grid.x
    with open(d / "modes.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "x", "a", "b"])
        for n in range(st.n_max + 1):
            for xi, ai, bi in zip(x, st.a[n], st.b[n]):
                w.writerow([n, format(xi, ".17g"), format(ai, ".17g"), format(bi, ".17g")])
    return d


def load_solution(directory) -> BreatherSolution:
    d = Path(directory)
    meta = json.loads((d / "metadata.json").read_text())
    grid = Grid(**meta["grid"])
    n_max = int(meta["n_max"])
    data = np.loadtxt(d / "modes.csv", delimiter=",", skiprows=1, ndmin=2)
    N = grid.n_points
    if data.shape[0] != (n_max + 1) * N:
        raise ValueError(f"modes.csv has {data.shape[0]} rows, expected {(n_max + 1) * N}")
    a = data[:, 2].reshape(n_max + 1, N)
    b = data[:, 3].reshape(n_max + 1, N)
    stack = ModeStack(grid, float(meta["omega"]), a, b)
    return BreatherSolution(stack, float(meta["omega"]), meta["model"], float(meta["residual_norm"]),
                            int(meta["newton_iterations"]), bool(meta["converged"]),
                            list(meta["residual_history"]), list(meta["update_history"]),
                            eps=float(meta["eps"]), alpha=float(meta["alpha"]), n_star=int(meta["n_star"]),
                            diagnostics=dict(meta["diagnostics"]), message=meta["message"])


def boundary_sensitivity(model: ModelSpec, eps: float, cfg: NewtonConfig | None = None,
                         half_lengths=None, h: float = 0.1, n_max: int = 8) -> list[dict]:
    """Solve at several domain sizes and both boundary closures; report how the
    oscillatory-mode content and alpha move with L."""
    cfg = cfg or NewtonConfig()
    params = BreatherParams.from_eps(eps)
    half_lengths = half_lengths or [30 / eps, 40 / eps]
    rows = []
    for boundary in ("dirichlet", "sponge"):
        c = NewtonConfig.from_dict({**cfg.to_dict(), "boundary": boundary})
        for L in half_lengths:
            n = int(np.ceil(2 * L / h)) + 1
            grid = Grid(float(L), n + (n % 2 == 0))
            sol = newton_solve(seed(params, grid, n_max), model, c)
            osc = [n for n in range(n_max + 1) if (n * params.omega) ** 2 > 1]
            tail = max((float(np.max(np.abs(sol.stack.a[k]))) for k in osc), default=0.0)
            rows.append({"boundary": boundary, "L": float(L), "converged": sol.converged,
                         "residual": sol.residual_norm, "alpha": sol.alpha, "oscillatory_sup": tail})
    return rows
