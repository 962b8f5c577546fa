"""Soliton-profile extraction from the dominant harmonic and period asymptotics.

All extraction happens in rescaled units: y = alpha x and (a, b) = dominant
harmonic / alpha.  A profile is (cos theta, sin theta) sqrt(lam) Q(sqrt(lam)(y - r)).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .model import Q_profile
from .modes import AmbiguousDominanceError, dominant_index, synthesize_trajectory
from .grid import integrate

Q_MASS = 32.0            # int Q^2
Q_GRAD = 32.0 / 3.0      # int Q'^2
Q_PEAK = 4.0


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class ExtractConfig:
    min_height: float = 0.1
    max_J: int = 8
    fit_refine: bool = True

    def __post_init__(self):
        if not 0 < self.min_height < 1:
            raise ValueError("min_height must lie in (0, 1)")
        if self.max_J < 0:
            raise ValueError("max_J must be non-negative")


@dataclass(frozen=True)
class SolitonProfile:
    r: float
    theta: float
    height: float        # sqrt(lambda_hat); peak value is 4 * height


@dataclass
class DecompositionReport:
    lambda_hat: float
    profiles: list = field(default_factory=list)
    residual_H1: float = 0.0
    residual_L2: float = 0.0
    separations: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    theorem_ii_value: float = float("nan")
    overcrowded: bool = False
    removed_norms: list = field(default_factory=list)

    @property
    def J(self) -> int:
        return len(self.profiles)

    @property
    def min_separation(self) -> float:
        if self.J < 2:
            return float("inf")
        s = self.separations + np.diag(np.full(self.J, np.inf))
        return float(s.min())

    def to_dict(self) -> dict:
        return {"lambda_hat": self.lambda_hat, "J": self.J,
                "profiles": [asdict(p) for p in self.profiles],
                "residual_H1": self.residual_H1, "residual_L2": self.residual_L2,
                "separations": np.asarray(self.separations).tolist(),
                "min_separation": self.min_separation if self.J >= 2 else None,
                "theorem_ii_value": self.theorem_ii_value, "overcrowded": self.overcrowded}


def profile_pair(y, lam: float, r: float, theta: float):
    sl = math.sqrt(lam)
    q = sl * Q_profile(sl * (np.asarray(y) - r))
    return math.cos(theta) * q, math.sin(theta) * q


def _h1_sq(y, a, b) -> float:
    dy = y[1] - y[0]
    da = np.gradient(a, dy, edge_order=2)
    db = np.gradient(b, dy, edge_order=2)
    f = a ** 2 + b ** 2 + da ** 2 + db ** 2
    return float(dy * (f.sum() - 0.5 * (f[0] + f[-1])))


def _l2_sq(y, a, b) -> float:
    dy = y[1] - y[0]
    f = a ** 2 + b ** 2
    return float(dy * (f.sum() - 0.5 * (f[0] + f[-1])))


def profile_norm_sq(lam: float) -> float:
    """Squared H1 norm of one profile: sqrt(lam) int Q^2 + lam^(3/2) int Q'^2."""
    return math.sqrt(lam) * Q_MASS + lam ** 1.5 * Q_GRAD


def _refine(y, a, b, lam, r0, th0):
    sl = math.sqrt(lam)
    win = np.abs(y - r0) <= 10.0 / sl
    yw, aw, bw = y[win], a[win], b[win]
    dy = y[1] - y[0]

    def res(p):
        pa, pb = profile_pair(yw, lam, p[0], p[1])
        return np.concatenate([aw - pa, bw - pb])

    sol = least_squares(res, x0=[r0, th0], x_scale=[dy, 1e-2], xtol=1e-14, ftol=1e-14, gtol=1e-14)
    return float(sol.x[0]), float(sol.x[1])


def greedy_extract(y, a_star, b_star, lambda_hat: float,
                   cfg: ExtractConfig | None = None) -> DecompositionReport:
    """Peel off modulated Q profiles, largest first, until the peak drops below threshold."""
    cfg = cfg or ExtractConfig()
    if not lambda_hat > 0:
        raise ValueError("lambda_hat must be positive")
    y = np.asarray(y, dtype=float)
    a = np.array(a_star, dtype=float, copy=True)
    b = np.array(b_star, dtype=float, copy=True)
    if a.shape != y.shape or b.shape != y.shape:
        raise ValueError("a_star, b_star and y must share one grid")
    threshold = cfg.min_height * math.sqrt(lambda_hat) * Q_PEAK
    profiles, removed = [], []
    overcrowded = False
    while True:
        amp = np.hypot(a, b)
        m = int(np.argmax(amp))
        if amp[m] < threshold:
            break
        if len(profiles) >= cfg.max_J:
            overcrowded = True
            break
        r, th = float(y[m]), math.atan2(b[m], a[m])
        if cfg.fit_refine:
            r, th = _refine(y, a, b, lambda_hat, r, th)
        th %= 2 * math.pi
        if th >= 2 * math.pi:      # -tiny wraps to exactly 2 pi in floating point
            th = 0.0
        before = _h1_sq(y, a, b)
        pa, pb = profile_pair(y, lambda_hat, r, th)
        a -= pa
        b -= pb
        removed.append(before - _h1_sq(y, a, b))
        profiles.append(SolitonProfile(r, th, math.sqrt(lambda_hat)))
    order = sorted(range(len(profiles)), key=lambda i: abs(profiles[i].r))
    profiles = [profiles[i] for i in order]
    rs = np.array([p.r for p in profiles])
    sep = np.abs(rs[:, None] - rs[None, :])
    return DecompositionReport(float(lambda_hat), profiles, math.sqrt(max(_h1_sq(y, a, b), 0.0)),
                               math.sqrt(_l2_sq(y, a, b)), sep, overcrowded=overcrowded,
                               removed_norms=removed)


def rescaled_dominant(solution, n_star: int | None = None):
    """(y, a_star, b_star, n_star) of a solution in v = phi / alpha, y = alpha x units."""
    st = solution.stack
    n_star = dominant_index(st) if n_star is None else n_star
    alpha = solution.alpha
    return alpha * st.grid.x, st.a[n_star] / alpha, st.b[n_star] / alpha, n_star


def decompose_solution(solution, lambda_hat: float | None = None,
                       cfg: ExtractConfig | None = None) -> DecompositionReport:
    """Extract profiles from a solution's dominant mode; lambda defaults to eps^2/alpha^2."""
    st = solution.stack
    if not (np.any(st.a) or np.any(st.b)) or not solution.alpha > 0:
        return DecompositionReport(float(lambda_hat or 0.0))
    y, a, b, _ = rescaled_dominant(solution)
    if lambda_hat is None:
        eps = math.sqrt(1 - solution.omega ** 2)
        lambda_hat = eps ** 2 / solution.alpha ** 2
    rep = greedy_extract(y, a, b, lambda_hat, cfg)
    rep.theorem_ii_value = theorem_ii_check(solution, rep)
    return rep


def theorem_ii_check(solution, report: DecompositionReport, M: int = 64) -> float:
    """eps^-1 sup_t int |phi - sum eps Q(eps x - r_j) cos(w t - theta_j)|^2 dx.

    Centres found in y = alpha x are mapped to the eps x scale as eps r_j / alpha.
    """
    st = solution.stack
    g = st.grid
    w = st.omega
    eps = math.sqrt(1 - w ** 2)
    traj = synthesize_trajectory(st, M)
    phi, _ = traj.periodic_samples()
    if not np.any(phi) and report.J == 0:
        return 0.0
    t = traj.times[:M]
    approx = np.zeros_like(phi)
    for p in report.profiles:
        centre = eps * p.r / solution.alpha
        prof = eps * Q_profile(eps * g.x - centre)
        approx += np.cos(w * t - p.theta)[:, None] * prof[None, :]
    return float(np.max(integrate(g, (phi - approx) ** 2)) / eps)


# -- period asymptotics --------------------------------------------------------

@dataclass
class PeriodAsymptoticsReport:
    alpha_sq: np.ndarray
    period_excess: np.ndarray        # T / (2 pi n*) - 1
    lambda_member: np.ndarray        # 2 (T/(2 pi n*) - 1) / alpha^2
    eps_ratio: np.ndarray            # eps^2 / alpha^2
    tl_ratio: np.ndarray             # (1 - (2 pi n*)^2 / T^2) / alpha^2
    lambda_hat: float
    lambda_quadratic: float          # slope of the fit with an alpha^4 correction
    positive: bool

    def rows(self) -> list[dict]:
        return [{"alpha_sq": float(a), "period_excess": float(p), "lambda_member": float(l),
                 "eps_sq_over_alpha_sq": float(e), "tl_ratio": float(t)}
                for a, p, l, e, t in zip(self.alpha_sq, self.period_excess, self.lambda_member,
                                         self.eps_ratio, self.tl_ratio)]

    def consistency(self) -> np.ndarray:
        """Relative gap between the period route and eps^2/alpha^2 per member."""
        return np.abs(self.lambda_member - self.eps_ratio) / np.abs(self.eps_ratio)

    def to_dict(self) -> dict:
        return {"lambda_hat": self.lambda_hat, "lambda_quadratic": self.lambda_quadratic,
                "positive": self.positive, "rows": self.rows(),
                "consistency": self.consistency().tolist()}


def fit_lambda_arrays(alpha, period, n_star=1, eps=None) -> PeriodAsymptoticsReport:
    alpha = np.asarray(alpha, dtype=float)
    period = np.asarray(period, dtype=float)
    if alpha.size < 3:
        raise InsufficientDataError("need at least three family members")
    n_star = np.broadcast_to(np.asarray(n_star, dtype=float), alpha.shape)
    T0 = 2 * np.pi * n_star
    excess = period / T0 - 1
    x = alpha ** 2 / 2
    lam = float(np.dot(x, excess) / np.dot(x, x))
    A = np.column_stack([x, x ** 2])
    lam2 = float(np.linalg.lstsq(A, excess, rcond=None)[0][0])
    if eps is None:
        eps = np.sqrt(1 - (T0 / period) ** 2)
    eps = np.asarray(eps, dtype=float)
    return PeriodAsymptoticsReport(alpha ** 2, excess, 2 * excess / alpha ** 2, eps ** 2 / alpha ** 2,
                                   (1 - (T0 / period) ** 2) / alpha ** 2, lam, lam2, bool(lam > 0))


def fit_lambda(family) -> PeriodAsymptoticsReport:
    """Least-squares slope of T/(2 pi n*) - 1 against alpha^2/2 through the origin."""
    ok = [s for s in family if s.converged and s.alpha > 0]
    if len(ok) < 3:
        raise InsufficientDataError(f"need at least three converged members, got {len(ok)}")
    ok.sort(key=lambda s: -s.alpha)
    n_star = []
    for s in ok:
        try:
            n_star.append(dominant_index(s.stack))
        except AmbiguousDominanceError:
            n_star.append(s.n_star)
    return fit_lambda_arrays([s.alpha for s in ok], [s.period for s in ok], n_star,
                             [math.sqrt(1 - s.omega ** 2) for s in ok])
