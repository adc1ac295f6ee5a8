"""Explicit constants and a priori estimates.

All suprema are lattice estimates over ``[0,1] x [0,T]`` and a box
``|u|_inf <= M``; every report records the lattice it was taken on.
Radii in the growth certificates reach far beyond double range, so bounds
of the form ``exp(R)/sqrt(n)`` are carried as ``R`` (log space) and only
exponentiated for display.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import exprlang as el
from .characteristics import separation_width, speed_extrema
from .problem import HyperbolicProblem

E_E_PLUS_1 = math.e ** math.e + 1.0
DEFAULT_RADII = (10.0, 1e3, 1e6, 1e9)
STABLE_RATIO = 1.0 + 1e-3


class MajorantError(ValueError):
    """A growth majorant is too small for log log to be defined."""


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _logsumexp(*terms: float) -> float:
    terms = [t for t in terms if t != -math.inf]
    if not terms:
        return -math.inf
    m = max(terms)
    return m + math.log(sum(math.exp(t - m) for t in terms))


# ---------------------------------------------------------------------------
# Sampling lattices


def _xt_lattice(T, density):
    xs = np.linspace(0.0, 1.0, density)
    ts = np.linspace(0.0, T, density)
    X, Tt = np.meshgrid(xs, ts, indexing="ij")
    return X.reshape(-1), Tt.reshape(-1)


def _box_samples(n, M, u_axis=7, n_random=200, seed=0):
    """Points of the box |y|_inf <= M: per-axis lattice plus seeded random points."""
    pts = []
    if u_axis ** n <= 4096:
        axis = np.linspace(-1.0, 1.0, u_axis)
        grid = np.stack(np.meshgrid(*([axis] * n), indexing="ij")).reshape(n, -1)
        pts.append(grid)
    rng = np.random.default_rng(seed)
    pts.append(rng.uniform(-1.0, 1.0, size=(n, n_random)))
    return M * np.concatenate(pts, axis=1)


@dataclass
class LipschitzEstimate:
    L_f: float
    L_h: float
    M: float
    method: str = "sampled"
    lam_max: float = 1.0
    lam_inv_max: float = 1.0
    dlam_dx_max: float = 0.0
    lattice: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)


def _row_sum_max(p, X, Tt, Y, kind):
    """max over points and rows of sum_j |d g_i / d y_j| (g = f or h)."""
    n = p.n
    best = 0.0
    for i in range(n):
        row = 0.0
        for j in range(n):
            if kind == "f":
                d = p.df_du_ij(i, j, X[:, None], Tt[:, None], Y[:, None, :])
            else:
                d = p.dh_dv_ij(i, j, Tt[:, None], Y[:, None, :])
            row = row + np.abs(d)
        best = max(best, float(np.max(row)))
    return best


def estimate_lipschitz(p: HyperbolicProblem, M: float, T: float, *, density: int = 21,
                       u_axis: int = 7, n_random: int = 200, seed: int = 0,
                       speed_lattice: int = 101) -> LipschitzEstimate:
    """Row-sum Lipschitz constants of f in u and h in v on |y|_inf <= M."""
    if not M > 0:
        raise ValueError(f"M must be positive, got {M}")
    X, Tt = _xt_lattice(T, density)
    Y = _box_samples(p.n, M, u_axis, n_random, seed)
    L_f = _row_sum_max(p, X, Tt, Y, "f")
    ts = np.linspace(0.0, T, density)
    L_h = _row_sum_max(p, np.zeros_like(ts), ts, Y, "h")
    lam_max, lam_min, dlam = speed_extrema(p, T, speed_lattice)
    return LipschitzEstimate(
        L_f, L_h, float(M), "sampled", lam_max, 1.0 / lam_min, dlam,
        {"density": density, "u_axis": u_axis, "n_random": n_random, "seed": seed,
         "speed_lattice": speed_lattice})


# ---------------------------------------------------------------------------
# Data maxima, Phi and Psi


@dataclass
class DataMaxima:
    """Lattice maxima entering Phi and Psi."""

    T: float
    M: float
    phi_max: float
    f0_max: float
    h0_max: float
    dphi_max: float
    dfdx_max: float
    f_max: float
    dhdt_max: float
    lam_max: float
    lam_inv_max: float

    @property
    def Phi(self) -> float:
        return self.phi_max + self.T * self.f0_max + self.h0_max

    @property
    def Psi(self) -> float:
        return (self.dphi_max + self.T * self.dfdx_max
                + self.lam_inv_max * self.f_max + self.lam_inv_max * self.dhdt_max)


def compute_phi(p: HyperbolicProblem, T: float, density: int = 101) -> float:
    xs = np.linspace(0.0, 1.0, 1001)
    X, Tt = _xt_lattice(T, density)
    ts = np.linspace(0.0, T, density)
    zero = np.zeros(p.n)
    phi = max(float(np.max(np.abs(p.phi_i(i, xs)))) for i in range(p.n))
    f0 = max(float(np.max(np.abs(p.f_i(i, X, Tt, zero)))) for i in range(p.n))
    h0 = max(float(np.max(np.abs(p.h_i(i, ts, zero)))) for i in range(p.n))
    return phi + T * f0 + h0


def default_range(p: HyperbolicProblem, T: float) -> float:
    """Range M used when none is given: 4 n max(Phi, 1)."""
    return 4.0 * p.n * max(compute_phi(p, T), 1.0)


def compute_maxima(p: HyperbolicProblem, T: float, M: float, *, density: int = 21,
                   u_axis: int = 7, n_random: int = 200, seed: int = 0) -> DataMaxima:
    xs = np.linspace(0.0, 1.0, 1001)
    X, Tt = _xt_lattice(T, density)
    ts = np.linspace(0.0, T, density)
    zero = np.zeros(p.n)
    Y = _box_samples(p.n, M, u_axis, n_random, seed)
    Xb, Tb, Yb = X[:, None], Tt[:, None], Y[:, None, :]
    n = p.n
    phi_max = max(float(np.max(np.abs(p.phi_i(i, xs)))) for i in range(n))
    dphi_max = max(float(np.max(np.abs(p.dphi_i(i, xs)))) for i in range(n))
    f0 = max(float(np.max(np.abs(p.f_i(i, X, Tt, zero)))) for i in range(n))
    h0 = max(float(np.max(np.abs(p.h_i(i, ts, zero)))) for i in range(n))
    dfdx = max(float(np.max(np.abs(p.df_dx_i(i, Xb, Tb, Yb)))) for i in range(n))
    fmax = max(float(np.max(np.abs(p.f_i(i, Xb, Tb, Yb)))) for i in range(n))
    dhdt = max(float(np.max(np.abs(p.dh_dt_i(i, ts[:, None], Yb)))) for i in range(n))
    lam_max, lam_min, _ = speed_extrema(p, T)
    return DataMaxima(T, M, phi_max, f0, h0, dphi_max, dfdx, fmax, dhdt,
                      lam_max, 1.0 / lam_min)


def compute_phi_psi(p: HyperbolicProblem, T: float, M: float, **kw) -> tuple[float, float]:
    m = compute_maxima(p, T, M, **kw)
    return m.Phi, m.Psi


# ---------------------------------------------------------------------------
# A priori bounds


@dataclass
class AprioriReport:
    n: int
    T: float
    Phi: float
    Psi: float
    q0: float
    q1: float
    theta0: float
    theta1: float
    theta_sep: float
    slabs0: int
    slabs1: int
    local_bound: float
    log_global_u: float
    log_global_dx: float
    global_u: float
    global_dx: float
    dt_bound: float
    f_max: float
    lam_max: float
    lam_inv_max: float
    L_f: float
    L_h: float
    M: float

    def as_dict(self):
        return asdict(self)


def _slab_count(T, theta, theta_sep):
    eff = min(theta, theta_sep)
    return max(1, math.ceil(T / eff * (1 - 1e-12)))


def apriori_bounds(p: HyperbolicProblem, lip: LipschitzEstimate, T: float,
                   maxima: Optional[DataMaxima] = None,
                   theta_sep: Optional[float] = None) -> AprioriReport:
    """Local/global sup bounds for u, u_x and u_t from the contraction constants.

    The exponent counts slabs of width min(1/(2q), separation width); both
    conditions are needed for a slab to carry the local estimate.
    """
    from .solver import contraction_q, theta_from_q

    n = p.n
    if maxima is None:
        maxima = compute_maxima(p, T, lip.M)
    if theta_sep is None:
        theta_sep = separation_width(p, T)
    q0 = contraction_q(n, lip, "value")
    q1 = contraction_q(n, lip, "derivative")
    th0, th1 = theta_from_q(q0), theta_from_q(q1)
    s0 = _slab_count(T, th0, theta_sep)
    s1 = _slab_count(T, th1, theta_sep)
    Phi, Psi = maxima.Phi, maxima.Psi
    base_dx = 3.0 + 2.0 * n * lip.L_h * lip.lam_max * lip.lam_inv_max
    log_u = s0 * math.log(3.0 + 2.0 * n * lip.L_h) + _log(Phi)
    log_dx = s1 * math.log(base_dx) + _log(Psi)
    g_u, g_dx = _safe_exp(log_u), _safe_exp(log_dx)
    return AprioriReport(
        n, T, Phi, Psi, q0, q1, th0, th1, theta_sep, s0, s1,
        2.0 * (1.0 + n * lip.L_h) * Phi, log_u, log_dx, g_u, g_dx,
        maxima.f_max + lip.lam_max * g_dx, maxima.f_max, lip.lam_max,
        lip.lam_inv_max, lip.L_f, lip.L_h, lip.M)


# ---------------------------------------------------------------------------
# Radius inequalities


def log_S(R: float, sigma: float, delta: float) -> float:
    """log(sigma (1 + e^R)^delta)."""
    return math.log(sigma) + delta * float(np.logaddexp(0.0, R))


def loglog_S(R: float, sigma: float, delta: float) -> float:
    ls = log_S(R, sigma, delta)
    return math.log(ls) if ls > 0 else -math.inf


def radius_inequality_gap(log_phi: float, R: float, n: int, sigma: float, delta: float) -> float:
    """RHS - LHS (in logs) of Phi[(1+delta)log(2 sigma) + delta R] <= e^R/sqrt(n)."""
    bracket = (1.0 + delta) * math.log(2.0 * sigma) + delta * R
    rhs = R - 0.5 * math.log(n)
    if bracket <= 0:
        return math.inf
    return rhs - (log_phi + math.log(bracket))


def _smallest_radius(log_phi, n, sigma, delta, tol=1e-6):
    holds = lambda R: radius_inequality_gap(log_phi, R, n, sigma, delta) >= 0
    if holds(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while not holds(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise OverflowError("radius inequality has no solution in double range")
    while hi - lo > tol * max(1.0, 1e-12 * hi):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:  # float spacing exceeds tol at huge radii
            break
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return hi


def floor_radius(check: Callable[[float], bool], start: float = 2.0 ** -4,
                 limit: float = 1e300) -> Optional[float]:
    """Smallest R (on a doubling scan refined by bisection) with check at R, 2R, 4R."""
    ok3 = lambda R: check(R) and check(2 * R) and check(4 * R)
    prev, R = 0.0, start
    while R <= limit:
        if ok3(R):
            lo, hi = prev, R
            for _ in range(200):
                if hi - lo <= 1e-9 * max(1.0, hi):
                    break
                mid = 0.5 * (lo + hi)
                if not lo < mid < hi:
                    break
                if ok3(mid):
                    hi = mid
                else:
                    lo = mid
            return hi
        prev, R = R, 2.0 * R
    return None


@dataclass
class RadiusSolution:
    R_star: float          # smallest R of the closed-form inequality
    R0: Optional[float]    # majorization floor (None: not applied / none exists)
    R: float
    n: int
    subhorizons: int = 1

    @property
    def log_bound(self) -> float:
        return self.R - 0.5 * math.log(self.n)

    @property
    def bound(self) -> float:
        return _safe_exp(self.log_bound)

    def as_dict(self):
        return {"R_star": self.R_star, "R0": self.R0, "R": self.R,
                "subhorizons": self.subhorizons, "log_bound": self.log_bound,
                "bound": self.bound if math.isfinite(self.bound) else None}


def solve_R(phi: float, n: int, sigma: float, delta: float, *,
            R0: Optional[float] = None, log_phi: Optional[float] = None) -> RadiusSolution:
    """Smallest R with Phi[(1+delta)log(2 sigma)+delta R] <= e^R/sqrt(n), raised to R0."""
    if log_phi is None:
        if not phi > 0:
            raise ValueError("Phi must be positive")
        log_phi = math.log(phi)
    if sigma <= 0 or delta < 1 or n < 1:
        raise ValueError("need sigma > 0, delta >= 1, n >= 1")
    r = _smallest_radius(log_phi, n, sigma, delta)
    return RadiusSolution(r, R0, max(r, R0) if R0 is not None else r, n)


solve_Q = solve_R


# ---------------------------------------------------------------------------
# Growth model: constants as functions of log log S


THM1 = "THM1_LIPSCHITZ"
THM3 = "THM3_QUARTER_LOGLOG"
REMARK2 = "REMARK2_LOGLOG_F_LIPSCHITZ_H"
UNCERTIFIED = "UNCERTIFIED"


@dataclass
class GrowthModel:
    """Effective L_f, L_h at radius R for a certified growth class."""

    cls: str
    n: int
    sigma: float
    delta: float
    C_f: float
    C_h: float
    L_h_const: float = 0.0
    lam_max: float = 1.0
    lam_inv_max: float = 1.0
    dlam_dx_max: float = 0.0
    theta_sep: float = math.inf

    def constants(self, LL: float):
        if self.cls == THM3:
            q = LL ** 0.25
            return self.C_f * q, self.C_h * q
        if self.cls == REMARK2:
            return self.C_f * LL, self.L_h_const
        raise ValueError(f"no radius model for {self.cls}")

    def log_growth(self, R: float, T: float, which: str = "value") -> float:
        """log of the amplification factor in the global estimate at radius R."""
        LL = loglog_S(R, self.sigma, self.delta)
        if not (LL > 0 and math.isfinite(LL)):
            return math.inf
        lf, lh = self.constants(LL)
        n = self.n
        if which == "value":
            q = n * lf * (1.0 + n * lh)
            base = 3.0 + 2.0 * n * lh
        else:
            ll = lh * self.lam_max * self.lam_inv_max
            q = (n * lf + self.dlam_dx_max) * (1.0 + n * ll)
            base = 3.0 + 2.0 * n * ll
        theta = min(1.0 / (2.0 * q), self.theta_sep)
        return math.ceil(T / theta * (1 - 1e-12)) * math.log(base)

    def log_majorant(self, R: float) -> float:
        """log of the radius majorant the estimate is compared with (Phi cancels)."""
        LL = loglog_S(R, self.sigma, self.delta)
        if not (LL > 0 and math.isfinite(LL)):
            return -math.inf
        if self.cls == THM3:
            return 0.5 * math.sqrt(LL) * math.log(LL)
        return LL

    def check(self, T: float, which: str = "value") -> Callable[[float], bool]:
        return lambda R: self.log_growth(R, T, which) <= self.log_majorant(R)


def chained_radius(model: GrowthModel, T: float, log_first: float,
                   log_fixed: Callable[[float], float], which: str = "value",
                   max_doublings: int = 12, extra: int = 3) -> RadiusSolution:
    """Radius bound over [0, T], splitting into sub-horizons when needed.

    On a sub-horizon of length T0 the radius solves the closed-form
    inequality with the floor R0(T0); the resulting bound exp(R)/sqrt(n)
    becomes the initial-data term of the next sub-horizon.  ``log_fixed(T0)``
    returns the log of the remaining (non-initial) terms of Phi or Psi.
    One sub-horizon is tried first; the smallest final radius wins.
    """
    n = model.n
    best = None
    found_at = None
    for d in range(max_doublings + 1):
        m = 2 ** d
        T0 = T / m
        R0 = floor_radius(model.check(T0, which))
        if R0 is None:
            continue
        log_init = log_first
        r = None
        for _ in range(m):
            log_phi = _logsumexp(log_init, log_fixed(T0))
            sol = solve_R(1.0, n, model.sigma, model.delta, R0=R0, log_phi=log_phi)
            r = sol
            log_init = sol.R - 0.5 * math.log(n)
        r.subhorizons = m
        if best is None or r.R < best.R:
            best = r
        if found_at is None:
            found_at = d
        if d - found_at >= extra:
            break
    if best is None:
        raise OverflowError("no sub-horizon split admits a finite radius floor")
    return best


# ---------------------------------------------------------------------------
# Certificates


@dataclass
class GrowthCertificate:
    cls: str
    C_f: float
    C_h: float
    sigma: float
    delta: float
    radii: list
    probes: list
    notes: str
    T: float
    n: int
    Phi: float = math.nan
    Psi: float = math.nan
    R: Optional[RadiusSolution] = None
    Q: Optional[RadiusSolution] = None
    P: Optional[float] = None
    L_h_const: Optional[float] = None

    @property
    def log_bound_u(self) -> float:
        return self.R.log_bound if self.R is not None else math.inf

    @property
    def log_bound_dx(self) -> float:
        return self.Q.log_bound if self.Q is not None else math.inf

    def as_dict(self):
        def fin(x):
            return x if (x is None or math.isfinite(x)) else None
        return {
            "class": self.cls, "C_f": self.C_f, "C_h": self.C_h,
            "sigma": self.sigma, "delta": self.delta, "T": self.T, "n": self.n,
            "radii": list(self.radii), "notes": self.notes,
            "Phi": fin(self.Phi), "Psi": fin(self.Psi), "P": self.P,
            "L_h": self.L_h_const,
            "R": self.R.as_dict() if self.R else None,
            "Q": self.Q.as_dict() if self.Q else None,
            "probes": self.probes,
        }


def _shell_points(n, r, n_dirs, seed):
    dirs = [np.eye(n), -np.eye(n), np.ones((1, n)) / math.sqrt(n)]
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(n_dirs, n))
    dirs.append(g / np.linalg.norm(g, axis=1, keepdims=True))
    return (r * np.concatenate(dirs, axis=0)).T  # (n, P)


def _grad_rownorm(p, kind, X, Tt, Y):
    """Per-point max row sum of the Jacobian, shape (points_xt, points_y)."""
    n = p.n
    out = None
    for i in range(n):
        row = 0.0
        for j in range(n):
            if kind == "f":
                d = p.df_du_ij(i, j, X[:, None], Tt[:, None], Y[:, None, :])
            else:
                d = p.dh_dv_ij(i, j, Tt[:, None], Y[:, None, :])
            row = row + np.abs(d)
        out = row if out is None else np.maximum(out, row)
    return out


def certify_growth(p: HyperbolicProblem, T: float, *, F: str, H: str, sigma: float,
                   delta: float, C_f: float, C_h: float,
                   radii: Sequence[float] = DEFAULT_RADII, density: int = 3,
                   n_dirs: int = 2000, seed: int = 0,
                   with_bounds: bool = True) -> GrowthCertificate:
    """Classify the nonlinearity growth by sampled falsification at probe radii.

    ``F`` is an expression in (x, t, r) and ``H`` in (t, r) majorizing the
    polynomials of the growth conditions, with r the Euclidean norm.
    """
    radii = sorted(float(r) for r in radii)
    F_fn = el.compile_expr(el.parse(F, ["x", "t", "r"]))
    H_fn = el.compile_expr(el.parse(H, ["t", "r"]))
    X, Tt = _xt_lattice(T, density)
    ts = np.linspace(0.0, T, density)
    probes = []
    gf_ball = gh_ball = 0.0
    ok3 = ok_r2 = True
    ball_f, ball_h = [], []
    for r in radii:
        Y = _shell_points(p.n, r, n_dirs, seed)
        gf = _grad_rownorm(p, "f", X, Tt, Y)
        gh = _grad_rownorm(p, "h", np.zeros_like(ts), ts, Y)
        Fv = np.broadcast_to(np.asarray(F_fn({"x": X, "t": Tt, "r": r}), float), X.shape)
        Hv = np.broadcast_to(np.asarray(H_fn({"t": ts, "r": r}), float), ts.shape)
        if np.any(Fv < math.e) or np.any(Hv < math.e):
            raise MajorantError(
                f"majorant below e at radius {r:g} (F min {Fv.min():.4g}, "
                f"H min {Hv.min():.4g}); log log is undefined there")
        llF = np.log(np.log(Fv))[:, None]
        llH = np.log(np.log(Hv))[:, None]
        r3_f = float(np.max(gf / (C_f * llF ** 0.25)))
        r3_h = float(np.max(gh / (C_h * llH ** 0.25)))
        r2_f = float(np.max(gf / (C_f * llF)))
        ok3 &= r3_f <= 1.0 and r3_h <= 1.0
        ok_r2 &= r2_f <= 1.0
        gf_ball = max(gf_ball, float(np.max(gf)))
        gh_ball = max(gh_ball, float(np.max(gh)))
        ball_f.append(gf_ball)
        ball_h.append(gh_ball)
        probes.append({"radius": r, "grad_f": float(np.max(gf)), "grad_h": float(np.max(gh)),
                       "ratio_quarter_f": r3_f, "ratio_quarter_h": r3_h,
                       "ratio_loglog_f": r2_f})

    def stable(seq):
        if len(seq) < 2:
            return False
        a, b = seq[-2], seq[-1]
        if not (math.isfinite(a) and math.isfinite(b)):
            return False
        return b <= STABLE_RATIO * a if a > 0 else b == 0

    st_f, st_h = stable(ball_f), stable(ball_h)
    if st_f and st_h:
        cls = THM1
    elif ok3:
        cls = THM3
    elif ok_r2 and st_h:
        cls = REMARK2
    else:
        cls = UNCERTIFIED
    notes = ("sampled falsification check at radii " + ", ".join(f"{r:g}" for r in radii)
             + f" over a {density}x{density} (x,t) lattice with {n_dirs} directions; "
             "not a proof")
    cert = GrowthCertificate(cls, C_f, C_h, sigma, delta, radii, probes, notes, T, p.n,
                             L_h_const=gh_ball if st_h else None)
    if with_bounds and cls != UNCERTIFIED:
        _attach_bounds(p, cert, gf_ball, gh_ball)
    return cert


def _log_maxima(p: HyperbolicProblem, T: float, log_M: float, density: int = 3,
                u_axis: int = 5, n_random: int = 20, seed: int = 0) -> dict:
    """Log-maxima of |df/dx|, |f|, |dh/dt| over |y|_inf <= e^log_M.

    Uses mpmath when the box exceeds double range.
    """
    if log_M < 600:
        m = compute_maxima(p, T, math.exp(log_M), density=density, u_axis=u_axis,
                           n_random=n_random, seed=seed)
        return {"dfdx": _log(m.dfdx_max), "f": _log(m.f_max), "dhdt": _log(m.dhdt_max)}
    import mpmath

    mpmath.mp.dps = 30
    M = mpmath.exp(log_M)
    unit = _box_samples(p.n, 1.0, u_axis, n_random, seed)
    X, Tt = _xt_lattice(T, density)
    ts = np.linspace(0.0, T, density)
    fu = [f"u{j + 1}" for j in range(p.n)]
    hv = [f"v{j + 1}" for j in range(p.n)]
    f_fns = [el.compile_expr(a, "mpmath") for a in p.f_ast]
    fx_fns = [el.compile_expr(el.differentiate(a, "x"), "mpmath") for a in p.f_ast]
    ht_fns = [el.compile_expr(el.differentiate(a, "t"), "mpmath") for a in p.h_ast]
    best = {"dfdx": mpmath.mpf(0), "f": mpmath.mpf(0), "dhdt": mpmath.mpf(0)}
    for col in unit.T:
        y = [M * mpmath.mpf(float(c)) for c in col]
        for x, t in zip(X, Tt):
            env = {"x": mpmath.mpf(float(x)), "t": mpmath.mpf(float(t))}
            env.update(zip(fu, y))
            for fn in f_fns:
                best["f"] = max(best["f"], abs(fn(env)))
            for fn in fx_fns:
                best["dfdx"] = max(best["dfdx"], abs(fn(env)))
        for t in ts:
            env = {"t": mpmath.mpf(float(t))}
            env.update(zip(hv, y))
            for fn in ht_fns:
                best["dhdt"] = max(best["dhdt"], abs(fn(env)))
    return {k: (float(mpmath.log(v)) if v > 0 else -math.inf) for k, v in best.items()}


def _attach_bounds(p: HyperbolicProblem, cert: GrowthCertificate, gf: float, gh: float):
    T, n = cert.T, p.n
    base = compute_maxima(p, T, 1.0)
    lam_max, lam_inv, dlam = base.lam_max, base.lam_inv_max, speed_extrema(p, T)[2]
    th_sep = separation_width(p, T)
    cert.Phi = base.Phi
    log_f0 = _log(base.f0_max)
    log_h0 = _log(base.h0_max)
    log_fixed_u = lambda T0: _logsumexp(_log(T0) + log_f0, log_h0)

    if cert.cls == THM1:
        lip = LipschitzEstimate(gf, gh, 1.0, "certificate", lam_max, lam_inv, dlam)
        rep = apriori_bounds(p, lip, T, base, th_sep)
        R = rep.log_global_u + 0.5 * math.log(n)
        cert.R = RadiusSolution(R, None, R, n)
        cert.P = R
        logM = math.log(n) + rep.log_global_u
        lm = _log_maxima(p, T, logM)
        log_psi = _logsumexp(_log(base.dphi_max), _log(T) + lm["dfdx"],
                             _log(lam_inv) + lm["f"], _log(lam_inv) + lm["dhdt"])
        base_dx = 3.0 + 2.0 * n * gh * lam_max * lam_inv
        Qv = rep.slabs1 * math.log(base_dx) + log_psi + 0.5 * math.log(n)
        cert.Q = RadiusSolution(Qv, None, Qv, n)
        cert.Psi = _safe_exp(log_psi)
        return

    model = GrowthModel(cert.cls, n, cert.sigma, cert.delta, cert.C_f, cert.C_h,
                        gh, lam_max, lam_inv, dlam, th_sep)
    cert.R = chained_radius(model, T, _log(base.phi_max), log_fixed_u, "value")
    cert.P = cert.R.R
    logM = cert.P - 0.5 * math.log(n)
    lm = _log_maxima(p, T, logM)
    log_fixed_dx = lambda T0: _logsumexp(_log(T0) + lm["dfdx"], _log(lam_inv) + lm["f"],
                                         _log(lam_inv) + lm["dhdt"])
    cert.Psi = _safe_exp(_logsumexp(_log(base.dphi_max), log_fixed_dx(T)))
    cert.Q = chained_radius(model, T, _log(base.dphi_max), log_fixed_dx, "derivative")


# ---------------------------------------------------------------------------
# Continuous dependence on the initial data


@dataclass
class DependenceReport:
    ratio: float
    constant: float
    slabs: int
    perturbation_sup: float
    difference_sup: float
    ok: bool

    def as_dict(self):
        return asdict(self)


def continuous_dependence_check(p: HyperbolicProblem, dphi: Sequence[str], nx: int,
                                T: float, lip: Optional[LipschitzEstimate] = None,
                                **solve_kw) -> DependenceReport:
    """Solve with phi and phi + dphi and compare to the difference-problem constant."""
    from .solver import solve

    X, Tt = _xt_lattice(T, 21)
    ts = np.linspace(0.0, T, 21)
    zero = np.zeros(p.n)
    f0 = max(float(np.max(np.abs(p.f_i(i, X, Tt, zero)))) for i in range(p.n))
    h0 = max(float(np.max(np.abs(p.h_i(i, ts, zero)))) for i in range(p.n))
    if f0 > 1e-12 or h0 > 1e-12:
        raise ValueError("continuous dependence needs f(x,t,0) = 0 and h(t,0) = 0 "
                         f"(sampled max |f(.,.,0)| = {f0:.3g}, |h(.,0)| = {h0:.3g})")
    q = p.with_phi([f"{a}+({b})" for a, b in zip(p.phi, dphi)])
    if lip is None:
        lip = estimate_lipschitz(p, default_range(p, T), T)
    base = solve(p, nx, T, lip, **solve_kw)
    pert = solve(q, nx, T, lip, **solve_kw)
    xs = np.linspace(0.0, 1.0, 1001)
    dsup = max(float(np.max(np.abs(q.phi_i(i, xs) - p.phi_i(i, xs)))) for i in range(p.n))
    diff = float(np.max(np.abs(base.u - pert.u)))
    from .solver import contraction_q, theta_from_q

    slabs = _slab_count(T, theta_from_q(contraction_q(p.n, lip)), separation_width(p, T))
    const = (3.0 + 2.0 * p.n * lip.L_h) ** slabs
    ratio = diff / dsup if dsup > 0 else 0.0
    return DependenceReport(ratio, const, slabs, dsup, diff, ratio <= const)
