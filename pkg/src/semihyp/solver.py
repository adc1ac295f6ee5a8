"""Slab-marching Picard solver for the integral form of the system.

On each time slab every grid node is traced back to the slab floor or to its
inflow face.  A node's value is the entry value (floor data, or the boundary
map evaluated on the current iterate's outflow traces) plus the trapezoid
integral of ``f_i`` along the trace.  Sweeps repeat until the sup-norm
increment falls under ``eps_fix * (1 + sup|u|)``.

The derivative pass solves the x-differentiated system for ``w = u_x`` the
same way, on slabs sized for that system, with the lateral entry value
``(f_i - grad_v h_i . v' - h_i,t) / lambda_i`` at the inflow face.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from . import bounds
from . import exprlang as el
from .characteristics import (EPS_EVT, SlabTraces, separation_width, speed_extrema,
                              trace_slab)
from .problem import HyperbolicProblem

EPS_FIX = 1e-10
MAX_ITER = 60
LEVELS_PER_SLAB = 16


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class RangeExceeded(SolverError):
    """The solution left the range on which the Lipschitz constants hold."""

    def __init__(self, message, t, peak):
        super().__init__(message)
        self.t = t
        self.peak = peak


# ---------------------------------------------------------------------------
# Slab plans


@dataclass
class SlabPlan:
    boundaries: np.ndarray
    theta: float
    theta_formula: float
    theta_sep: float
    user_cap: Optional[float]
    q: float
    provenance: str
    which: str
    max_iter: int = MAX_ITER

    @property
    def widths(self):
        return np.diff(self.boundaries)

    def as_dict(self):
        return {"which": self.which, "q": self.q, "theta": self.theta,
                "theta_formula": self.theta_formula, "theta_sep": self.theta_sep,
                "user_cap": self.user_cap, "provenance": self.provenance,
                "slabs": len(self.boundaries) - 1, "max_iter": self.max_iter,
                "boundaries": self.boundaries.tolist()}


def contraction_q(n: int, lip: "bounds.LipschitzEstimate", which: str = "value") -> float:
    if which == "value":
        return n * lip.L_f * (1.0 + n * lip.L_h)
    if which == "derivative":
        return ((n * lip.L_f + lip.dlam_dx_max)
                * (1.0 + n * lip.L_h * lip.lam_max * lip.lam_inv_max))
    raise ValueError(f"unknown pass {which!r}")


def theta_from_q(q: float) -> float:
    return math.inf if q == 0 else 1.0 / (2.0 * q)


def plan_slabs(p: HyperbolicProblem, lip: "bounds.LipschitzEstimate", T: float,
               which: str = "value", max_width: Optional[float] = None,
               theta_sep: Optional[float] = None, t0: float = 0.0) -> SlabPlan:
    q = contraction_q(p.n, lip, which)
    formula = theta_from_q(q)
    if theta_sep is None:
        theta_sep = separation_width(p, max(T, t0 + T))
    terms = [(formula, "theta0" if which == "value" else "theta1"),
             (theta_sep, "separation")]
    if max_width is not None:
        terms.append((max_width, "user"))
    theta, prov = min(terms, key=lambda tp: tp[0])
    span = T - t0
    if span <= theta:
        count = 1
        if span < theta:
            prov = "horizon"
    else:
        count = math.ceil(span / theta * (1 - 1e-12))
    bounds_ = t0 + span * np.arange(count + 1) / count
    bounds_[-1] = T
    return SlabPlan(bounds_, theta, formula, theta_sep, max_width, q, prov, which)


# ---------------------------------------------------------------------------
# Solution container


@dataclass
class SlabDiagnostics:
    index: int
    t0: float
    t1: float
    levels: int
    iterations: int
    increments: list
    provenance: str
    converged: bool

    @property
    def ratios(self):
        """Ratios of successive increments above round-off."""
        inc = self.increments
        out = []
        for a, b in zip(inc[:-1], inc[1:]):
            if a > 1e-13:
                out.append(b / a)
        return out

    @property
    def max_ratio(self):
        r = self.ratios
        return max(r) if r else 0.0

    def as_dict(self):
        return {"slab": self.index, "t0": self.t0, "t1": self.t1,
                "levels": self.levels, "iterations": self.iterations,
                "max_ratio": self.max_ratio, "provenance": self.provenance,
                "converged": self.converged}


@dataclass
class SolutionField:
    problem: HyperbolicProblem
    x: np.ndarray
    times: np.ndarray
    u: np.ndarray                  # (levels, n, nx+1)
    slab_of_level: np.ndarray
    plan: SlabPlan
    lip: "bounds.LipschitzEstimate"
    diagnostics: list = field(default_factory=list)
    dudx: Optional[np.ndarray] = None
    dudt: Optional[np.ndarray] = None
    derivative_plan: Optional[SlabPlan] = None
    derivative_diagnostics: list = field(default_factory=list)

    @property
    def nx(self):
        return len(self.x) - 1

    @property
    def T(self):
        return float(self.times[-1])

    def sup(self, which="u"):
        arr = getattr(self, which)
        return float(np.max(np.abs(arr)))

    def at(self, x, t, which="u"):
        """Bilinear interpolation of a stored array at points (x, t)."""
        arr = getattr(self, which)
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        lo = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2)
        dt = self.times[lo + 1] - self.times[lo]
        ft = np.clip((t - self.times[lo]) / dt, 0.0, 1.0)
        left, wx = _space_weights(x, self.nx)
        a = arr[lo, :, left] * (1 - wx)[..., None] + arr[lo, :, left + 1] * wx[..., None]
        b = arr[lo + 1, :, left] * (1 - wx)[..., None] + arr[lo + 1, :, left + 1] * wx[..., None]
        return np.moveaxis(a * (1 - ft)[..., None] + b * ft[..., None], -1, 0)


def _space_weights(x, nx):
    s = np.asarray(x, dtype=float) * nx
    left = np.clip(np.floor(s).astype(int), 0, nx - 1)
    return left, s - left


# ---------------------------------------------------------------------------
# Sample layout shared by both passes


class _Samples:
    """Flattened quadrature samples of one component's slab traces."""

    def __init__(self, tr: SlabTraces, nx: int, face_node: int, face_x: float):
        times = tr.times
        L = len(times) - 1
        nx1 = nx + 1
        self.L, self.nx1 = L, nx1
        self.n_anchor = L * nx1
        lv = np.arange(L + 1)
        el = tr.entry_level
        # valid interior samples: anchors l >= 1, entry_level <= m <= l
        mask = ((lv[None, :, None] >= el[:, None, :])
                & (lv[None, :, None] <= lv[:, None, None])
                & (lv[:, None, None] >= 1))
        l_idx, m_idx, j_idx = np.nonzero(mask)
        anchor = (l_idx - 1) * nx1 + j_idx
        t_e = tr.entry_time[l_idx, j_idx]
        lower = np.where(m_idx == el[l_idx, j_idx], t_e, times[np.maximum(m_idx - 1, 0)])
        upper = np.where(m_idx < l_idx, times[np.minimum(m_idx + 1, L)], times[m_idx])
        w = 0.5 * (times[m_idx] - lower) + 0.5 * (upper - times[m_idx])
        xs = tr.pos[l_idx, m_idx, j_idx]
        left, wx = _space_weights(xs, nx)

        face = tr.entry_face[1:].reshape(-1)
        lat = np.nonzero(face != 0)[0]
        bot = np.nonzero(face == 0)[0]
        la_l = lat // nx1 + 1
        la_j = lat % nx1
        m_e = tr.entry_level[la_l, la_j]
        te = tr.entry_time[la_l, la_j]
        lo_e = m_e - 1
        frac_e = (te - times[lo_e]) / (times[m_e] - times[lo_e])
        w_e = 0.5 * (times[m_e] - te)

        self.lat, self.bot = lat, bot
        self.lat_lo, self.lat_frac, self.lat_t = lo_e, frac_e, te
        self.bot_x = tr.pos[bot // nx1 + 1, 0, bot % nx1]

        n_lat = len(lat)
        self.anchor = np.concatenate([anchor, lat])
        self.lo = np.concatenate([m_idx, lo_e])
        self.frac = np.concatenate([np.zeros(len(m_idx)), frac_e])
        self.left = np.concatenate([left, np.full(n_lat, min(face_node, nx - 1))])
        self.wx = np.concatenate([wx, np.full(n_lat, 1.0 if face_node == nx else 0.0)])
        self.x = np.concatenate([xs, np.full(n_lat, face_x)])
        self.t = np.concatenate([times[m_idx], te])
        self.w = np.concatenate([w, np.full(n_lat, 1.0) * w_e])
        self.hi = np.minimum(self.lo + 1, L)
        # sparse bilinear interpolation from U laid out as (n, (L+1)*(nx+1))
        cols = np.concatenate([self.lo * nx1 + self.left, self.lo * nx1 + self.left + 1,
                               self.hi * nx1 + self.left, self.hi * nx1 + self.left + 1])
        vals = np.concatenate([(1 - self.frac) * (1 - self.wx), (1 - self.frac) * self.wx,
                               self.frac * (1 - self.wx), self.frac * self.wx])
        rows = np.tile(np.arange(len(self.lo)), 4)
        self.interp = sparse.csr_matrix((vals, (rows, cols)),
                                        shape=(len(self.lo), (L + 1) * nx1))

    def gather(self, U):
        """Bilinear values of all components of U (L+1, n, nx+1) at the samples."""
        flat = np.moveaxis(U, 1, 0).reshape(U.shape[1], -1)
        return (self.interp @ flat.T).T

    def integrate(self, g):
        return np.bincount(self.anchor, weights=self.w * g, minlength=self.n_anchor)


def _time_interp(series, lo, frac):
    """series: (L+1, ...) at levels; returns values at fractional times."""
    hi = np.minimum(lo + 1, series.shape[0] - 1)
    return series[lo] * (1 - frac)[(...,) + (None,) * (series.ndim - 1)] + \
        series[hi] * frac[(...,) + (None,) * (series.ndim - 1)]


def _interp_floor(values, x, nx):
    left, wx = _space_weights(x, nx)
    return values[left] * (1 - wx) + values[left + 1] * wx


def _two_stage(new, samples, accs, lateral, L, nx):
    """Recompute laterally entering nodes from the traces of ``new``.

    Applying the boundary map to the freshly integrated outflow traces is the
    composed operator whose contraction constant is q0 (or q1); a plain Jacobi
    sweep would lag the boundary coupling by one iteration.
    """
    for i, s in enumerate(samples):
        if len(s.lat):
            flat = new[1:, i, :].reshape(-1)
            flat[s.lat] = lateral(i, s, new) + accs[i][s.lat]
            new[1:, i, :] = flat.reshape(L, nx + 1)
    return new


def _picard(sweep, U, eps_fix, max_iter):
    increments = []
    for it in range(1, max_iter + 1):
        new = sweep(U)
        change = float(np.max(np.abs(new - U)))
        increments.append(change)
        U = new
        if not np.isfinite(change):
            return U, it, increments, False
        if change <= eps_fix * (1.0 + float(np.max(np.abs(U)))):
            return U, it, increments, True
    return U, max_iter, increments, False


# ---------------------------------------------------------------------------
# Value pass


def _build_samples(p, xgrid, times, eps_evt=EPS_EVT):
    nx = len(xgrid) - 1
    out = []
    for i in range(p.n):
        tr = trace_slab(p, i, xgrid, times, eps_evt)
        node = p.trace.inflow_node(i, nx)
        out.append(_Samples(tr, nx, node, p.trace.inflow(i)))
    return out


def picard_slab(p: HyperbolicProblem, xgrid: np.ndarray, times: np.ndarray,
                floor_values: np.ndarray, *, from_initial: bool = False,
                eps_fix: float = EPS_FIX, max_iter: int = MAX_ITER,
                initial: str = "extend", samples=None, eps_evt: float = EPS_EVT):
    """Fixed-point iteration of the integral system on one slab.

    Returns (U, iterations, increments, converged) with U of shape
    (L+1, n, nx+1), level 0 being ``floor_values``.
    """
    n, nx = p.n, len(xgrid) - 1
    L = len(times) - 1
    if samples is None:
        samples = _build_samples(p, xgrid, times, eps_evt)
    out_nodes = [p.trace.outflow_node(q, nx) for q in range(n)]

    bottom_base = []
    for i, s in enumerate(samples):
        if from_initial:
            bottom_base.append(p.phi_i(i, s.bot_x).astype(float))
        else:
            bottom_base.append(_interp_floor(floor_values[i], s.bot_x, nx))

    def lateral(i, s, V):
        vseries = np.stack([V[:, q, out_nodes[q]] for q in range(n)], axis=1)  # (L+1, n)
        return p.h_i(i, s.lat_t, _time_interp(vseries, s.lat_lo, s.lat_frac).T)

    def sweep(U):
        # Outflow traces in a separated slab come from floor data only, so the
        # boundary terms are refreshed from this sweep's traces (see _two_stage).
        new = np.empty_like(U)
        new[0] = floor_values
        accs = []
        for i, s in enumerate(samples):
            acc = s.integrate(p.f_i(i, s.x, s.t, s.gather(U)))
            base = np.empty(s.n_anchor)
            base[s.bot] = bottom_base[i]
            if len(s.lat):
                base[s.lat] = lateral(i, s, U)
            accs.append(acc)
            new[1:, i, :] = (base + acc).reshape(L, nx + 1)
        return _two_stage(new, samples, accs, lateral, L, nx)

    if initial == "extend":
        U0 = np.broadcast_to(floor_values, (L + 1,) + floor_values.shape).copy()
    elif initial == "zero":
        U0 = np.zeros((L + 1,) + floor_values.shape)
        U0[0] = floor_values
    else:
        raise ValueError(f"unknown initial iterate {initial!r}")
    return _picard(sweep, U0, eps_fix, max_iter)


def manufactured_problem(u_star: Sequence[str], lam: Sequence[str], k: int,
                         name: str = "manufactured") -> HyperbolicProblem:
    """Problem whose exact solution is ``u_star`` (expressions in x, t).

    f_i = d_t u*_i + lambda_i d_x u*_i (u-independent), phi_i = u*_i(x, 0),
    h_i(t, v) = u*_i at the inflow face.  Corner compatibility holds exactly.
    """
    n = len(u_star)
    us = [el.parse(s, ["x", "t"]) for s in u_star]
    ls = [el.parse(s, ["x", "t"]) for s in lam]
    f = [el.to_text(el.simplify(el.BinOp("+", el.differentiate(u, "t"),
                                         el.BinOp("*", l, el.differentiate(u, "x")))))
         for u, l in zip(us, ls)]
    phi = [el.to_text(el.substitute(u, {"t": el.Num(0.0)})) for u in us]
    faces = [1.0 if i < k else 0.0 for i in range(n)]
    h = [el.to_text(el.substitute(u, {"x": el.Num(y)})) for u, y in zip(us, faces)]
    return HyperbolicProblem(n, k, tuple(lam), tuple(f), tuple(phi), tuple(h), name)


def default_dt(theta: float, nx: int, lam_max: float) -> float:
    """Default level spacing theta/16."""
    return theta / LEVELS_PER_SLAB


def solve(p: HyperbolicProblem, nx: int, T: float,
          lip: Optional["bounds.LipschitzEstimate"] = None, *,
          dt_user: Optional[float] = None, eps_fix: float = EPS_FIX,
          max_iter: int = MAX_ITER, max_width: Optional[float] = None,
          initial: str = "extend", check_range: bool = True,
          derivatives: bool = False, eps_evt: float = EPS_EVT) -> SolutionField:
    """March the value pass over [0, T] slab by slab."""
    if lip is None:
        lip = bounds.estimate_lipschitz(p, bounds.default_range(p, T), T)
    lam_max, _, _ = speed_extrema(p, T)
    plan = plan_slabs(p, lip, T, "value", max_width=max_width)
    xgrid = np.linspace(0.0, 1.0, nx + 1)
    if dt_user is None:
        dt_user = default_dt(plan.theta if math.isfinite(plan.theta) else T, nx, lam_max)
    floor = np.stack([p.phi_i(i, xgrid).astype(float) for i in range(p.n)])
    all_times = [np.array([0.0])]
    all_u = [floor[None]]
    slab_of = [np.array([0])]
    diags = []
    for sidx, (t0, t1) in enumerate(zip(plan.boundaries[:-1], plan.boundaries[1:])):
        L = max(1, math.ceil((t1 - t0) / dt_user * (1 - 1e-12)))
        times = t0 + (t1 - t0) * np.arange(L + 1) / L
        times[-1] = t1
        U, iters, inc, ok = picard_slab(p, xgrid, times, floor, from_initial=(sidx == 0),
                                        eps_fix=eps_fix, max_iter=max_iter, initial=initial,
                                        eps_evt=eps_evt)
        diag = SlabDiagnostics(sidx, float(t0), float(t1), L, iters, inc,
                               plan.provenance, ok)
        diags.append(diag)
        if not ok:
            raise ConvergenceError(
                f"Picard iteration did not converge on slab {sidx} [{t0:.6g}, {t1:.6g}] "
                f"within {max_iter} sweeps (last increment {inc[-1]:.3e}); the Lipschitz "
                f"estimate (M={lip.M:.3g}) is probably too small for this solution",
                diags)
        peak = float(np.max(np.abs(U)))
        if check_range and peak > lip.M:
            raise RangeExceeded(
                f"sup|u| = {peak:.6g} at t = {t1:.6g} exceeds the range M = {lip.M:.6g} "
                f"on which the Lipschitz constants were estimated; the solution may be "
                f"blowing up (try the blowup command) or M must be raised",
                float(t1), peak)
        all_times.append(times[1:])
        all_u.append(U[1:])
        slab_of.append(np.full(L, sidx))
        floor = U[-1]
    fieldobj = SolutionField(p, xgrid, np.concatenate(all_times), np.concatenate(all_u),
                             np.concatenate(slab_of), plan, lip, diags)
    if derivatives:
        solve_derivative_x(p, fieldobj, eps_fix=eps_fix, max_iter=max_iter, eps_evt=eps_evt)
        derivative_t(p, fieldobj)
    return fieldobj


# ---------------------------------------------------------------------------
# Derivative pass


def _group_levels(times, theta, t_bounds=None):
    """Greedy grouping of level indices into slabs of width <= theta."""
    groups = []
    a = 0
    N = len(times) - 1
    while a < N:
        b = a + 1
        while b < N and times[b + 1] - times[a] <= theta * (1 + 1e-12):
            b += 1
        groups.append((a, b))
        a = b
    return groups


def solve_derivative_x(p: HyperbolicProblem, fld: SolutionField, *,
                       lip: Optional["bounds.LipschitzEstimate"] = None,
                       eps_fix: float = EPS_FIX, max_iter: int = MAX_ITER,
                       eps_evt: float = EPS_EVT) -> SolutionField:
    """Picard iteration of the x-differentiated system; fills ``fld.dudx``."""
    lip = lip or fld.lip
    n, nx = p.n, fld.nx
    xgrid = fld.x
    T = fld.T
    plan = plan_slabs(p, lip, T, "derivative")
    groups = _group_levels(fld.times, plan.theta)
    tc = p.trace
    out_nodes = [tc.outflow_node(q, nx) for q in range(n)]
    in_nodes = [tc.inflow_node(q, nx) for q in range(n)]
    W = np.empty_like(fld.u)
    W[0] = np.stack([p.dphi_i(i, xgrid).astype(float) for i in range(n)])
    diags = []
    for gidx, (a, b) in enumerate(groups):
        times = fld.times[a:b + 1]
        Useg = fld.u[a:b + 1]
        L = b - a
        samples = _build_samples(p, xgrid, times, eps_evt)
        floor = W[a]
        coeffs = []
        for i, s in enumerate(samples):
            uvals = s.gather(Useg)
            A = np.stack([p.df_du_ij(i, q, s.x, s.t, uvals) for q in range(n)])
            A[i] = A[i] - p.dlam_dx_i(i, s.x, s.t)
            B = p.df_dx_i(i, s.x, s.t, uvals)
            if a == 0:
                bot = p.dphi_i(i, s.bot_x).astype(float)
            else:
                bot = _interp_floor(floor[i], s.bot_x, nx)
            lat = None
            if len(s.lat):
                te, lo, fr = s.lat_t, s.lat_lo, s.lat_frac
                y = tc.inflow(i)
                u_in = _time_interp(Useg[:, :, in_nodes[i]], lo, fr).T
                vser = np.stack([Useg[:, q, out_nodes[q]] for q in range(n)], axis=1)
                v_e = _time_interp(vser, lo, fr).T
                lam_in = p.lam_i(i, y, te)
                c0 = (p.f_i(i, y, te, u_in) - p.dh_dt_i(i, te, v_e)) / lam_in
                cq = np.stack([-p.dh_dv_ij(i, q, te, v_e) / lam_in for q in range(n)])
                f_out = np.empty((n, len(te)))
                lam_out = np.empty((n, len(te)))
                for q in range(n):
                    xq = tc.outflow(q)
                    u_q = _time_interp(Useg[:, :, out_nodes[q]], lo, fr).T
                    f_out[q] = p.f_i(q, xq, te, u_q)
                    lam_out[q] = p.lam_i(q, xq, te)
                lat = (c0, cq, f_out, lam_out)
            coeffs.append((A, B, bot, lat))

        def lateral(i, s, V, coeffs=coeffs):
            c0, cq, f_out, lam_out = coeffs[i][3]
            wser = np.stack([V[:, q, out_nodes[q]] for q in range(n)], axis=1)
            dv = f_out - lam_out * _time_interp(wser, s.lat_lo, s.lat_frac).T
            return c0 + np.einsum("qs,qs->s", cq, dv)

        def sweep(Wl, samples=samples, coeffs=coeffs, floor=floor, L=L, lateral=lateral):
            new = np.empty_like(Wl)
            new[0] = floor
            accs = []
            for i, s in enumerate(samples):
                A, B, bot, lat = coeffs[i]
                g = np.einsum("qs,qs->s", A, s.gather(Wl)) + B
                acc = s.integrate(g)
                base = np.empty(s.n_anchor)
                base[s.bot] = bot
                if lat is not None:
                    base[s.lat] = lateral(i, s, Wl)
                accs.append(acc)
                new[1:, i, :] = (base + acc).reshape(L, nx + 1)
            return _two_stage(new, samples, accs, lateral, L, nx)

        W0 = np.broadcast_to(floor, (L + 1,) + floor.shape).copy()
        Wl, iters, inc, ok = _picard(sweep, W0, eps_fix, max_iter)
        diags.append(SlabDiagnostics(gidx, float(times[0]), float(times[-1]), L, iters,
                                     inc, plan.provenance, ok))
        if not ok:
            raise ConvergenceError(
                f"derivative pass did not converge on slab {gidx} "
                f"[{times[0]:.6g}, {times[-1]:.6g}]", diags)
        W[a + 1:b + 1] = Wl[1:]
    fld.dudx = W
    fld.derivative_plan = plan
    fld.derivative_diagnostics = diags
    return fld


def derivative_t(p: HyperbolicProblem, fld: SolutionField) -> SolutionField:
    """u_t = f - lambda u_x at every node."""
    if fld.dudx is None:
        raise SolverError("derivative_t needs dudx; run solve_derivative_x first")
    X = fld.x[None, :]
    Tt = fld.times[:, None]
    U = np.moveaxis(fld.u, 1, 0)
    dudt = np.empty_like(fld.u)
    for i in range(p.n):
        dudt[:, i, :] = p.f_i(i, X, Tt, U) - p.lam_i(i, X, Tt) * fld.dudx[:, i, :]
    fld.dudt = dudt
    return fld


def boundary_traces(p: HyperbolicProblem, fld: SolutionField):
    """(times, v, v') sampled at every level; v' is None without dudx."""
    nx = fld.nx
    tc = p.trace
    v = np.stack([fld.u[:, q, tc.outflow_node(q, nx)] for q in range(p.n)], axis=1)
    if fld.dudx is None:
        return fld.times, v, None
    dv = np.empty_like(v)
    U_all = [np.moveaxis(fld.u[:, :, tc.outflow_node(q, nx)], 1, 0) for q in range(p.n)]
    for q in range(p.n):
        xq = tc.outflow(q)
        dv[:, q] = (p.f_i(q, xq, fld.times, U_all[q])
                    - p.lam_i(q, xq, fld.times) * fld.dudx[:, q, tc.outflow_node(q, nx)])
    return fld.times, v, dv


def sigma_form_residual(p: HyperbolicProblem, x: float, t: float, y, m: int = 101):
    """|y . int_0^1 grad_u f_i(x,t,sigma y) dsigma + f_i(x,t,0) - f_i(x,t,y)| per i."""
    y = np.asarray(y, dtype=float)
    sig = np.linspace(0.0, 1.0, m)
    wts = np.full(m, 1.0 / (m - 1))
    wts[[0, -1]] *= 0.5
    Ys = y[:, None] * sig[None, :]
    zero = np.zeros(p.n)
    res = np.empty(p.n)
    for i in range(p.n):
        integral = 0.0
        for j in range(p.n):
            g = p.df_du_ij(i, j, x, t, Ys)
            integral += y[j] * float(np.dot(wts, g))
        res[i] = abs(integral + float(p.f_i(i, x, t, zero)) - float(p.f_i(i, x, t, y)))
    return res
