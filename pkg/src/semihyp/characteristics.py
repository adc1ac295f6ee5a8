"""Backward characteristic tracing.

``dxi/dtau = lambda_i(xi, tau)`` is integrated backward from an anchor with
classical RK4 at fixed steps.  When a step leaves [0, 1] the crossing time is
located by bisection on the cubic Hermite dense output of that step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import HyperbolicProblem

EPS_EVT = 1e-10
C_SEP = 0.5

BOTTOM, LEFT, RIGHT = "bottom", "left", "right"
_FACE_CODE = {BOTTOM: 0, LEFT: 1, RIGHT: 2}
FACE_NAMES = (BOTTOM, LEFT, RIGHT)


@dataclass(frozen=True)
class CharacteristicTrace:
    i: int
    x: float
    t: float
    tau: np.ndarray  # strictly decreasing, tau[0] = t, tau[-1] = t_entry
    xi: np.ndarray
    t_entry: float
    face: str


def _rk4_back(lam, x, t, h):
    """One RK4 step of dx/dtau = lam from tau=t to tau=t-h (arrays)."""
    k1 = lam(x, t)
    k2 = lam(x - 0.5 * h * k1, t - 0.5 * h)
    k3 = lam(x - 0.5 * h * k2, t - 0.5 * h)
    k4 = lam(x - h * k3, t - h)
    return x - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), k1


def _hermite(s, xa, xb, ha, ga, gb):
    """Dense output at fraction s of a backward step of length ha.

    ga, gb are dx/dtau at the step ends; the step runs tau = t_a - s*ha.
    """
    s2, s3 = s * s, s * s * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * xa + h10 * (-ha * ga) + h01 * xb + h11 * (-ha * gb)


def _locate_crossing(xa, xb, ha, ga, gb, face, eps=EPS_EVT, max_iter=80):
    """Fraction s in [0, 1] where the dense output meets ``face``."""
    lo = np.zeros_like(xa)
    hi = np.ones_like(xa)
    sign_out = np.where(face > 0.5, 1.0, -1.0)  # outside means (x - face)*sign > 0
    s = hi.copy()
    for _ in range(max_iter):
        s = 0.5 * (lo + hi)
        xm = _hermite(s, xa, xb, ha, ga, gb)
        gap = (xm - face) * sign_out
        if np.all(np.abs(gap) <= eps):
            break
        outside = gap > 0
        hi = np.where(outside, s, hi)
        lo = np.where(outside, lo, s)
    return s


class _Stepper:
    """Vectorized backward stepping for one component."""

    def __init__(self, p: HyperbolicProblem, i: int, eps_evt: float = EPS_EVT):
        self.p = p
        self.i = i
        self.eps = eps_evt
        # Backward in time, negative speeds push xi to larger x.
        self.exit_face = 1.0 if i < p.k else 0.0
        self.exit_name = RIGHT if i < p.k else LEFT

    def lam(self, x, t):
        return self.p.lam_i(self.i, x, t)

    def step(self, x, t, h):
        """Advance active points; return new x, crossing fraction (nan if none)."""
        xb, ga = _rk4_back(self.lam, x, t, h)
        face = self.exit_face
        out = (xb > 1.0) if face > 0.5 else (xb < 0.0)
        s = np.full_like(x, np.nan)
        if np.any(out):
            xa_o, xb_o, ga_o = x[out], xb[out], ga[out]
            h_o = np.broadcast_to(h, x.shape)[out]
            t_o = np.broadcast_to(t, x.shape)[out]
            gb_o = self.lam(xb_o, t_o - h_o)
            at_face = np.abs(xa_o - face) <= self.eps
            s_o = _locate_crossing(xa_o, xb_o, h_o, ga_o, gb_o,
                                   np.full_like(xa_o, face), self.eps)
            s_o = np.where(at_face, 0.0, s_o)
            s[out] = s_o
            xb = xb.copy()
            xb[out] = face
        return xb, s


def trace_back(p: HyperbolicProblem, i: int, x: float, t: float,
               floor: float = 0.0, dtau: float = 1e-3,
               eps_evt: float = EPS_EVT) -> CharacteristicTrace:
    """Trace the i-th characteristic through (x, t) back to ``floor`` or a face."""
    if not (0.0 <= x <= 1.0) or floor > t:
        raise ValueError(f"anchor ({x}, {t}) outside the strip or below floor {floor}")
    st = _Stepper(p, i, eps_evt)
    taus, xis = [t], [x]
    cur_x = np.array([x], dtype=float)
    cur_t = t
    face = BOTTOM
    t_entry = floor
    while cur_t > floor:
        h = min(dtau, cur_t - floor)
        if cur_t - h - floor < 1e-14 * max(1.0, abs(t)):
            h = cur_t - floor
        new_x, s = st.step(cur_x, np.array([cur_t]), np.array([h]))
        if np.isfinite(s[0]):
            t_entry = cur_t - s[0] * h
            face = st.exit_name
            if s[0] > 0:
                taus.append(t_entry)
                xis.append(st.exit_face)
            else:
                xis[-1] = st.exit_face
            break
        cur_x = new_x
        cur_t = cur_t - h
        if cur_t - floor <= 1e-14 * max(1.0, abs(t)):
            cur_t = floor
        taus.append(cur_t)
        xis.append(float(cur_x[0]))
    if face == BOTTOM:
        t_entry = floor
    return CharacteristicTrace(i, x, t, np.array(taus), np.array(xis), t_entry, face)


def entry_time(p: HyperbolicProblem, i: int, x: float, t: float,
               dtau: float = 1e-3) -> tuple[float, str]:
    tr = trace_back(p, i, x, t, 0.0, dtau)
    return tr.t_entry, tr.face


def speed_extrema(p: HyperbolicProblem, T: float, lattice: int = 101):
    """(max |lambda|, min |lambda|, max |d lambda/dx|) on a lattice."""
    xs = np.linspace(0.0, 1.0, lattice)
    ts = np.linspace(0.0, T, lattice)
    X, Tt = np.meshgrid(xs, ts, indexing="ij")
    lam = np.stack([p.lam_i(i, X, Tt) for i in range(p.n)])
    dlam = np.stack([p.dlam_dx_i(i, X, Tt) for i in range(p.n)])
    return float(np.max(np.abs(lam))), float(np.min(np.abs(lam))), float(np.max(np.abs(dlam)))


def separation_width(p: HyperbolicProblem, T: float, lattice: int = 101,
                     c_sep: float = C_SEP) -> float:
    """Slab width within which no inward characteristic crosses half the strip."""
    lam_max, _, _ = speed_extrema(p, T, lattice)
    return c_sep / lam_max


# ---------------------------------------------------------------------------
# Slab tracing: every grid node at every slab level, back to the slab floor.


@dataclass
class SlabTraces:
    """Traces of one component from all (level, node) anchors of a slab.

    Anchors are levels 1..L of ``times`` (level 0 is the floor).  ``pos[l, m, j]``
    is the position at level m of the trace anchored at (x_j, times[l]);
    valid for ``entry_level[l, j] <= m <= l``.  Lateral entries happen at
    ``entry_time`` in (times[m_e - 1], times[m_e]], with m_e = entry_level.
    """

    i: int
    times: np.ndarray
    pos: np.ndarray          # (L+1, L+1, nx+1)
    entry_level: np.ndarray  # (L+1, nx+1) int
    entry_time: np.ndarray   # (L+1, nx+1)
    entry_face: np.ndarray   # (L+1, nx+1) int code


def trace_slab(p: HyperbolicProblem, i: int, xgrid: np.ndarray,
               times: np.ndarray, eps_evt: float = EPS_EVT) -> SlabTraces:
    st = _Stepper(p, i, eps_evt)
    L = len(times) - 1
    nx1 = len(xgrid)
    pos = np.full((L + 1, L + 1, nx1), np.nan)
    entry_level = np.zeros((L + 1, nx1), dtype=int)
    entry_time = np.broadcast_to(times[:, None], (L + 1, nx1)).copy()
    entry_face = np.zeros((L + 1, nx1), dtype=int)
    levels = np.arange(L + 1)
    for l in range(L + 1):
        pos[l, l] = xgrid
    cur = np.broadcast_to(xgrid, (L + 1, nx1)).copy()
    alive = np.ones((L + 1, nx1), dtype=bool)
    alive[0] = False
    for s in range(1, L + 1):
        # anchor l is at level l-s+1, stepping down to l-s
        act_l = levels >= s
        act = alive & act_l[:, None]
        if not np.any(act):
            break
        li, ji = np.nonzero(act)
        m_hi = li - s + 1
        t_hi = times[m_hi]
        h = t_hi - times[m_hi - 1]
        new_x, frac = st.step(cur[li, ji], t_hi, h)
        crossed = np.isfinite(frac)
        cur[li, ji] = new_x
        ok = ~crossed
        pos[li[ok], m_hi[ok] - 1, ji[ok]] = new_x[ok]
        entry_level[li[ok], ji[ok]] = m_hi[ok] - 1
        if np.any(crossed):
            lc, jc = li[crossed], ji[crossed]
            entry_level[lc, jc] = m_hi[crossed]
            entry_time[lc, jc] = t_hi[crossed] - frac[crossed] * h[crossed]
            entry_face[lc, jc] = _FACE_CODE[st.exit_name]
            alive[lc, jc] = False
    entry_time[entry_face == 0] = times[0]
    entry_time[0] = times[0]
    return SlabTraces(i, np.asarray(times), pos, entry_level, entry_time, entry_face)
