"""Finite-time blow-up detection and growth-family frontier scans."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bounds import estimate_lipschitz
from .characteristics import EPS_EVT, separation_width
from .presets import FAMILIES, family_problem
from .problem import HyperbolicProblem, check_compat0, validate
from .solver import (EPS_FIX, LEVELS_PER_SLAB, MAX_ITER, contraction_q, picard_slab,
                     theta_from_q)

COMPLETED = "COMPLETED"
BLOWUP_DETECTED = "BLOWUP_DETECTED"
INCONCLUSIVE = "INCONCLUSIVE"
POLE_FIT = "pole-fit: 1/peak linear in t over the last 10 slabs"


@dataclass
class BlowupVerdict:
    status: str
    reached_t: float
    t_star: Optional[float]
    method: Optional[str]
    u_max: float
    theta_min: float
    peak: float
    widths: list = field(default_factory=list)
    history: list = field(default_factory=list)  # (t, peak) at slab ends
    message: str = ""

    def as_dict(self, full: bool = False):
        d = asdict(self)
        if not full:
            d.pop("history")
            d.pop("widths")
            d["slabs"] = len(self.widths)
            d["last_width"] = self.widths[-1] if self.widths else None
        for key in ("u_max",):
            if not math.isfinite(d[key]):
                d[key] = None
        return d


def estimate_blowup_time(history, count: int = 10) -> Optional[float]:
    """Fit 1/peak = a + b t to the last ``count`` points; T* = -a/b."""
    pts = [(t, pk) for t, pk in history if pk > 0][-count:]
    if len(pts) < 3:
        return None
    t = np.array([q[0] for q in pts])
    inv = 1.0 / np.array([q[1] for q in pts])
    b, a = np.polyfit(t, inv, 1)
    if not b < 0:
        return None
    return float(-a / b)


def run_until_blowup(p: HyperbolicProblem, u_max: float = 1e6, t_max: float = 10.0,
                     nx: int = 200, *, theta_min: float = 1e-8, eps_fix: float = EPS_FIX,
                     max_iter: int = MAX_ITER, levels: int = LEVELS_PER_SLAB,
                     lip_density: int = 5, eps_evt: float = EPS_EVT) -> BlowupVerdict:
    """March slabs with Lipschitz constants re-estimated from the current peak."""
    n = p.n
    xgrid = np.linspace(0.0, 1.0, nx + 1)
    floor = np.stack([p.phi_i(i, xgrid).astype(float) for i in range(n)])
    peak = float(np.max(np.abs(floor)))
    theta_sep = separation_width(p, t_max)
    t = 0.0
    widths, history = [], [(0.0, peak)]

    def verdict(status, msg=""):
        t_star = estimate_blowup_time(history) if status == BLOWUP_DETECTED else None
        return BlowupVerdict(status, t, t_star, POLE_FIT if t_star is not None else None,
                             u_max, theta_min, peak, widths, history, msg)

    while t < t_max * (1 - 1e-14):
        M = 2.0 * max(peak, 1e-12) * n
        ok = False
        for attempt in range(2):
            lip = estimate_lipschitz(p, M, t_max, density=lip_density)
            theta0 = theta_from_q(contraction_q(n, lip, "value"))
            if theta0 < theta_min:
                return verdict(BLOWUP_DETECTED,
                               f"slab width {theta0:.3g} fell below {theta_min:.3g}")
            width = min(theta0, theta_sep, t_max - t)
            times = t + width * np.arange(levels + 1) / levels
            if t_max - t <= min(theta0, theta_sep):
                times[-1] = t_max
            U, _, _, ok = picard_slab(p, xgrid, times, floor, from_initial=(t == 0.0),
                                      eps_fix=eps_fix, max_iter=max_iter, eps_evt=eps_evt)
            if ok:
                break
            M *= 2.0
        if not ok:
            return verdict(INCONCLUSIVE,
                           f"Picard iteration failed near t={t:.6g} after an M-doubling retry")
        widths.append(float(times[-1] - times[0]))
        floor = U[-1]
        t = float(times[-1])
        peak = float(np.max(np.abs(U)))
        history.append((t, peak))
        if not math.isfinite(peak) or peak >= u_max:
            return verdict(BLOWUP_DETECTED, f"sup|u| reached {peak:.3g} >= {u_max:.3g}")
    return verdict(COMPLETED)


# ---------------------------------------------------------------------------
# Frontier scans

SCAN_HEADER = ["family", "params", "verdict", "T_star", "reached_t", "peak", "nx", "u_max"]


def _params_text(params: dict) -> str:
    return ";".join(f"{k}={params[k]!r}" for k in sorted(params))


@dataclass(frozen=True)
class GrowthFamily:
    """One member of a nonlinearity growth family with its initial amplitude c."""

    family: str
    params: tuple = ()  # sorted (name, value) pairs
    amplitude: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown growth family {self.family!r}")

    @classmethod
    def of(cls, family: str, amplitude: float = 1.0, **params) -> "GrowthFamily":
        return cls(family, tuple(sorted(params.items())), float(amplitude))

    def problem(self) -> HyperbolicProblem:
        return family_problem(self.family, self.amplitude, **dict(self.params))

    @property
    def label(self) -> str:
        return _params_text(dict(self.params, c=self.amplitude))


def expand_grid(family: str, grid: dict, amplitudes: Sequence[float]) -> list[GrowthFamily]:
    """Cartesian product of parameter lists and amplitudes, in sorted key order."""
    keys = sorted(grid)
    out = []
    for combo in itertools.product(*(list(grid[k]) for k in keys)):
        for c in amplitudes:
            out.append(GrowthFamily.of(family, c, **dict(zip(keys, combo))))
    return out


def frontier_scan(members: Sequence[GrowthFamily], u_max: float = 1e6, t_max: float = 10.0,
                  nx: int = 50, **kw) -> list[dict]:
    """Run ``run_until_blowup`` for each family member.

    Errors in one row (including failed validation) are recorded in its
    verdict column; the scan goes on.
    """
    out = []
    for m in members:
        rec = {"family": m.family, "params": m.label, "verdict": None, "T_star": None,
               "reached_t": None, "peak": None, "nx": nx, "u_max": u_max}
        try:
            p = m.problem()
            rep = validate(p, t_max)
            if not rep.ok:
                raise ValueError("; ".join(rep.issues))
            if not check_compat0(p).ok:
                raise ValueError("zeroth-order compatibility fails")
            v = run_until_blowup(p, u_max, t_max, nx, **kw)
            rec.update(verdict=v.status, T_star=v.t_star, reached_t=v.reached_t, peak=v.peak)
        except Exception as exc:  # recorded per row by contract
            rec["verdict"] = f"ERROR: {exc}"
        out.append(rec)
    return out
