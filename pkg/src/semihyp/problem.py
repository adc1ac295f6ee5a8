"""Problem instances, validation, trace vector and corner compatibility.

A problem is the system ``u_t + diag(lambda) u_x = f(x, t, u)`` on the strip
``0 < x < 1`` with initial data ``phi`` and boundary maps

    u_i(0, t) = h_i(t, v(t))   for i > k   (positive speeds, inflow at x=0)
    u_i(1, t) = h_i(t, v(t))   for i <= k  (negative speeds, inflow at x=1)

where ``v`` collects each component on its outflow face.  Components are
indexed from 0 in code; ``k`` is the count of negative-speed components.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import exprlang as el

DEFAULT_LATTICE = 101
EPS_COMPAT = 1e-9


class ProblemError(ValueError):
    """Malformed problem definition."""


def _vars_f(n):
    return ["x", "t"] + [f"u{j + 1}" for j in range(n)]


def _vars_h(n):
    return ["t"] + [f"v{j + 1}" for j in range(n)]


def _parse_list(sources, variables, label):
    out = []
    for i, s in enumerate(sources):
        try:
            out.append(el.parse(s, variables))
        except el.ExprError as exc:
            raise ProblemError(f"{label}[{i}] = {s!r}: {exc}") from exc
    return out


def _bcast(value, shape):
    return np.broadcast_to(np.asarray(value, dtype=float), shape)


@dataclass(frozen=True, eq=False)
class HyperbolicProblem:
    """Immutable problem instance.  The horizon T is a per-run parameter."""

    n: int
    k: int
    lam: tuple
    f: tuple
    phi: tuple
    h: tuple
    name: str = ""

    def __post_init__(self):
        n = self.n
        if not (isinstance(n, int) and n >= 1):
            raise ProblemError(f"n must be a positive integer, got {n!r}")
        if not (1 <= self.k <= n):
            raise ProblemError(f"need 1 <= k <= n, got k={self.k}, n={n}")
        for label, seq in (("lambda", self.lam), ("f", self.f),
                           ("phi", self.phi), ("h", self.h)):
            if len(seq) != n:
                raise ProblemError(f"{label} has {len(seq)} entries, expected n={n}")
        object.__setattr__(self, "lam", tuple(self.lam))
        object.__setattr__(self, "f", tuple(self.f))
        object.__setattr__(self, "phi", tuple(self.phi))
        object.__setattr__(self, "h", tuple(self.h))
        # Parse eagerly so a bad instance never exists.
        self.lam_ast, self.f_ast, self.phi_ast, self.h_ast  # noqa: B018

    # -- parsed data -------------------------------------------------------

    @property
    def f_vars(self):
        return _vars_f(self.n)

    @property
    def h_vars(self):
        return _vars_h(self.n)

    @cached_property
    def lam_ast(self):
        return _parse_list(self.lam, ["x", "t"], "lambda")

    @cached_property
    def f_ast(self):
        return _parse_list(self.f, self.f_vars, "f")

    @cached_property
    def phi_ast(self):
        return _parse_list(self.phi, ["x"], "phi")

    @cached_property
    def h_ast(self):
        return _parse_list(self.h, self.h_vars, "h")

    @cached_property
    def _fn(self):
        c = el.compile_expr
        d = el.differentiate
        fu = [f"u{j + 1}" for j in range(self.n)]
        hv = [f"v{j + 1}" for j in range(self.n)]
        return {
            "lam": [c(a) for a in self.lam_ast],
            "f": [c(a) for a in self.f_ast],
            "phi": [c(a) for a in self.phi_ast],
            "h": [c(a) for a in self.h_ast],
            "dlam_dx": [c(d(a, "x")) for a in self.lam_ast],
            "dphi": [c(d(a, "x")) for a in self.phi_ast],
            "df_dx": [c(d(a, "x")) for a in self.f_ast],
            "df_du": [[c(d(a, u)) for u in fu] for a in self.f_ast],
            "dh_dt": [c(d(a, "t")) for a in self.h_ast],
            "dh_dv": [[c(d(a, v)) for v in hv] for a in self.h_ast],
        }

    # -- vectorized evaluators ---------------------------------------------
    # U / V have a leading component axis of length n.

    def _f_env(self, x, t, U):
        env = {"x": x, "t": t}
        for j in range(self.n):
            env[f"u{j + 1}"] = U[j]
        return env

    def _h_env(self, t, V):
        env = {"t": t}
        for j in range(self.n):
            env[f"v{j + 1}"] = V[j]
        return env

    @staticmethod
    def _shape(*arrays):
        return np.broadcast_shapes(*(np.shape(a) for a in arrays))

    def lam_i(self, i, x, t):
        return _bcast(self._fn["lam"][i]({"x": x, "t": t}), self._shape(x, t))

    def dlam_dx_i(self, i, x, t):
        return _bcast(self._fn["dlam_dx"][i]({"x": x, "t": t}), self._shape(x, t))

    def phi_i(self, i, x):
        return _bcast(self._fn["phi"][i]({"x": x}), np.shape(x))

    def dphi_i(self, i, x):
        return _bcast(self._fn["dphi"][i]({"x": x}), np.shape(x))

    def f_i(self, i, x, t, U):
        shape = self._shape(x, t, *U)
        return _bcast(self._fn["f"][i](self._f_env(x, t, U)), shape)

    def df_dx_i(self, i, x, t, U):
        shape = self._shape(x, t, *U)
        return _bcast(self._fn["df_dx"][i](self._f_env(x, t, U)), shape)

    def df_du_ij(self, i, j, x, t, U):
        shape = self._shape(x, t, *U)
        return _bcast(self._fn["df_du"][i][j](self._f_env(x, t, U)), shape)

    def h_i(self, i, t, V):
        shape = self._shape(t, *V)
        return _bcast(self._fn["h"][i](self._h_env(t, V)), shape)

    def dh_dt_i(self, i, t, V):
        shape = self._shape(t, *V)
        return _bcast(self._fn["dh_dt"][i](self._h_env(t, V)), shape)

    def dh_dv_ij(self, i, j, t, V):
        shape = self._shape(t, *V)
        return _bcast(self._fn["dh_dv"][i][j](self._h_env(t, V)), shape)

    def f_all(self, x, t, U):
        return np.stack([self.f_i(i, x, t, U) for i in range(self.n)])

    def h_all(self, t, V):
        return np.stack([self.h_i(i, t, V) for i in range(self.n)])

    # -- faces ---------------------------------------------------------------

    @property
    def trace(self) -> "TraceConvention":
        return TraceConvention(self.n, self.k)

    def with_phi(self, phi: Sequence[str]) -> "HyperbolicProblem":
        return HyperbolicProblem(self.n, self.k, self.lam, self.f, tuple(phi),
                                 self.h, self.name)

    def as_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "lambda": list(self.lam),
                "f": list(self.f), "phi": list(self.phi), "h": list(self.h)}


@dataclass(frozen=True)
class TraceConvention:
    """Outflow abscissa ``x_i`` and inflow abscissa ``y_i`` per component."""

    n: int
    k: int

    def outflow(self, i: int) -> float:
        return 0.0 if i < self.k else 1.0

    def inflow(self, i: int) -> float:
        return 1.0 if i < self.k else 0.0

    def outflow_node(self, i: int, nx: int) -> int:
        return 0 if i < self.k else nx

    def inflow_node(self, i: int, nx: int) -> int:
        return nx if i < self.k else 0


def trace_vector(left, right, k: int) -> np.ndarray:
    """``v = (u_1(0), .., u_k(0), u_{k+1}(1), .., u_n(1))``.

    ``left`` and ``right`` hold all components at x=0 and x=1 (leading axis
    is the component index).
    """
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    return np.concatenate([left[:k], right[k:]], axis=0)


def split_trace(v, k: int, left_fill=np.nan, right_fill=np.nan):
    """Inverse layout of :func:`trace_vector` (unknown entries filled)."""
    v = np.asarray(v, dtype=float)
    left = np.full_like(v, left_fill)
    right = np.full_like(v, right_fill)
    left[:k] = v[:k]
    right[k:] = v[k:]
    return left, right


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    ok: bool
    lambda_min: float
    lambda_max: float
    issues: list = field(default_factory=list)

    def as_dict(self):
        return {"ok": self.ok, "lambda_min": self.lambda_min,
                "lambda_max": self.lambda_max, "issues": list(self.issues)}


def validate(p: HyperbolicProblem, T: float, lattice: int = DEFAULT_LATTICE,
             margin: float = 0.0) -> ValidationReport:
    """Check speed signs on a lattice and differentiability of the data."""
    issues = []
    xs = np.linspace(0.0, 1.0, lattice)
    ts = np.linspace(0.0, T, lattice)
    X, Tt = np.meshgrid(xs, ts, indexing="ij")
    lam_min, lam_max = np.inf, 0.0
    for i in range(p.n):
        try:
            lam = p.lam_i(i, X, Tt)
        except el.ExprError as exc:
            issues.append(f"lambda_{i + 1}: {exc}")
            continue
        if not np.all(np.isfinite(lam)):
            issues.append(f"lambda_{i + 1}: non-finite values on the lattice")
            continue
        want_neg = i < p.k
        wrong = lam >= 0 if want_neg else lam <= 0
        if np.any(wrong):
            sign = "negative" if want_neg else "positive"
            where = np.argwhere(wrong)[0]
            issues.append(
                f"lambda_{i + 1} must be {sign} on [0,1]x[0,{T:g}] but changes sign "
                f"(e.g. at x={X[tuple(where)]:.4g}, t={Tt[tuple(where)]:.4g})")
        lam_min = min(lam_min, float(np.min(np.abs(lam))))
        lam_max = max(lam_max, float(np.max(np.abs(lam))))
    if lam_min <= margin and not any("lambda" in s for s in issues):
        issues.append(f"speed margin {lam_min:.3g} not above {margin:.3g}")

    checks = [("lambda", p.lam_ast, ["x"]), ("phi", p.phi_ast, ["x"]),
              ("f", p.f_ast, ["x"] + [f"u{j + 1}" for j in range(p.n)]),
              ("h", p.h_ast, ["t"] + [f"v{j + 1}" for j in range(p.n)])]
    for label, asts, names in checks:
        for i, a in enumerate(asts):
            for name in names:
                try:
                    el.differentiate(a, name)
                except el.NotDifferentiable:
                    issues.append(
                        f"{label}_{i + 1} is not differentiable in {name} "
                        f"(non-differentiable nonlinearity: {el.to_text(a)})")
                    break
    if lam_min == np.inf:
        lam_min = 0.0
    return ValidationReport(not issues, lam_min, lam_max, issues)


# ---------------------------------------------------------------------------
# Compatibility at the corners


@dataclass
class CompatibilityReport:
    order: int
    residuals: list
    passed: list
    tol: float
    v0: list
    dv0: list | None = None

    @property
    def ok(self) -> bool:
        return all(self.passed)

    def as_dict(self):
        d = {"order": self.order, "residuals": list(self.residuals),
             "pass": list(self.passed), "ok": self.ok, "tol": self.tol,
             "v0": list(self.v0)}
        if self.dv0 is not None:
            d["dv0"] = list(self.dv0)
        return d


def initial_trace(p: HyperbolicProblem) -> np.ndarray:
    """v(0) from the initial data."""
    tc = p.trace
    return np.array([float(p.phi_i(i, tc.outflow(i))) for i in range(p.n)])


def initial_trace_rate(p: HyperbolicProblem) -> np.ndarray:
    """v'(0) with v_i'(0) = f_i(x_i, 0, phi(x_i)) - lambda_i(x_i, 0) phi_i'(x_i)."""
    tc = p.trace
    out = []
    for i in range(p.n):
        x = tc.outflow(i)
        u = [float(p.phi_i(j, x)) for j in range(p.n)]
        out.append(float(p.f_i(i, x, 0.0, u)) - float(p.lam_i(i, x, 0.0)) * float(p.dphi_i(i, x)))
    return np.array(out)


def check_compat0(p: HyperbolicProblem, tol: float = EPS_COMPAT) -> CompatibilityReport:
    tc = p.trace
    v0 = initial_trace(p)
    res = []
    for i in range(p.n):
        y = tc.inflow(i)
        res.append(float(p.phi_i(i, y)) - float(p.h_i(i, 0.0, v0)))
    return CompatibilityReport(0, res, [abs(r) <= tol for r in res], tol, v0.tolist())


def check_compat1(p: HyperbolicProblem, tol: float = EPS_COMPAT) -> CompatibilityReport:
    tc = p.trace
    v0 = initial_trace(p)
    dv0 = initial_trace_rate(p)
    res = []
    for i in range(p.n):
        y = tc.inflow(i)
        u = [float(p.phi_i(j, y)) for j in range(p.n)]
        lhs = float(p.f_i(i, y, 0.0, u)) - float(p.lam_i(i, y, 0.0)) * float(p.dphi_i(i, y))
        rhs = float(p.dh_dt_i(i, 0.0, v0))
        rhs += sum(float(p.dh_dv_ij(i, j, 0.0, v0)) * dv0[j] for j in range(p.n))
        res.append(lhs - rhs)
    return CompatibilityReport(1, res, [abs(r) <= tol for r in res], tol,
                               v0.tolist(), dv0.tolist())
