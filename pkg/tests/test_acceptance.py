"""Acceptance criteria 1-13; each test prints one PASS/FAIL line.

Tolerances are pinned as module constants. The lines are also echoed in the
pytest terminal summary (see conftest.py).
"""

import math
import time

import numpy as np
import pytest

import conftest
from conftest import circulating_exact, circulating_solution
from semihyp import blowup as bu
from semihyp import bounds as bd
from semihyp import cli
from semihyp import solver as sv
from semihyp.presets import family_problem, preset, preset_problem
from semihyp.problem import HyperbolicProblem, check_compat0, check_compat1

PI = repr(math.pi)

TOL_TRANSPORT = 5e-3
MIN_REFINE_RATIO = 1.5
MAX_RUNTIME_S = 10.0
TOL_MANUFACTURED = 5e-3
TOL_TSTAR_REL = 0.05
TOL_SHIFT_UMAX = 0.01
TOL_SHIFT_NX = 0.02
MAX_PICARD_RATIO = 0.6
MAX_PICARD_ITERS = 60
TOL_DX_EXACT = 2e-2
TOL_SIGMA_QUAD = 1e-4
TOL_SIGMA_LINEAR = 1e-13
TOL_COMPAT = 1e-9
MAX_DEPENDENCE_RATIO = 1.1


def check(n: int, desc: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {desc}"
    if detail:
        line += f" ({detail})"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def sup_err(fld, exact):
    return float(np.max(np.abs(fld.u - exact)))


def manufactured_exact(fld):
    X, T = np.meshgrid(fld.x, fld.times)
    return np.stack([np.exp(-T) * X, np.exp(-T) * (1 - X)], axis=1)


def test_01_closed_form_transport():
    fine = circulating_solution(200, 32)
    coarse = circulating_solution(100, 16)
    e200 = sup_err(fine, circulating_exact(fine.x, fine.times))
    e100 = sup_err(coarse, circulating_exact(coarse.x, coarse.times))
    t0 = time.perf_counter()
    sv.solve(preset_problem("circulating-wave"), 200, 2.0, dt_user=0.5 / 32, derivatives=True)
    runtime = time.perf_counter() - t0
    ok = e200 <= TOL_TRANSPORT and e100 / e200 >= MIN_REFINE_RATIO and runtime < MAX_RUNTIME_S
    check(1, "circulating wave vs closed form", ok,
          f"err(Nx=200)={e200:.3g}, err(Nx=100)/err(Nx=200)={e100 / e200:.3g}, "
          f"runtime {runtime:.2f}s")


def test_02_manufactured_solution():
    fld = sv.solve(preset_problem("manufactured"), 200, 1.0)
    err = sup_err(fld, manufactured_exact(fld))
    check(2, "manufactured solution with source", err <= TOL_MANUFACTURED, f"err={err:.3g}")


@pytest.mark.slow
def test_03_riccati_blowup():
    details, ok = [], True
    base = {}
    for c in (0.5, 1.0):
        v = bu.run_until_blowup(family_problem("riccati", c), 1e6, 2.0 / c, 200)
        rel = abs(v.t_star - 1 / c) * c if v.t_star is not None else math.inf
        ok &= v.status == bu.BLOWUP_DETECTED and rel <= TOL_TSTAR_REL
        base[c] = v.t_star
        details.append(f"c={c}: {v.status} T*={v.t_star:.6g} rel.err {rel:.2g}")
    p = family_problem("riccati", 1.0)
    low = bu.run_until_blowup(p, 1e4, 2.0, 200)
    fine = bu.run_until_blowup(p, 1e6, 2.0, 400)
    s_umax = abs(low.t_star - base[1.0]) / base[1.0]
    s_nx = abs(fine.t_star - base[1.0]) / base[1.0]
    ok &= low.status == fine.status == bu.BLOWUP_DETECTED
    ok &= s_umax <= TOL_SHIFT_UMAX and s_nx <= TOL_SHIFT_NX
    details.append(f"shift U_max->1e4 {s_umax:.2g}, Nx->400 {s_nx:.2g}")
    check(3, "Riccati blow-up time", ok, "; ".join(details))


def test_04_contraction_certificate():
    flds = [circulating_solution(200, 32), sv.solve(preset_problem("manufactured"), 200, 1.0)]
    theta0_slabs = sum(f.plan.provenance == "theta0" for f in flds)
    all_converged = all(d.converged and d.iterations <= MAX_PICARD_ITERS
                        for f in flds for d in f.diagnostics)
    # q0 = 0 on both, so no slab is theta0-limited; exercise a Lipschitz-limited plan too
    sin = sv.solve(preset_problem("sin"), 200, 1.0)
    ratios = [d.max_ratio for d in sin.diagnostics if d.max_ratio is not None]
    worst = max(ratios) if ratios else 0.0
    ok = (all_converged and sin.plan.provenance == "theta0" and worst <= MAX_PICARD_RATIO
          and all(d.converged and d.iterations <= MAX_PICARD_ITERS for d in sin.diagnostics))
    check(4, "Picard contraction on theta0 slabs", ok,
          f"criteria 1-2: {theta0_slabs} theta0 slabs, all converged={all_converged}; "
          f"sin preset: {len(sin.diagnostics)} theta0 slabs, max ratio {worst:.3g}, "
          f"max iterations {max(d.iterations for d in sin.diagnostics)}")


def _dominance(fld):
    p, T = fld.problem, fld.T
    rep = bd.apriori_bounds(p, fld.lip, T)
    ok_u = fld.sup("u") <= math.exp(rep.log_global_u) * (1 + 1e-12)
    ok_dx = float(np.max(np.abs(fld.dudx))) <= math.exp(rep.log_global_dx) * (1 + 1e-12)
    ok_dt = bool(np.all(np.abs(fld.dudt) <= rep.dt_bound * (1 + 1e-12)))
    return ok_u and ok_dx and ok_dt, rep


def test_05_apriori_dominance():
    flds = {
        "circulating": circulating_solution(200, 32),
        "manufactured": sv.solve(preset_problem("manufactured"), 200, 1.0, derivatives=True),
        "riccati T=0.5": sv.solve(family_problem("riccati", 1.0), 200, 0.5, derivatives=True),
    }
    ok, parts = True, []
    for name, fld in flds.items():
        good, rep = _dominance(fld)
        ok &= good
        parts.append(f"{name}: sup|u|={fld.sup('u'):.3g} <= e^{rep.log_global_u:.3g}, "
                     f"sup|u_x|={np.max(np.abs(fld.dudx)):.3g} <= e^{rep.log_global_dx:.3g}, "
                     f"sup|u_t|={np.max(np.abs(fld.dudt)):.3g} <= {rep.dt_bound:.3g}")
    check(5, "a priori bounds dominate computed fields", ok, "; ".join(parts))


def test_06_derivative_pass():
    fld = circulating_solution(200, 32)
    dx = 1.0 / fld.nx
    # centered stencils exist only at interior nodes
    centered = (fld.u[:, :, 2:] - fld.u[:, :, :-2]) / (2 * dx)
    fd_err = float(np.max(np.abs(fld.dudx[:, :, 1:-1] - centered)))
    X, T = np.meshgrid(fld.x, fld.times)
    exact_err = float(np.max(np.abs(fld.dudx[:, 1] - np.pi * np.cos(np.pi * (X - T)))))
    ok = fd_err <= max(10 * dx, 1e-3) and exact_err <= TOL_DX_EXACT
    check(6, "derivative pass vs differences and closed form", ok,
          f"vs centered differences {fd_err:.3g}, vs pi cos(pi(x-t)) {exact_err:.3g}")


def test_07_sigma_form():
    quad = HyperbolicProblem(2, 1, ("-1", "1"), ("u1^2", "u2^2"), ("1", "1"), ("v2", "v1"))
    lin = HyperbolicProblem(2, 1, ("-1", "1"), ("3*u1-u2+x*t", "sin(x)*u2"), ("1", "1"),
                            ("v2", "v1"))
    rq = float(np.max(sv.sigma_form_residual(quad, 0.4, 0.3, [1.0, 1.0], 101)))
    rl = float(np.max(sv.sigma_form_residual(lin, 0.4, 0.3, [1.0, -2.0], 101)))
    check(7, "sigma-form identity", rq <= TOL_SIGMA_QUAD and rl <= TOL_SIGMA_LINEAR,
          f"u^2 residual {rq:.3g}, linear residual {rl:.3g}")


def test_08_compatibility_examples():
    def swap(phi, h=("v2", "v1")):
        return HyperbolicProblem(2, 1, ("-1", "1"), ("0", "0"), phi, h)

    sine = (f"-sin({PI}*x)", f"sin({PI}*x)")
    c = [check_compat0(swap(("0.5", "0.5"))), check_compat0(swap(("x", "1-x"))),
         check_compat0(swap(sine)), check_compat1(swap(("0.5", "0.5"))),
         check_compat1(swap(sine)), check_compat1(swap(sine, ("v2", "2*v1")))]
    expected_ok = [True, False, True, True, True, False]
    expected_res = [[0, 0], [None, 1.0], [0, 0], [0, 0], [0, 0], [None, math.pi]]
    ok = [r.ok for r in c] == expected_ok
    for rep, want in zip(c, expected_res):
        for got, w in zip(rep.residuals, want):
            if w is not None:
                ok &= abs(got - w) <= TOL_COMPAT
    check(8, "compatibility worked examples", ok,
          "outcomes " + ",".join("pass" if r.ok else "fail" for r in c))


def test_09_certificates():
    def cls(p, T):
        cfg = preset("sin")["certificate"]
        m = cfg["majorant"]
        return bd.certify_growth(p, T, F=m["F"], H=m["H"], sigma=m["sigma"], delta=m["delta"],
                                 C_f=cfg["C_f"], C_h=cfg["C_h"], with_bounds=False).cls

    got = {name: cls(preset_problem(name), preset(name)["grid"]["T"])
           for name in ("sin", "qll", "ll")}
    got["u^2"] = cls(family_problem("riccati", 1.0), 1.0)
    want = {"sin": bd.THM1, "qll": bd.THM3, "ll": bd.REMARK2, "u^2": bd.UNCERTIFIED}
    sol = bd.solve_R(1.0, 1, 1.0, 2.0)
    holds = bd.radius_inequality_gap(0.0, sol.R, 1, 1.0, 2.0) >= 0
    fails_below = bd.radius_inequality_gap(0.0, sol.R - 1e-3, 1, 1.0, 2.0) < 0
    ok = got == want and 1.6 < sol.R < 1.8 and holds and fails_below and sol.R0 is None
    check(9, "growth certificates and radius solver", ok,
          ", ".join(f"{k}->{v}" for k, v in got.items()) + f"; R={sol.R:.6g}")


def test_10_no_false_blowup():
    ok, parts = True, []
    for name in ("qll", "ll"):
        cfg = preset(name)
        p = preset_problem(name)
        b, c = cfg["blowup"], cfg["certificate"]
        v = bu.run_until_blowup(p, b["u_max"], 10.0, cfg["grid"]["nx"])
        m = c["majorant"]
        cert = bd.certify_growth(p, 10.0, F=m["F"], H=m["H"], sigma=m["sigma"],
                                 delta=m["delta"], C_f=c["C_f"], C_h=c["C_h"])
        below = math.log(v.peak) < cert.log_bound_u
        ok &= v.status == bu.COMPLETED and below
        parts.append(f"{name}: {v.status}, peak {v.peak:.3g}, "
                     f"log bound {cert.log_bound_u:.4g}")
    check(10, "no false blow-up for log-log growth", ok, "; ".join(parts))


def test_11_continuous_dependence():
    cw = bd.continuous_dependence_check(preset_problem("circulating-wave"),
                                        [f"1e-3*sin(2*{PI}*x)"] * 2, 200, 2.0,
                                        dt_user=0.5 / 32)
    p = HyperbolicProblem(2, 1, ("-1", "1"), ("sin(u1)", "sin(u2)"),
                          (f"0.5*sin({PI}*x)", f"0.5*sin({PI}*x)"), ("v2", "v1"))
    one = bd.continuous_dependence_check(p, ["1e-3", "1e-3"], 100, 0.05)
    single = 3 + 2 * p.n * 1.0
    ok = cw.ratio <= MAX_DEPENDENCE_RATIO and one.slabs == 1 and one.ratio <= single
    check(11, "continuous dependence on initial data", ok,
          f"circulating ratio {cw.ratio:.4g}; one-slab ratio {one.ratio:.4g} <= {single:g}")


def test_12_uniqueness():
    a = circulating_solution(200, 32, derivatives=False)
    b = circulating_solution(200, 32, derivatives=False, initial="zero")
    diff = float(np.max(np.abs(a.u - b.u)))
    check(12, "Picard limit independent of initial iterate", diff <= 2 * sv.EPS_FIX,
          f"max difference {diff:.3g}")


def _run_twice(tmp_path, tag, argv):
    outs = []
    for k in range(2):
        path = tmp_path / f"{tag}-{k}.out"
        code = cli.main(argv + ["--out", str(path)])
        outs.append((code, path.read_bytes()))
    return outs[0] == outs[1]


def test_13_determinism(tmp_path, capsys):
    commands = {
        "solve circulating-wave": ["solve", "--preset", "circulating-wave", "--derivatives",
                                   "--set", "grid.dt_user=0.015625"],
        "solve manufactured": ["solve", "--preset", "manufactured", "--derivatives"],
        "bounds sin": ["bounds", "--preset", "sin"],
        "certify qll": ["certify", "--preset", "qll"],
        "blowup riccati (Nx=50, U_max=1e3)": ["blowup", "--preset", "riccati",
                                              "--set", "grid.nx=50",
                                              "--set", "blowup.u_max=1000"],
        "blowup qll": ["blowup", "--preset", "qll"],
    }
    same = {name: _run_twice(tmp_path, str(i), argv)
            for i, (name, argv) in enumerate(commands.items())}
    capsys.readouterr()
    check(13, "byte-identical outputs across runs", all(same.values()),
          ", ".join(f"{k}: {'same' if v else 'DIFFER'}" for k, v in same.items()))
