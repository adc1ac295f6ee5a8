"""Built-in problem configurations and nonlinearity growth families."""

from __future__ import annotations

import copy
import math

from .problem import HyperbolicProblem

A_LOGLOG = math.e ** math.e + 1.0
PI = repr(math.pi)
_A = repr(A_LOGLOG)


def _norm2(n):
    return "+".join(f"u{j + 1}^2" for j in range(n))


def family_rhs(family: str, n: int = 2, **params) -> list[str]:
    """Right-hand sides f_i for a growth family.

    lipschitz-sin: sin(u_i); qll: u_i (loglog(a+|u|^2))^(1/4);
    ll: u_i loglog(a+|u|^2); logpow: u_i (log(a+|u|^2))^p;
    power: u_i (a+|u|^2)^((q-1)/2); riccati: u_i^2.
    """
    s = _norm2(n)
    a = params.get("a")
    out = []
    for i in range(1, n + 1):
        u = f"u{i}"
        if family == "lipschitz-sin":
            out.append(f"sin({u})")
        elif family == "qll":
            aa = repr(float(a if a is not None else A_LOGLOG))
            out.append(f"{u}*loglog({aa}+{s})^0.25")
        elif family == "ll":
            aa = repr(float(a if a is not None else A_LOGLOG))
            out.append(f"{u}*loglog({aa}+{s})")
        elif family == "logpow":
            aa = repr(float(a if a is not None else A_LOGLOG))
            out.append(f"{u}*log({aa}+{s})^{float(params.get('p', 1.0))!r}")
        elif family == "power":
            aa = repr(float(a if a is not None else 1.0))
            e = (float(params.get("q", 2.0)) - 1.0) / 2.0
            out.append(u if e == 0 else f"{u}*({aa}+{s})^{e!r}")
        elif family == "riccati":
            out.append(f"{u}^2")
        else:
            raise ValueError(f"unknown growth family {family!r}")
    if family in ("qll", "ll", "logpow") and a is not None and a < A_LOGLOG:
        raise ValueError(f"log-log families need a >= e^e+1, got a={a}")
    return out


FAMILIES = ("lipschitz-sin", "qll", "ll", "logpow", "power", "riccati")


def swap_problem(f: list[str], amplitude: float, name: str = "") -> dict:
    """n=2, k=1, speeds (-1, 1), h swaps the outflow traces, constant phi."""
    c = repr(float(amplitude))
    return {"n": 2, "k": 1, "lambda": ["-1", "1"], "f": f, "phi": [c, c],
            "h": ["v2", "v1"]}


def _majorant():
    return {"sigma": A_LOGLOG, "delta": 2, "F": f"{_A}+r^2", "H": f"{_A}+r^2"}


def _base(problem: dict, T: float, nx: int = 200) -> dict:
    return {
        "problem": problem,
        "grid": {"nx": nx, "T": T},
        "solver": {"eps_fix": 1e-10, "max_iter": 60, "eps_evt": 1e-10},
        "bounds": {"density": 21},
        "output": {"format": "csv", "path": "out.csv"},
    }


def _growth_cfg(family, amplitude, T, C_f, C_h, **params):
    cfg = _base(swap_problem(family_rhs(family, 2, **params), amplitude), T, nx=50)
    cfg["certificate"] = {"majorant": _majorant(), "C_f": C_f, "C_h": C_h}
    # u_max sits above any certified bound; width collapse still catches blow-up
    cfg["blowup"] = {"u_max": 1e300, "t_max": T, "theta_min": 1e-8}
    return cfg


def preset(name: str) -> dict:
    """Complete configuration document for a named preset."""
    if name == "circulating-wave":
        return _base({"n": 2, "k": 1, "lambda": ["-1", "1"], "f": ["0", "0"],
                      "phi": [f"-sin({PI}*x)", f"sin({PI}*x)"], "h": ["v2", "v1"]}, 2.0)
    if name == "constant":
        return _base(swap_problem(["0", "0"], 0.75), 2.0)
    if name == "manufactured":
        return _base({"n": 2, "k": 1, "lambda": ["-1", "1"],
                      "f": ["-exp(-t)*(x+1)", "-exp(-t)*(2-x)"],
                      "phi": ["x", "1-x"], "h": ["exp(-t)", "exp(-t)"]}, 1.0)
    if name == "riccati":
        cfg = _base(swap_problem(family_rhs("riccati"), 1.0), 2.0)
        cfg["blowup"] = {"u_max": 1e6, "t_max": 2.0, "theta_min": 1e-8}
        return cfg
    if name == "sin":
        return _growth_cfg("lipschitz-sin", 1.0, 1.0, 2.0, 1.0)
    if name == "qll":
        return _growth_cfg("qll", 0.5, 10.0, 2.0, 1.0)
    if name == "ll":
        return _growth_cfg("ll", 0.5, 10.0, 2.0, 1.0)
    raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


PRESETS = ("circulating-wave", "constant", "manufactured", "riccati", "sin", "qll", "ll")


def problem_from_dict(d: dict, name: str = "") -> HyperbolicProblem:
    return HyperbolicProblem(int(d["n"]), int(d["k"]), tuple(d["lambda"]), tuple(d["f"]),
                             tuple(d["phi"]), tuple(d["h"]), name)


def preset_problem(name: str) -> HyperbolicProblem:
    return problem_from_dict(copy.deepcopy(preset(name))["problem"], name)


def family_problem(family: str, amplitude: float, **params) -> HyperbolicProblem:
    label = family + "".join(f",{k}={v}" for k, v in sorted(params.items()))
    return problem_from_dict(swap_problem(family_rhs(family, 2, **params), amplitude), label)
