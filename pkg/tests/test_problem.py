import math

import numpy as np
import pytest

from semihyp.problem import (HyperbolicProblem, ProblemError, TraceConvention, check_compat0,
                             check_compat1, split_trace, trace_vector, validate)
from semihyp.solver import manufactured_problem

PI = repr(math.pi)
SINE_PHI = (f"-sin({PI}*x)", f"sin({PI}*x)")


def swap(phi=("0.5", "0.5"), f=("0", "0"), lam=("-1", "1"), h=("v2", "v1")):
    return HyperbolicProblem(2, 1, lam, f, phi, h)


def test_validate_constant_speeds():
    rep = validate(swap(), 1.0)
    assert rep.ok and rep.lambda_min == 1.0


def test_validate_sign_change():
    rep = validate(swap(lam=("x-0.5", "1")), 1.0)
    assert not rep.ok
    assert any("lambda_1" in s for s in rep.issues)


def test_validate_rejects_abs():
    rep = validate(swap(f=("abs(u1)", "0")), 1.0)
    assert not rep.ok
    assert any("abs" in s for s in rep.issues)


def test_structural_errors():
    with pytest.raises(ProblemError):
        HyperbolicProblem(2, 0, ("1", "1"), ("0", "0"), ("0", "0"), ("v1", "v2"))
    with pytest.raises(ProblemError):
        HyperbolicProblem(2, 1, ("-1", "1"), ("0",), ("0", "0"), ("v1", "v2"))
    with pytest.raises(ProblemError):
        swap(h=("u1", "v1"))  # h sees t, v only


def test_trace_convention():
    tc = TraceConvention(3, 2)
    assert [tc.outflow(i) for i in range(3)] == [0.0, 0.0, 1.0]
    assert [tc.inflow(i) for i in range(3)] == [1.0, 1.0, 0.0]
    assert all(tc.outflow(i) != tc.inflow(i) for i in range(3))


def test_trace_vector_layouts():
    left, right = np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0])
    assert trace_vector(left[:2], right[:2], 1).tolist() == [1.0, 5.0]
    assert trace_vector(left, right, 2).tolist() == [1.0, 2.0, 6.0]
    assert trace_vector(left, right, 3).tolist() == [1.0, 2.0, 3.0]


def test_trace_vector_round_trip():
    v = np.array([1.0, 2.0, 3.0])
    left, right = split_trace(v, 2)
    assert trace_vector(left, right, 2).tolist() == v.tolist()


def test_compat0_examples():
    ok = check_compat0(swap(phi=("0.3", "0.3")))
    assert ok.ok and ok.residuals == [0.0, 0.0]
    bad = check_compat0(swap(phi=("x", "1-x")))
    assert not bad.ok and bad.residuals[1] == pytest.approx(1.0, abs=1e-12)
    sine = check_compat0(swap(phi=SINE_PHI))
    assert sine.ok and max(map(abs, sine.residuals)) <= 1e-12


def test_compat1_examples():
    assert check_compat1(swap()).ok
    sine = check_compat1(swap(phi=SINE_PHI))
    assert sine.ok and max(map(abs, sine.residuals)) <= 1e-12
    doubled = check_compat1(swap(phi=SINE_PHI, h=("v2", "2*v1")))
    assert not doubled.ok
    assert doubled.residuals[1] == pytest.approx(math.pi, abs=1e-9)


def test_manufactured_generator_is_compatible():
    p = manufactured_problem(["exp(-t)*x+t^2", "cos(t)*(1-x)"], ["-1-x", "2"], 1)
    assert max(map(abs, check_compat0(p).residuals)) <= 1e-12
    assert max(map(abs, check_compat1(p).residuals)) <= 1e-12
