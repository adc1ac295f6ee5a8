"""Scalar expression language for problem data.

Users write the speeds, right-hand sides, initial data and boundary maps as
plain arithmetic text::

    parse("u1*loglog(16.2 + u1^2 + u2^2)", ["x", "t", "u1", "u2"])

Grammar (``^`` is right-associative, unary minus binds looser than ``^``)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-'? power
    power  := atom ('^' factor)?
    atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'

ASTs are immutable.  :func:`compile_expr` turns one into a callable that
accepts floats or numpy arrays; :func:`differentiate` returns a new AST.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Num", "Var", "Neg", "BinOp", "Call", "Expr",
    "ExprError", "ParseError", "UnknownVariable", "UnknownFunction",
    "ArityError", "DomainError", "NotDifferentiable",
    "FUNCTIONS", "parse", "to_text", "evaluate", "compile_expr",
    "differentiate", "free_vars", "simplify",
]


class ExprError(Exception):
    """Base class for expression errors."""


class ParseError(ExprError):
    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position}")


class UnknownVariable(ParseError):
    pass


class UnknownFunction(ParseError):
    pass


class ArityError(ParseError):
    pass


class DomainError(ExprError):
    def __init__(self, message: str, subexpr: "Expr"):
        self.subexpr = subexpr
        super().__init__(f"{message} in '{to_text(subexpr)}'")


class NotDifferentiable(ExprError):
    pass


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Expr = Num | Var | Neg | BinOp | Call

# name -> arity
FUNCTIONS = {
    "sin": 1, "cos": 1, "exp": 1, "log": 1, "loglog": 1,
    "sqrt": 1, "abs": 1, "tanh": 1,
}


# --------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(source[pos:]) - len(source[pos:].lstrip()))
            raise ParseError(f"unexpected character {source[bad]!r}", bad, source)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, variables: Iterable[str]):
        self.source = source
        self.variables = set(variables)
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, value: str):
        kind, text, pos = self.tok
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", pos, self.source)
        self.advance()

    def error(self, what: str):
        kind, text, pos = self.tok
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"{what}, found {found}", pos, self.source)

    def parse(self) -> Expr:
        if not self.source.strip():
            raise ParseError("empty expression", 0, self.source)
        node = self.expr()
        if self.tok[0] != "end":
            self.error("unexpected token")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.advance()
            return Neg(self.power())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.tok
        if kind == "num":
            self.advance()
            return Num(float(text))
        if kind == "ident":
            self.advance()
            if self.tok[0] == "op" and self.tok[1] == "(":
                if text not in FUNCTIONS:
                    raise UnknownFunction(f"unknown function {text!r}", pos, self.source)
                self.advance()
                args = [self.expr()]
                while self.tok[0] == "op" and self.tok[1] == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[text]:
                    raise ArityError(
                        f"{text} takes {FUNCTIONS[text]} argument(s), got {len(args)}",
                        pos, self.source)
                return Call(text, tuple(args))
            if text not in self.variables:
                raise UnknownVariable(f"unknown variable {text!r}", pos, self.source)
            return Var(text)
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.error("expected a number, name or '('")


def parse(source: str, variables: Iterable[str]) -> Expr:
    """Parse ``source`` with names restricted to ``variables``."""
    return _Parser(source, variables).parse()


# --------------------------------------------------------------------------
# Printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_FACTOR, _POWER = 3, 4


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC.get(node.op, _POWER)
    if isinstance(node, Neg):
        return _FACTOR
    if isinstance(node, Num) and (node.value < 0 or math.copysign(1, node.value) < 0):
        return _FACTOR
    return 5


def _num_text(v: float) -> str:
    if not math.isfinite(v):
        raise ValueError(f"cannot print non-finite literal {v}")
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_text(node: Expr) -> str:
    """Render ``node`` with the minimal parentheses that re-parse to it."""
    if isinstance(node, Num):
        if node.value < 0:
            return "-" + _num_text(-node.value)
        return _num_text(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({','.join(to_text(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        if _prec(node.operand) < _POWER:
            inner = f"({inner})"
        return "-" + inner
    if isinstance(node, BinOp):
        left, right = to_text(node.left), to_text(node.right)
        if node.op == "^":
            if _prec(node.left) <= _POWER:
                left = f"({left})"
            if _prec(node.right) < _FACTOR:
                right = f"({right})"
            return f"{left}^{right}"
        p = _PREC[node.op]
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
        return f"{left}{node.op}{right}"
    raise TypeError(f"not an expression node: {node!r}")


def free_vars(node: Expr) -> frozenset:
    if isinstance(node, Var):
        return frozenset([node.name])
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, Neg):
        return free_vars(node.operand)
    if isinstance(node, BinOp):
        return free_vars(node.left) | free_vars(node.right)
    return frozenset().union(*(free_vars(a) for a in node.args))


# --------------------------------------------------------------------------
# Evaluation


def _check(bad, message: str, node: Expr):
    if np.any(bad):
        raise DomainError(message, node)


def _np_log(a, node):
    _check(np.asarray(a) <= 0, "log of non-positive value", node)
    return np.log(a)


def _np_loglog(a, node):
    _check(np.asarray(a) <= 1, "loglog of value <= 1", node)
    return np.log(np.log(a))


def _np_sqrt(a, node):
    _check(np.asarray(a) < 0, "sqrt of negative value", node)
    return np.sqrt(a)


_NP_FUNCS = {
    "sin": lambda a, node: np.sin(a),
    "cos": lambda a, node: np.cos(a),
    "exp": lambda a, node: np.exp(a),
    "tanh": lambda a, node: np.tanh(a),
    "abs": lambda a, node: np.abs(a),
    "log": _np_log,
    "loglog": _np_loglog,
    "sqrt": _np_sqrt,
}


def _np_div(a, b, node):
    _check(np.asarray(b) == 0, "division by zero", node)
    return np.divide(a, b)


def _np_pow(a, b, node):
    a_arr, b_arr = np.asarray(a), np.asarray(b)
    bad = (a_arr < 0) & (b_arr != np.round(b_arr))
    _check(bad, "non-integer power of negative value", node)
    _check((a_arr == 0) & (b_arr < 0), "zero to a negative power", node)
    return np.power(a, b)


def _mp_funcs():
    import mpmath

    def guard(pred, msg):
        def wrap(f):
            def g(a, node):
                if pred(a):
                    raise DomainError(msg, node)
                return f(a)
            return g
        return wrap

    return {
        "sin": lambda a, node: mpmath.sin(a),
        "cos": lambda a, node: mpmath.cos(a),
        "exp": lambda a, node: mpmath.exp(a),
        "tanh": lambda a, node: mpmath.tanh(a),
        "abs": lambda a, node: abs(a),
        "log": guard(lambda a: a <= 0, "log of non-positive value")(mpmath.log),
        "loglog": guard(lambda a: a <= 1, "loglog of value <= 1")(
            lambda a: mpmath.log(mpmath.log(a))),
        "sqrt": guard(lambda a: a < 0, "sqrt of negative value")(mpmath.sqrt),
    }


def _mp_div(a, b, node):
    if b == 0:
        raise DomainError("division by zero", node)
    return a / b


def _mp_pow(a, b, node):
    if a < 0 and b != int(b):
        raise DomainError("non-integer power of negative value", node)
    if a == 0 and b < 0:
        raise DomainError("zero to a negative power", node)
    return a ** b


def compile_expr(node: Expr, backend: str = "numpy") -> Callable[[Mapping], object]:
    """Compile ``node`` into ``fn(env)``.

    The numpy backend broadcasts over array bindings; the mpmath backend
    evaluates scalars in arbitrary precision (used where magnitudes exceed
    double range).
    """
    if backend == "numpy":
        funcs, div, pow_ = _NP_FUNCS, _np_div, _np_pow
    elif backend == "mpmath":
        import mpmath
        funcs, div, pow_ = _mp_funcs(), _mp_div, _mp_pow
    else:
        raise ValueError(f"unknown backend {backend!r}")

    def build(n: Expr):
        if isinstance(n, Num):
            v = n.value if backend == "numpy" else mpmath.mpf(n.value)
            return lambda env: v
        if isinstance(n, Var):
            name = n.name
            return lambda env: env[name]
        if isinstance(n, Neg):
            inner = build(n.operand)
            return lambda env: -inner(env)
        if isinstance(n, Call):
            fn, arg = funcs[n.func], build(n.args[0])
            return lambda env: fn(arg(env), n)
        left, right = build(n.left), build(n.right)
        if n.op == "+":
            return lambda env: left(env) + right(env)
        if n.op == "-":
            return lambda env: left(env) - right(env)
        if n.op == "*":
            return lambda env: left(env) * right(env)
        if n.op == "/":
            return lambda env: div(left(env), right(env), n)
        return lambda env: pow_(left(env), right(env), n)

    inner = build(node)
    if backend != "numpy":
        return inner

    def run(env):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return inner(env)

    return run


def evaluate(node: Expr, env: Mapping) -> float:
    """Evaluate ``node`` at scalar bindings and return a float."""
    missing = free_vars(node) - set(env)
    if missing:
        raise KeyError(f"unbound variables: {sorted(missing)}")
    return float(compile_expr(node)(env))


# --------------------------------------------------------------------------
# Simplification and differentiation


def _is(node: Expr, value: float) -> bool:
    return isinstance(node, Num) and node.value == value


def _const(value: float) -> Expr:
    if value < 0:
        return Neg(Num(-value))
    return Num(value)


def _const_value(node: Expr):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg) and isinstance(node.operand, Num):
        return -node.operand.value
    return None


def _fold(op: str, a: float, b: float):
    try:
        if op == "+":
            r = a + b
        elif op == "-":
            r = a - b
        elif op == "*":
            r = a * b
        elif op == "/":
            if b == 0:
                return None
            r = a / b
        else:
            if a < 0 and not float(b).is_integer():
                return None
            if a == 0 and b < 0:
                return None
            r = a ** b
    except (OverflowError, ZeroDivisionError):
        return None
    if isinstance(r, complex) or not math.isfinite(r):
        return None
    return float(r)


def _mk(op: str, a: Expr, b: Expr) -> Expr:
    """Build ``a op b`` with constant folding and identity elimination."""
    ca, cb = _const_value(a), _const_value(b)
    if ca is not None and cb is not None:
        r = _fold(op, ca, cb)
        if r is not None:
            return _const(r)
    if op == "+":
        if ca == 0:
            return b
        if cb == 0:
            return a
        if isinstance(b, Neg):
            return BinOp("-", a, b.operand)
    elif op == "-":
        if cb == 0:
            return a
        if ca == 0:
            return _neg(b)
    elif op == "*":
        if ca == 0 or cb == 0:
            return Num(0.0)
        if ca == 1:
            return b
        if cb == 1:
            return a
        if ca == -1:
            return _neg(b)
        if cb == -1:
            return _neg(a)
    elif op == "/":
        if ca == 0:
            return Num(0.0)
        if cb == 1:
            return a
    elif op == "^":
        if cb == 1:
            return a
        if cb == 0:
            return Num(1.0)
    return BinOp(op, a, b)


def _neg(a: Expr) -> Expr:
    c = _const_value(a)
    if c is not None:
        return _const(-c)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def simplify(node: Expr) -> Expr:
    """Constant folding and identity elimination, bottom-up."""
    if isinstance(node, (Num, Var)):
        return node
    if isinstance(node, Neg):
        return _neg(simplify(node.operand))
    if isinstance(node, Call):
        args = tuple(simplify(a) for a in node.args)
        call = Call(node.func, args)
        if all(_const_value(a) is not None for a in args):
            try:
                v = evaluate(call, {})
            except ExprError:
                return call
            if math.isfinite(v):
                return _const(v)
        return call
    return _mk(node.op, simplify(node.left), simplify(node.right))


def differentiate(node: Expr, var: str) -> Expr:
    """Exact partial derivative of ``node`` with respect to ``var``."""
    return _d(node, var)


def _d(n: Expr, v: str) -> Expr:
    if isinstance(n, Num):
        return Num(0.0)
    if isinstance(n, Var):
        return Num(1.0 if n.name == v else 0.0)
    if v not in free_vars(n):
        return Num(0.0)
    if isinstance(n, Neg):
        return _neg(_d(n.operand, v))
    if isinstance(n, Call):
        a = n.args[0]
        da = _d(a, v)
        f = n.func
        if f == "abs":
            raise NotDifferentiable(f"abs is not differentiable: '{to_text(n)}'")
        if f == "sin":
            outer = Call("cos", (a,))
        elif f == "cos":
            outer = _neg(Call("sin", (a,)))
        elif f == "exp":
            outer = n
        elif f == "log":
            return _mk("/", da, a)
        elif f == "loglog":
            return _mk("/", da, _mk("*", a, Call("log", (a,))))
        elif f == "sqrt":
            return _mk("/", da, _mk("*", Num(2.0), n))
        elif f == "tanh":
            outer = _mk("-", Num(1.0), _mk("^", n, Num(2.0)))
        else:  # pragma: no cover - FUNCTIONS and this table move together
            raise NotDifferentiable(f"no derivative rule for {f}")
        return _mk("*", outer, da)
    a, b = n.left, n.right
    if n.op in "+-":
        return _mk(n.op, _d(a, v), _d(b, v))
    if n.op == "*":
        return _mk("+", _mk("*", _d(a, v), b), _mk("*", a, _d(b, v)))
    if n.op == "/":
        num = _mk("-", _mk("*", _d(a, v), b), _mk("*", a, _d(b, v)))
        return _mk("/", num, _mk("^", b, Num(2.0)))
    # power
    if v not in free_vars(b):
        c = _const_value(b)
        lowered = _const(c - 1.0) if c is not None else _mk("-", b, Num(1.0))
        return _mk("*", _mk("*", b, _mk("^", a, lowered)), _d(a, v))
    if v not in free_vars(a):
        return _mk("*", _mk("*", n, Call("log", (a,))), _d(b, v))
    inner = _mk("+", _mk("*", _d(b, v), Call("log", (a,))),
                _mk("/", _mk("*", b, _d(a, v)), a))
    return _mk("*", n, inner)


def substitute(node: Expr, bindings: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions, then simplify."""
    def go(n):
        if isinstance(n, Var):
            return bindings.get(n.name, n)
        if isinstance(n, Num):
            return n
        if isinstance(n, Neg):
            return Neg(go(n.operand))
        if isinstance(n, Call):
            return Call(n.func, tuple(go(x) for x in n.args))
        return BinOp(n.op, go(n.left), go(n.right))
    return simplify(go(node))


def parse_many(sources: Sequence[str], variables: Iterable[str]) -> list:
    variables = list(variables)
    return [parse(s, variables) for s in sources]
