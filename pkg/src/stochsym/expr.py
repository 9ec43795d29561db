"""Expression trees over the variables x, t and w.

A deliberately small hand-rolled AST: parsing, printing, evaluation, exact
rule-based differentiation and numeric identity testing.  There is no
canonical simplifier; identity checks are probabilistic sampling tests on
Chebyshev grids, which is all the residual-style verification in this
toolkit needs.

Node kinds: constants, the variables x/t/w, sums, differences, products,
quotients, powers with constant exponent, exp, log, sqrt, negation, and an
``External`` escape hatch wrapping a numeric function (used for numeric
antiderivatives and ODE-defined functions; differentiable only through
registered partials).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import (
    EvalDomainError,
    IndeterminateError,
    NotSupportedError,
    ParseError,
    UnboundVariableError,
)

VARIABLES = ("x", "t", "w")

#: relative tolerance of the sampling identity tests
EPS_IDENTITY = 1e-9


class Expr:
    """Base class of all nodes.  Instances are immutable and shareable."""

    __slots__ = ()

    def __str__(self) -> str:
        return _print(self, 0)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self})"


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: float


@dataclass(frozen=True, repr=False)
class Var(Expr):
    name: str

    def __post_init__(self):
        if self.name not in VARIABLES:
            raise ValueError(f"unknown variable {self.name!r}")


@dataclass(frozen=True, repr=False)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    child: Expr


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    """Power with a constant real exponent."""

    base: Expr
    exponent: float


@dataclass(frozen=True, repr=False)
class Exp(Expr):
    child: Expr


@dataclass(frozen=True, repr=False)
class Log(Expr):
    child: Expr


@dataclass(frozen=True, repr=False)
class Sqrt(Expr):
    child: Expr


@dataclass(frozen=True, eq=False, repr=False)
class External(Expr):
    """Numeric function of one or more variables, e.g. an antiderivative
    computed by quadrature.  Compared by identity, not structurally.

    ``partials`` maps a variable name to a thunk returning the partial
    derivative as an Expr; thunks keep mutually recursive definitions
    (sin/cos pairs, ODE solutions) constructible.
    """

    name: str
    fn: Callable[..., float]
    vars: tuple[str, ...]
    partials: Mapping[str, Callable[[], Expr]]


X = Var("x")
T = Var("t")
W = Var("w")
ZERO = Const(0.0)
ONE = Const(1.0)


# ---------------------------------------------------------------------------
# smart constructors (constant folding + trivial-identity cleanup)

def const(v: float) -> Const:
    return Const(float(v))


def _is_const(e: Expr, v: float | None = None) -> bool:
    return isinstance(e, Const) and (v is None or e.value == v)


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if a == b:
        return ZERO
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b) and b.value != 0.0:
        return const(a.value / b.value)
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if _is_const(a):
        return const(-a.value)
    if isinstance(a, Neg):
        return a.child
    return Neg(a)


def powc(base: Expr, exponent: float) -> Expr:
    exponent = float(exponent)
    if exponent == 1.0:
        return base
    if exponent == 0.0:
        return ONE
    if _is_const(base):
        try:
            return const(_checked_pow(base.value, exponent))
        except EvalDomainError:
            pass
    return Pow(base, exponent)


def exp(a: Expr) -> Expr:
    if _is_const(a) and abs(a.value) < 700:
        return const(math.exp(a.value))
    return Exp(a)


def log(a: Expr) -> Expr:
    if _is_const(a) and a.value > 0:
        return const(math.log(a.value))
    return Log(a)


def sqrt(a: Expr) -> Expr:
    if _is_const(a) and a.value >= 0:
        return const(math.sqrt(a.value))
    return Sqrt(a)


def external(name: str, fn: Callable[..., float], vars: Iterable[str],
             partials: Mapping[str, Callable[[], Expr]] | None = None) -> External:
    return External(name, fn, tuple(vars), dict(partials or {}))


def linear(c0: float, c1: float, v: Expr) -> Expr:
    """c0 + c1*v, folded."""
    return add(const(c0), mul(const(c1), v))


# ---------------------------------------------------------------------------
# evaluation

def _checked_pow(base: float, exponent: float) -> float:
    if base == 0.0:
        if exponent < 0:
            raise EvalDomainError("0 raised to a negative power")
        return 0.0 if exponent > 0 else 1.0
    if base < 0.0 and exponent != round(exponent):
        raise EvalDomainError("negative base with non-integer exponent")
    try:
        r = math.pow(base, exponent)
    except (OverflowError, ValueError) as e:
        raise EvalDomainError(f"power overflow: {base}^{exponent}") from e
    return r


def _require_finite(v: float, what: str) -> float:
    if not math.isfinite(v):
        raise EvalDomainError(f"non-finite value in {what}")
    return v


def evaluate(e: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate at a point.  Raises :class:`EvalDomainError` on singular
    points instead of returning a non-finite value, and
    :class:`UnboundVariableError` if a free variable is missing."""
    return _eval_scale(e, bindings)[0]


def evaluate_with_scale(e: Expr, bindings: Mapping[str, float]) -> tuple[float, float]:
    """Evaluate and also report the largest magnitude attained by any
    sub-term; the scale normalizes the identity tests below."""
    return _eval_scale(e, bindings)


def _eval_scale(e: Expr, b: Mapping[str, float]) -> tuple[float, float]:
    if isinstance(e, Const):
        return e.value, abs(e.value)
    if isinstance(e, Var):
        if e.name not in b:
            raise UnboundVariableError(f"unbound variable {e.name!r}")
        v = float(b[e.name])
        return v, abs(v)
    if isinstance(e, (Add, Sub, Mul, Div)):
        lv, ls = _eval_scale(e.left, b)
        rv, rs = _eval_scale(e.right, b)
        if isinstance(e, Add):
            v = lv + rv
        elif isinstance(e, Sub):
            v = lv - rv
        elif isinstance(e, Mul):
            v = lv * rv
        else:
            if rv == 0.0:
                raise EvalDomainError("division by zero")
            v = lv / rv
        v = _require_finite(v, type(e).__name__.lower())
        return v, max(ls, rs, abs(v))
    if isinstance(e, Neg):
        v, s = _eval_scale(e.child, b)
        return -v, s
    if isinstance(e, Pow):
        cv, cs = _eval_scale(e.base, b)
        v = _require_finite(_checked_pow(cv, e.exponent), "power")
        return v, max(cs, abs(v))
    if isinstance(e, Exp):
        cv, cs = _eval_scale(e.child, b)
        try:
            v = math.exp(cv)
        except OverflowError as err:
            raise EvalDomainError("exp overflow") from err
        return v, max(cs, abs(v))
    if isinstance(e, Log):
        cv, cs = _eval_scale(e.child, b)
        if cv <= 0.0:
            raise EvalDomainError("log of a non-positive number")
        v = math.log(cv)
        return v, max(cs, abs(v))
    if isinstance(e, Sqrt):
        cv, cs = _eval_scale(e.child, b)
        if cv < 0.0:
            raise EvalDomainError("sqrt of a negative number")
        v = math.sqrt(cv)
        return v, max(cs, abs(v))
    if isinstance(e, External):
        try:
            args = [float(b[v]) for v in e.vars]
        except KeyError as err:
            raise UnboundVariableError(f"unbound variable {err.args[0]!r}") from err
        v = _require_finite(float(e.fn(*args)), f"external {e.name}")
        return v, abs(v)
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# differentiation

def differentiate(e: Expr, v: str) -> Expr:
    """Exact partial derivative with respect to one of x, t, w."""
    if v not in VARIABLES:
        raise ValueError(f"cannot differentiate with respect to {v!r}")
    return _diff(e, v)


def _diff(e: Expr, v: str) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Add):
        return add(_diff(e.left, v), _diff(e.right, v))
    if isinstance(e, Sub):
        return sub(_diff(e.left, v), _diff(e.right, v))
    if isinstance(e, Mul):
        return add(mul(_diff(e.left, v), e.right), mul(e.left, _diff(e.right, v)))
    if isinstance(e, Div):
        num = sub(mul(_diff(e.left, v), e.right), mul(e.left, _diff(e.right, v)))
        return div(num, powc(e.right, 2.0))
    if isinstance(e, Neg):
        return neg(_diff(e.child, v))
    if isinstance(e, Pow):
        return mul(mul(const(e.exponent), powc(e.base, e.exponent - 1.0)),
                   _diff(e.base, v))
    if isinstance(e, Exp):
        return mul(e, _diff(e.child, v))
    if isinstance(e, Log):
        return div(_diff(e.child, v), e.child)
    if isinstance(e, Sqrt):
        return div(_diff(e.child, v), mul(const(2.0), e))
    if isinstance(e, External):
        if v not in e.vars:
            return ZERO
        thunk = e.partials.get(v)
        if thunk is None:
            raise NotSupportedError(
                f"no partial d/d{v} registered for external function {e.name!r}")
        return thunk()
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# structure utilities

def free_variables(e: Expr) -> set[str]:
    if isinstance(e, Const):
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, (Add, Sub, Mul, Div)):
        return free_variables(e.left) | free_variables(e.right)
    if isinstance(e, (Neg, Exp, Log, Sqrt)):
        return free_variables(e.child)
    if isinstance(e, Pow):
        return free_variables(e.base)
    if isinstance(e, External):
        return set(e.vars)
    raise TypeError(f"unknown node {e!r}")


def substitute(e: Expr, v: str, replacement: Expr | float) -> Expr:
    """Replace every occurrence of variable ``v`` by ``replacement``."""
    r = const(replacement) if isinstance(replacement, (int, float)) else replacement
    return _subs(e, v, r)


def _subs(e: Expr, v: str, r: Expr) -> Expr:
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return r if e.name == v else e
    if isinstance(e, Add):
        return add(_subs(e.left, v, r), _subs(e.right, v, r))
    if isinstance(e, Sub):
        return sub(_subs(e.left, v, r), _subs(e.right, v, r))
    if isinstance(e, Mul):
        return mul(_subs(e.left, v, r), _subs(e.right, v, r))
    if isinstance(e, Div):
        return div(_subs(e.left, v, r), _subs(e.right, v, r))
    if isinstance(e, Neg):
        return neg(_subs(e.child, v, r))
    if isinstance(e, Pow):
        return powc(_subs(e.base, v, r), e.exponent)
    if isinstance(e, Exp):
        return exp(_subs(e.child, v, r))
    if isinstance(e, Log):
        return log(_subs(e.child, v, r))
    if isinstance(e, Sqrt):
        return sqrt(_subs(e.child, v, r))
    if isinstance(e, External):
        if v not in e.vars:
            return e
        if not isinstance(r, Const):
            raise NotSupportedError(
                f"external function {e.name!r} only supports substitution by a constant")
        return _bind_external(e, v, r.value)
    raise TypeError(f"unknown node {e!r}")


def _bind_external(e: External, v: str, value: float) -> Expr:
    rest = tuple(u for u in e.vars if u != v)
    idx = e.vars.index(v)

    def bound(*args, _fn=e.fn, _idx=idx, _value=value):
        full = list(args)
        full.insert(_idx, _value)
        return _fn(*full)

    if not rest:
        return const(float(e.fn(value)))
    partials = {
        u: (lambda _u=u, _e=e, _v=v, _val=value: substitute(_e.partials[_u](), _v, _val))
        for u in rest if u in e.partials
    }
    return External(f"{e.name}|{v}={value:g}", bound, rest, partials)


# ---------------------------------------------------------------------------
# vectorized evaluation (internal fast path for grids and ensembles)

def lambdify(e: Expr, vars: tuple[str, ...]) -> Callable[..., np.ndarray]:
    """Compile to a numpy-broadcasting callable over the given variables.

    Unlike :func:`evaluate`, singular points yield IEEE nan/inf silently;
    callers are expected to run under ``np.errstate`` and screen the output.
    """
    missing = free_variables(e) - set(vars)
    if missing:
        raise UnboundVariableError(f"unbound variables {sorted(missing)}")
    f = _build(e, vars)

    def wrapped(*args):
        arrs = [np.asarray(a, dtype=float) for a in args]
        with np.errstate(all="ignore"):
            out = f(*arrs)
        if arrs:
            shape = np.broadcast(*arrs).shape
            return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()
        return np.asarray(out, dtype=float)

    return wrapped


def _build(e: Expr, vars: tuple[str, ...]):
    if isinstance(e, Const):
        v = e.value
        return lambda *a: v
    if isinstance(e, Var):
        i = vars.index(e.name)
        return lambda *a: a[i]
    if isinstance(e, (Add, Sub, Mul, Div)):
        fl, fr = _build(e.left, vars), _build(e.right, vars)
        op = {Add: np.add, Sub: np.subtract, Mul: np.multiply, Div: np.divide}[type(e)]
        return lambda *a: op(fl(*a), fr(*a))
    if isinstance(e, Neg):
        fc = _build(e.child, vars)
        return lambda *a: -fc(*a)
    if isinstance(e, Pow):
        fc, c = _build(e.base, vars), e.exponent
        return lambda *a: np.power(fc(*a), c)
    if isinstance(e, Exp):
        fc = _build(e.child, vars)
        return lambda *a: np.exp(fc(*a))
    if isinstance(e, Log):
        fc = _build(e.child, vars)
        return lambda *a: np.log(fc(*a))
    if isinstance(e, Sqrt):
        fc = _build(e.child, vars)
        return lambda *a: np.sqrt(fc(*a))
    if isinstance(e, External):
        idx = [vars.index(v) for v in e.vars]
        ufn = np.frompyfunc(e.fn, len(e.vars), 1)

        def ext_eval(*a):
            return np.asarray(ufn(*[a[i] for i in idx]), dtype=float)

        return ext_eval
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# printing

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 10, 20, 30, 40, 50


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _prec(e: Expr) -> int:
    if isinstance(e, (Add, Sub)):
        return _PREC_ADD
    if isinstance(e, (Mul, Div)):
        return _PREC_MUL
    if isinstance(e, Neg) or (isinstance(e, Const) and e.value < 0):
        return _PREC_NEG
    if isinstance(e, Pow):
        return _PREC_POW
    return _PREC_ATOM


def _print(e: Expr, _level: int) -> str:
    if isinstance(e, Const):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, (Add, Sub, Mul, Div)):
        p = _prec(e)
        sym = {Add: " + ", Sub: " - ", Mul: "*", Div: "/"}[type(e)]
        ls = _print(e.left, 0)
        rs = _print(e.right, 0)
        if _prec(e.left) < p:
            ls = f"({ls})"
        # binary operators are left-associative: a right child at the same
        # precedence level must keep its parentheses to round-trip
        if _prec(e.right) <= p:
            rs = f"({rs})"
        return f"{ls}{sym}{rs}"
    if isinstance(e, Neg):
        cs = _print(e.child, 0)
        if _prec(e.child) <= _PREC_MUL:
            cs = f"({cs})"
        return f"-{cs}"
    if isinstance(e, Pow):
        bs = _print(e.base, 0)
        if _prec(e.base) < _PREC_ATOM:
            bs = f"({bs})"
        return f"{bs}^{_fmt_num(e.exponent)}"
    if isinstance(e, Exp):
        return f"exp({_print(e.child, 0)})"
    if isinstance(e, Log):
        return f"log({_print(e.child, 0)})"
    if isinstance(e, Sqrt):
        return f"sqrt({_print(e.child, 0)})"
    if isinstance(e, External):
        return f"{e.name}({', '.join(e.vars)})"
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)

_FUNCTIONS = {"exp": exp, "log": log, "sqrt": sqrt}
_CONSTANTS = {"pi": math.pi, "e": math.e}


class _Parser:
    def __init__(self, text: str, fold: bool):
        self.text = text
        self.fold = fold
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                stripped = pos
                while stripped < len(text) and text[stripped].isspace():
                    stripped += 1
                if stripped >= len(text):
                    break
                raise ParseError(f"unexpected character {text[stripped]!r}", stripped + 1)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind) + 1))
            pos = m.end()
        self.tokens.append(("end", "", len(text) + 1))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.peek()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}", pos)
        return self.next()

    # expression := term (('+'|'-') term)*
    def expression(self) -> Expr:
        e = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                rhs = self.term()
                e = self._mk(add if val == "+" else sub, Add if val == "+" else Sub,
                             e, rhs)
            else:
                return e

    # term := unary (('*'|'/') unary)*
    def term(self) -> Expr:
        e = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.next()
                rhs = self.unary()
                e = self._mk(mul if val == "*" else div, Mul if val == "*" else Div,
                             e, rhs)
            else:
                return e

    # unary := '-' unary | power
    def unary(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.next()
            child = self.unary()
            return neg(child) if self.fold else Neg(child)
        return self.power()

    # power := atom ('^' unary)?   (right-associative, constant exponent)
    def power(self) -> Expr:
        base = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.next()
            _, _, epos = self.peek()
            exponent = self.unary()
            folded = _fold_to_const(exponent)
            if isinstance(base, Const) and base.value == math.e:
                # e^u is sugar for exp(u); any exponent allowed
                return exp(exponent) if self.fold else Exp(exponent)
            if folded is None:
                raise ParseError("exponent must be a constant", epos)
            if self.fold:
                return powc(base, folded)
            return Pow(base, folded)
        return base

    def atom(self) -> Expr:
        kind, val, pos = self.next()
        if kind == "num":
            return Const(float(val))
        if kind == "ident":
            if val in VARIABLES:
                return Var(val)
            if val in _CONSTANTS:
                return Const(_CONSTANTS[val])
            if val in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expression()
                self.expect_op(")")
                if self.fold:
                    return _FUNCTIONS[val](arg)
                return {"exp": Exp, "log": Log, "sqrt": Sqrt}[val](arg)
            raise ParseError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            e = self.expression()
            self.expect_op(")")
            return e
        raise ParseError("expected expression", pos)

    def _mk(self, smart, raw, a, b):
        return smart(a, b) if self.fold else raw(a, b)


def _fold_to_const(e: Expr) -> float | None:
    """Value of a closed constant subtree, or None."""
    if not free_variables(e):
        try:
            return evaluate(e, {})
        except EvalDomainError:
            return None
    return None


def parse(text: str, fold: bool = True) -> Expr:
    """Parse an expression string.

    Grammar: infix with precedence ``^`` > unary ``-`` > ``* /`` > ``+ -``,
    functions exp/log/sqrt, variables x t w, named constants pi and e,
    decimal literals; whitespace is insignificant.  ``fold=False`` disables
    constant folding (used to test that folding never changes values).
    """
    p = _Parser(text, fold)
    e = p.expression()
    kind, val, pos = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected trailing input {val!r}", pos)
    return e


# ---------------------------------------------------------------------------
# identity testing on sample grids

def chebyshev_nodes(a: float, b: float, n: int) -> np.ndarray:
    """n Chebyshev-distributed points in the open interval (a, b)."""
    k = np.arange(n)
    return 0.5 * (a + b) + 0.5 * (b - a) * np.cos((2 * k + 1) * np.pi / (2 * n))


def is_identically_zero(e: Expr, interval: tuple[float, float], var: str = "x",
                        *, eps: float = EPS_IDENTITY, n: int = 64,
                        bindings: Mapping[str, float] | None = None) -> bool:
    """Probabilistic structural-identity test: true iff |e| < eps*(1+scale)
    at ``n`` Chebyshev points, where scale is the largest magnitude of any
    sub-term of e at that point.  Singular sample points are skipped; if all
    of them are singular the test is indeterminate and raises."""
    a, b = interval
    if not a < b:
        raise ValueError(f"empty interval {interval}")
    base = dict(bindings or {})
    ok = 0
    for xv in chebyshev_nodes(a, b, n):
        base[var] = float(xv)
        try:
            v, scale = evaluate_with_scale(e, base)
        except EvalDomainError:
            continue
        ok += 1
        if abs(v) >= eps * (1.0 + scale):
            return False
    if ok == 0:
        raise IndeterminateError("all sample points of the identity test were singular")
    return True


def is_identically_zero_on_box(e: Expr, bounds: Mapping[str, tuple[float, float]],
                               *, eps: float = EPS_IDENTITY, n: int = 64) -> bool:
    """Multi-variable variant sampling a Chebyshev product grid with roughly
    ``n`` points in total."""
    names = sorted(bounds)
    if not names:
        raise ValueError("no variables to sample")
    per_axis = max(2, int(round(n ** (1.0 / len(names)))))
    axes = [chebyshev_nodes(*bounds[name], per_axis) for name in names]
    grids = np.meshgrid(*axes, indexing="ij")
    ok = 0
    for point in zip(*(g.ravel() for g in grids)):
        b = {name: float(v) for name, v in zip(names, point)}
        try:
            v, scale = evaluate_with_scale(e, b)
        except EvalDomainError:
            continue
        ok += 1
        if abs(v) >= eps * (1.0 + scale):
            return False
    if ok == 0:
        raise IndeterminateError("all sample points of the identity test were singular")
    return True


def antiderivative(integrand: Expr, var: str = "t", *, lower: float = 0.0,
                   name: str | None = None) -> External:
    """Numeric antiderivative node: F(s) = integral of ``integrand`` from
    ``lower`` to s, with d/d{var} F = integrand registered exactly."""
    from functools import lru_cache
    from scipy.integrate import quad

    extra = free_variables(integrand) - {var}
    if extra:
        raise NotSupportedError(
            f"antiderivative integrand must depend on {var!r} only, got {sorted(extra)}")
    f = lambdify(integrand, (var,))

    @lru_cache(maxsize=4096)
    def F(s: float) -> float:
        val, _ = quad(lambda u: float(f(u)), lower, s, epsabs=1e-12, epsrel=1e-12,
                      limit=200)
        return val

    label = name or f"Int({integrand})"
    return external(label, F, (var,), {var: lambda: integrand})
