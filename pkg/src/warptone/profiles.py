"""Radial profile functions given as expressions in a small language.

A profile is a function of the single variable t on [0, inf) or (0, inf),
entered as text like ``t*exp(t^2)`` or ``sinh(2*t)/2``.  Parsing produces a
small AST; differentiation is symbolic (so first and second derivatives are
exact, not finite differences); evaluation is plain IEEE double, vectorised
over numpy arrays.

Two evaluation paths exist:

* :func:`eval_expr` returns ordinary floats and raises a typed
  :class:`DomainError` on any invalid operation (log of a nonpositive value,
  division by zero, overflow) -- never a silent NaN/inf.
* :func:`eval_log` returns ``(sign, log|value|)`` pairs.  Weight functions in
  the eigenvalue machinery grow like exp(t^2) and overflow float64 long before
  the interesting scan radii are reached; everything downstream consumes
  log-magnitudes and differences of them, which stay O(1).

Grammar (^ right-associative, binds tighter than unary minus, which binds
tighter than * and /):

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := ("-") factor | base ("^" factor)?
    base   := number | "t" | ident "(" expr ")" | "(" expr ")"
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "Expr", "Profile", "ExpressionSyntaxError", "DomainError",
    "parse_profile", "differentiate", "eval_expr", "eval_log", "to_source",
    "preset_profile", "constant_profile", "PRESET_NAMES",
    "const", "var", "neg", "add", "sub", "mul", "div", "pow_", "call",
]

CALLS = ("exp", "log", "sqrt", "sin", "cos", "sinh", "cosh", "tanh", "coth")
_BINARY = ("add", "sub", "mul", "div", "pow")


class ExpressionSyntaxError(ValueError):
    """Raised on malformed profile source; carries the character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.position = position


class DomainError(ArithmeticError):
    """An evaluation touched a point outside the expression's domain."""

    def __init__(self, reason: str, at: float | None = None):
        loc = "" if at is None else f" at t={at!r}"
        super().__init__(reason + loc)
        self.reason = reason
        self.at = at


@dataclass(frozen=True)
class Expr:
    """AST node: a constant, the variable t, or an operation over children."""

    kind: str
    value: float = 0.0
    args: tuple["Expr", ...] = ()

    def __post_init__(self):
        arity = {"const": 0, "var": 0, "neg": 1}.get(self.kind)
        if arity is None:
            arity = 2 if self.kind in _BINARY else (1 if self.kind in CALLS else -1)
        if arity < 0:
            raise ValueError(f"unknown node kind {self.kind!r}")
        if len(self.args) != arity:
            raise ValueError(f"{self.kind} expects {arity} children, got {len(self.args)}")


def const(x: float) -> Expr:
    return Expr("const", value=float(x))


def var() -> Expr:
    return Expr("var")


def neg(e: Expr) -> Expr:
    return Expr("neg", args=(e,))


def add(a: Expr, b: Expr) -> Expr:
    return Expr("add", args=(a, b))


def sub(a: Expr, b: Expr) -> Expr:
    return Expr("sub", args=(a, b))


def mul(a: Expr, b: Expr) -> Expr:
    return Expr("mul", args=(a, b))


def div(a: Expr, b: Expr) -> Expr:
    return Expr("div", args=(a, b))


def pow_(a: Expr, b: Expr) -> Expr:
    return Expr("pow", args=(a, b))


def call(name: str, e: Expr) -> Expr:
    if name not in CALLS:
        raise ValueError(f"unknown function {name!r}")
    return Expr(name, args=(e,))


# ---------------------------------------------------------------------------
# tokenizer / parser
# ---------------------------------------------------------------------------

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.pos = 0

    def error(self, message: str) -> ExpressionSyntaxError:
        return ExpressionSyntaxError(message, self.pos)

    def skip_ws(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def take(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def expect(self, ch: str):
        if not self.take(ch):
            raise self.error(f"expected {ch!r}")

    def parse(self) -> Expr:
        e = self.expr()
        self.skip_ws()
        if self.pos != len(self.src):
            raise self.error(f"unexpected {self.src[self.pos]!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            if self.take("+"):
                e = add(e, self.term())
            elif self.take("-"):
                e = sub(e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while True:
            if self.take("*"):
                e = mul(e, self.factor())
            elif self.take("/"):
                e = div(e, self.factor())
            else:
                return e

    def factor(self) -> Expr:
        if self.take("-"):
            return neg(self.factor())
        e = self.base()
        if self.take("^"):
            return pow_(e, self.factor())
        return e

    def base(self) -> Expr:
        c = self.peek()
        if not c:
            raise self.error("unexpected end of input")
        if c.isdigit() or c == ".":
            m = _NUMBER.match(self.src, self.pos)
            if not m:
                raise self.error("malformed number")
            self.pos = m.end()
            return const(float(m.group()))
        if c == "(":
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        m = _IDENT.match(self.src, self.pos)
        if not m:
            raise self.error(f"unexpected {c!r}")
        name = m.group()
        if name == "t":
            self.pos = m.end()
            return var()
        if name in CALLS:
            self.pos = m.end()
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return call(name, e)
        raise self.error(f"unknown identifier {name!r}")


def parse_profile(src: str) -> Expr:
    """Parse profile source text into an AST."""
    if not src or not src.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return _Parser(src).parse()


# ---------------------------------------------------------------------------
# pretty printing
# ---------------------------------------------------------------------------

# precedence: +/- = 1, */ = 2, unary minus = 2.5, ^ = 3, atoms = 4
def _prec(e: Expr) -> float:
    if e.kind in ("add", "sub"):
        return 1.0
    if e.kind in ("mul", "div"):
        return 2.0
    if e.kind == "neg" or (e.kind == "const" and e.value < 0):
        return 2.5
    if e.kind == "pow":
        return 3.0
    return 4.0


def _fmt_const(x: float) -> str:
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def to_source(e: Expr) -> str:
    """Render an AST back to source.

    Grouping is preserved exactly (right operands at equal precedence are
    parenthesised), so re-parsing yields an AST that evaluates bit-for-bit
    identically.
    """
    def wrap(child: Expr, minimum: float, strict: bool = False) -> str:
        p = _prec(child)
        s = to_source(child)
        if p < minimum or (strict and p == minimum):
            return f"({s})"
        return s

    k = e.kind
    if k == "const":
        return _fmt_const(e.value)
    if k == "var":
        return "t"
    if k == "neg":
        return "-" + wrap(e.args[0], 2.5)
    if k == "add":
        return f"{wrap(e.args[0], 1.0)}+{wrap(e.args[1], 1.0, strict=True)}"
    if k == "sub":
        return f"{wrap(e.args[0], 1.0)}-{wrap(e.args[1], 1.0, strict=True)}"
    if k == "mul":
        return f"{wrap(e.args[0], 2.0)}*{wrap(e.args[1], 2.0, strict=True)}"
    if k == "div":
        return f"{wrap(e.args[0], 2.0)}/{wrap(e.args[1], 2.0, strict=True)}"
    if k == "pow":
        # left operand must be a bare base; right operand is a factor
        return f"{wrap(e.args[0], 3.0, strict=True)}^{wrap(e.args[1], 2.5)}"
    return f"{k}({to_source(e.args[0])})"


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _first_bad(t: np.ndarray, bad: np.ndarray) -> float | None:
    if t.ndim == 0:
        return float(t)
    idx = np.nonzero(np.atleast_1d(bad))[0]
    return float(t.flat[idx[0]]) if idx.size else None


def _eval(e: Expr, t: np.ndarray) -> np.ndarray:
    k = e.kind
    if k == "const":
        return np.full_like(t, e.value)
    if k == "var":
        return t.copy()
    if k == "neg":
        return -_eval(e.args[0], t)
    if k in ("add", "sub", "mul", "div", "pow"):
        a = _eval(e.args[0], t)
        b = _eval(e.args[1], t)
        if k == "add":
            return a + b
        if k == "sub":
            return a - b
        if k == "mul":
            return a * b
        if k == "div":
            if np.any(b == 0.0):
                raise DomainError("division by zero", _first_bad(t, b == 0.0))
            return a / b
        # pow
        nonint = b != np.floor(b)
        if np.any((a < 0) & nonint):
            raise DomainError("negative base with non-integer exponent",
                              _first_bad(t, (a < 0) & nonint))
        if np.any((a == 0) & (b < 0)):
            raise DomainError("division by zero", _first_bad(t, (a == 0) & (b < 0)))
        return np.power(a, b)
    u = _eval(e.args[0], t)
    if k == "exp":
        return np.exp(u)
    if k == "log":
        if np.any(u <= 0.0):
            raise DomainError("log of a nonpositive value", _first_bad(t, u <= 0.0))
        return np.log(u)
    if k == "sqrt":
        if np.any(u < 0.0):
            raise DomainError("sqrt of a negative value", _first_bad(t, u < 0.0))
        return np.sqrt(u)
    if k == "sin":
        return np.sin(u)
    if k == "cos":
        return np.cos(u)
    if k == "sinh":
        return np.sinh(u)
    if k == "cosh":
        return np.cosh(u)
    if k == "tanh":
        return np.tanh(u)
    # coth
    if np.any(u == 0.0):
        raise DomainError("division by zero", _first_bad(t, u == 0.0))
    return 1.0 / np.tanh(u)


def eval_expr(e: Expr, t) -> Union[float, np.ndarray]:
    """Evaluate at scalar or array t.  Raises DomainError, never returns NaN/inf."""
    arr = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        out = _eval(e, arr)
    bad = ~np.isfinite(out)
    if np.any(bad):
        raise DomainError("overflow or invalid value", _first_bad(arr, bad))
    if arr.ndim == 0:
        return float(out)
    return out


_LOG2 = math.log(2.0)


def _signed_sum(s1, l1, s2, l2, flip2: bool):
    """Combine (sign, log|x|) pairs for x1 + x2 (or x1 - x2 when flip2)."""
    if flip2:
        s2 = -s2
    prod = s1 * s2
    hi = np.maximum(l1, l2)
    lo = np.minimum(l1, l2)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore", under="ignore"):
        delta = np.exp(lo - hi)                 # in [0, 1]; nan only if both -inf
        l_same = hi + np.log1p(delta)
        l_opp = hi + np.log1p(-delta)           # -inf on exact cancellation
    l = np.where(prod > 0, l_same, np.where(prod < 0, l_opp, hi))
    s_larger = np.where(l1 >= l2, s1, s2)
    # prod == 0 means at least one operand is zero: the sum of signs is the
    # surviving sign and hi is the surviving magnitude
    s = np.where(prod > 0, s1, np.where(prod < 0, s_larger, s1 + s2))
    s = np.where(np.isneginf(l), 0.0, s)
    return s, l


def _eval_log(e: Expr, t: np.ndarray):
    """Return (sign, log|value|) arrays.  -inf log encodes an exact zero."""
    k = e.kind
    if k == "const":
        s = np.full_like(t, float(np.sign(e.value)))
        l = np.full_like(t, math.log(abs(e.value)) if e.value != 0.0 else -np.inf)
        return s, l
    if k == "var":
        with np.errstate(divide="ignore"):
            return np.sign(t), np.where(t == 0.0, -np.inf, np.log(np.abs(t)))
    if k == "neg":
        s, l = _eval_log(e.args[0], t)
        return -s, l
    if k in ("add", "sub"):
        s1, l1 = _eval_log(e.args[0], t)
        s2, l2 = _eval_log(e.args[1], t)
        return _signed_sum(s1, l1, s2, l2, flip2=(k == "sub"))
    if k == "mul":
        s1, l1 = _eval_log(e.args[0], t)
        s2, l2 = _eval_log(e.args[1], t)
        return s1 * s2, l1 + l2
    if k == "div":
        s1, l1 = _eval_log(e.args[0], t)
        s2, l2 = _eval_log(e.args[1], t)
        if np.any(s2 == 0.0):
            raise DomainError("division by zero", _first_bad(t, s2 == 0.0))
        return s1 * s2, l1 - l2
    if k == "pow":
        sb, lb = _eval_log(e.args[0], t)
        v = _eval(e.args[1], t)
        if not np.all(np.isfinite(v)):
            raise DomainError("overflow in exponent", _first_bad(t, ~np.isfinite(v)))
        nonint = v != np.floor(v)
        if np.any((sb < 0) & nonint):
            raise DomainError("negative base with non-integer exponent",
                              _first_bad(t, (sb < 0) & nonint))
        if np.any((sb == 0) & (v < 0)):
            raise DomainError("division by zero", _first_bad(t, (sb == 0) & (v < 0)))
        sign = np.where(sb < 0, np.where(np.mod(v, 2.0) == 0.0, 1.0, -1.0), sb)
        sign = np.where((sb == 0) & (v == 0), 1.0, sign)  # 0^0 = 1 convention
        l = np.where((sb == 0) & (v == 0), 0.0, v * lb)
        return sign, l
    if k == "exp":
        x = _eval(e.args[0], t)
        if not np.all(np.isfinite(x)):
            raise DomainError("overflow", _first_bad(t, ~np.isfinite(x)))
        return np.ones_like(t), x
    if k == "log":
        sx, lx = _eval_log(e.args[0], t)
        if np.any(sx <= 0.0):
            raise DomainError("log of a nonpositive value", _first_bad(t, sx <= 0.0))
        with np.errstate(divide="ignore"):
            return np.sign(lx), np.where(lx == 0.0, -np.inf, np.log(np.abs(lx)))
    if k == "sqrt":
        sx, lx = _eval_log(e.args[0], t)
        if np.any(sx < 0.0):
            raise DomainError("sqrt of a negative value", _first_bad(t, sx < 0.0))
        return sx, lx / 2.0
    x = _eval(e.args[0], t)
    if not np.all(np.isfinite(x)):
        raise DomainError("overflow in argument", _first_bad(t, ~np.isfinite(x)))
    if k == "sinh":
        ax = np.abs(x)
        with np.errstate(divide="ignore"):
            l = np.where(x == 0.0, -np.inf, ax + np.log1p(-np.exp(-2.0 * ax)) - _LOG2)
        return np.sign(x), l
    if k == "cosh":
        ax = np.abs(x)
        return np.ones_like(t), ax + np.log1p(np.exp(-2.0 * ax)) - _LOG2
    if k == "coth" and np.any(x == 0.0):
        raise DomainError("division by zero", _first_bad(t, x == 0.0))
    val = {"sin": np.sin, "cos": np.cos, "tanh": np.tanh,
           "coth": lambda y: 1.0 / np.tanh(y)}[k](x)
    with np.errstate(divide="ignore"):
        return np.sign(val), np.where(val == 0.0, -np.inf, np.log(np.abs(val)))


def eval_log(e: Expr, t):
    """Scaled evaluation: (sign, log|value|).  Stable where plain eval overflows."""
    arr = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        s, l = _eval_log(e, arr)
    if np.any(np.isnan(l)):
        raise DomainError("invalid value", _first_bad(arr, np.isnan(np.asarray(l))))
    if arr.ndim == 0:
        return float(s), float(l)
    return np.asarray(s, dtype=float), np.asarray(l, dtype=float)


# ---------------------------------------------------------------------------
# differentiation (constant folding and 0*x / 1*x / x+0 elimination only)
# ---------------------------------------------------------------------------

def _is_const(e: Expr, x: float | None = None) -> bool:
    return e.kind == "const" and (x is None or e.value == x)


def _fneg(a: Expr) -> Expr:
    if _is_const(a):
        return const(-a.value)
    if a.kind == "neg":
        return a.args[0]
    return neg(a)


def _fadd(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return add(a, b)


def _fsub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _fneg(b)
    return sub(a, b)


def _fmul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return mul(a, b)


def _fdiv(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0):
        return const(0.0)
    if _is_const(a) and _is_const(b) and b.value != 0.0:
        return const(a.value / b.value)
    return div(a, b)


def _fpow(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return const(1.0)
    return pow_(a, b)


def differentiate(e: Expr) -> Expr:
    """Symbolic d/dt."""
    k = e.kind
    if k == "const":
        return const(0.0)
    if k == "var":
        return const(1.0)
    if k == "neg":
        return _fneg(differentiate(e.args[0]))
    if k in ("add", "sub"):
        da, db = differentiate(e.args[0]), differentiate(e.args[1])
        return _fadd(da, db) if k == "add" else _fsub(da, db)
    if k == "mul":
        a, b = e.args
        return _fadd(_fmul(differentiate(a), b), _fmul(a, differentiate(b)))
    if k == "div":
        a, b = e.args
        num = _fsub(_fmul(differentiate(a), b), _fmul(a, differentiate(b)))
        return _fdiv(num, _fmul(b, b))
    if k == "pow":
        a, b = e.args
        da = differentiate(a)
        if _is_const(b):
            # n * a^(n-1) * a'
            return _fmul(_fmul(b, _fpow(a, const(b.value - 1.0))), da)
        # general: a^b * (b' log a + b a'/a)
        db = differentiate(b)
        return _fmul(pow_(a, b), _fadd(_fmul(db, call("log", a)),
                                       _fdiv(_fmul(b, da), a)))
    u = e.args[0]
    du = differentiate(u)
    if k == "exp":
        return _fmul(call("exp", u), du)
    if k == "log":
        return _fdiv(du, u)
    if k == "sqrt":
        return _fdiv(du, _fmul(const(2.0), call("sqrt", u)))
    if k == "sin":
        return _fmul(call("cos", u), du)
    if k == "cos":
        return _fneg(_fmul(call("sin", u), du))
    if k == "sinh":
        return _fmul(call("cosh", u), du)
    if k == "cosh":
        return _fmul(call("sinh", u), du)
    if k == "tanh":
        return _fmul(_fsub(const(1.0), pow_(call("tanh", u), const(2.0))), du)
    # coth' = 1 - coth^2  (negative, since coth^2 > 1)
    return _fmul(_fsub(const(1.0), pow_(call("coth", u), const(2.0))), du)


# ---------------------------------------------------------------------------
# Profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Profile:
    """An expression together with its exact first and second derivatives."""

    source: str
    expr: Expr
    d1: Expr
    d2: Expr
    includes_zero: bool = True

    @staticmethod
    def from_expr(expr: Expr, source: str | None = None,
                  d1: Expr | None = None, d2: Expr | None = None) -> "Profile":
        d1 = differentiate(expr) if d1 is None else d1
        d2 = differentiate(d1) if d2 is None else d2
        src = to_source(expr) if source is None else source
        ok_at_zero = True
        try:
            eval_expr(expr, 0.0)
            eval_expr(d1, 0.0)
            eval_expr(d2, 0.0)
        except DomainError:
            ok_at_zero = False
        return Profile(src, expr, d1, d2, includes_zero=ok_at_zero)

    @staticmethod
    def from_source(src: str) -> "Profile":
        return Profile.from_expr(parse_profile(src), source=src)

    def value(self, t):
        return eval_expr(self.expr, t)

    def derivative(self, t):
        return eval_expr(self.d1, t)

    def second_derivative(self, t):
        return eval_expr(self.d2, t)

    def log_value(self, t):
        return eval_log(self.expr, t)

    def is_constant(self) -> bool:
        def scan(e: Expr) -> bool:
            if e.kind == "var":
                return False
            return all(scan(c) for c in e.args)
        return scan(self.expr)


def constant_profile(c: float) -> Profile:
    """The constant profile t -> c."""
    return Profile(_fmt_const(float(c)), const(c), const(0.0), const(0.0))


def _hyperbolic_profile(kappa: float) -> Profile:
    if kappa >= 0:
        raise ValueError("hyperbolic preset requires kappa < 0")
    s = math.sqrt(-kappa)
    if s == 1.0:
        expr = call("sinh", var())
        d1 = call("cosh", var())
        d2 = call("sinh", var())
        src = "sinh(t)"
    else:
        st = mul(const(s), var())
        expr = div(call("sinh", st), const(s))
        d1 = call("cosh", st)
        d2 = mul(const(s), call("sinh", st))
        src = f"sinh({_fmt_const(s)}*t)/{_fmt_const(s)}"
    return Profile(src, expr, d1, d2, includes_zero=True)


def _baider_base_profile() -> Profile:
    # f = t*exp(t^2), f' = (1+2t^2) e^{t^2}, f'' = (6t+4t^3) e^{t^2}
    t = var()
    et2 = call("exp", pow_(t, const(2.0)))
    expr = mul(t, et2)
    d1 = mul(add(const(1.0), mul(const(2.0), pow_(t, const(2.0)))), et2)
    d2 = mul(add(mul(const(6.0), t), mul(const(4.0), pow_(t, const(3.0)))), et2)
    return Profile("t*exp(t^2)", expr, d1, d2, includes_zero=True)


def _baider_fiber_profile() -> Profile:
    # psi = exp(t-t^2), psi' = (1-2t) e^{t-t^2}, psi'' = (4t^2-4t-1) e^{t-t^2}
    t = var()
    e = call("exp", sub(t, pow_(t, const(2.0))))
    d1 = mul(sub(const(1.0), mul(const(2.0), t)), e)
    d2 = mul(sub(mul(const(4.0), pow_(t, const(2.0))),
                 add(mul(const(4.0), t), const(1.0))), e)
    return Profile("exp(t-t^2)", e, d1, d2, includes_zero=True)


PRESET_NAMES = ("euclidean", "hyperbolic", "baider_base", "baider_fiber")


def preset_profile(name: str) -> Profile:
    """Builtin profiles with hand-checked closed-form derivatives.

    ``hyperbolic`` takes an optional curvature suffix, e.g. ``hyperbolic:-4``
    (default -1).  Presets bypass the parser entirely.
    """
    base, _, param = name.partition(":")
    base = base.strip()
    if base == "euclidean":
        return Profile("t", var(), const(1.0), const(0.0))
    if base == "hyperbolic":
        kappa = float(param) if param else -1.0
        return _hyperbolic_profile(kappa)
    if base == "baider_base":
        return _baider_base_profile()
    if base == "baider_fiber":
        return _baider_fiber_profile()
    raise ValueError(f"unknown preset {name!r}")
