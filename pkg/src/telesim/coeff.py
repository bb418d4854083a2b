"""Closed-form scalar coefficients over named real parameters.

Expressions are small immutable trees (shared freely, so in practice DAGs)
built from complex constants, parameter references, the imaginary unit, pi,
arithmetic, and the handful of functions the circuits need. They evaluate
numerically under a :class:`ParamEnv`; no symbolic simplification happens
beyond cheap constant folding in the constructors.

Evaluation runs on a dedicated mpmath context with 160 decimal digits.
Limit checks substitute scales up to twice the default 20, which drives
intermediate magnitudes past anything float64 can cancel correctly.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass

import mpmath

MP = mpmath.mp.clone()
MP.dps = 160

_FUNCTIONS = {
    "cosh": MP.cosh,
    "sinh": MP.sinh,
    "tanh": MP.tanh,
    "sech": MP.sech,
    "exp": MP.exp,
    "sqrt": MP.sqrt,
    "ln": MP.ln,
    "arccosh": MP.acosh,
}

FUNCTION_NAMES = frozenset(_FUNCTIONS)


class CoefficientError(ValueError):
    """Raised for malformed expressions or bad evaluation requests."""


@dataclass(frozen=True)
class ParamEnv:
    """Binding of parameter names to real values.

    ``limit_scale`` is the stand-in value for parameters declared to tend to
    infinity; callers double it to confirm convergence.
    """

    values: dict[str, float]
    limit_scale: float = 20.0

    def bind(self, **overrides: float) -> "ParamEnv":
        merged = dict(self.values)
        merged.update(overrides)
        return ParamEnv(merged, self.limit_scale)

    def with_scale(self, scale: float) -> "ParamEnv":
        return ParamEnv(self.values, scale)


class CoefExpr:
    """Base class; subclasses are frozen dataclasses forming the tree.

    The operator sugar folds constants so machine-built expressions stay
    small. The parser bypasses it and calls node constructors directly,
    which preserves the exact shape of user-written source.
    """

    __slots__ = ()

    def __add__(self, other):
        return _fold_add(self, as_coef(other))

    def __radd__(self, other):
        return _fold_add(as_coef(other), self)

    def __sub__(self, other):
        return _fold_sub(self, as_coef(other))

    def __rsub__(self, other):
        return _fold_sub(as_coef(other), self)

    def __mul__(self, other):
        return _fold_mul(self, as_coef(other))

    def __rmul__(self, other):
        return _fold_mul(as_coef(other), self)

    def __truediv__(self, other):
        return _fold_div(self, as_coef(other))

    def __rtruediv__(self, other):
        return _fold_div(as_coef(other), self)

    def __neg__(self):
        return _fold_neg(self)

    def parameters(self) -> frozenset[str]:
        found: set[str] = set()
        _collect_params(self, found, set())
        return frozenset(found)


@dataclass(frozen=True)
class Num(CoefExpr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True)
class Param(CoefExpr):
    name: str


@dataclass(frozen=True)
class PiConst(CoefExpr):
    pass


@dataclass(frozen=True)
class ImagUnit(CoefExpr):
    pass


@dataclass(frozen=True)
class Add(CoefExpr):
    left: CoefExpr
    right: CoefExpr


@dataclass(frozen=True)
class Sub(CoefExpr):
    left: CoefExpr
    right: CoefExpr


@dataclass(frozen=True)
class Mul(CoefExpr):
    left: CoefExpr
    right: CoefExpr


@dataclass(frozen=True)
class Div(CoefExpr):
    left: CoefExpr
    right: CoefExpr


@dataclass(frozen=True)
class Neg(CoefExpr):
    operand: CoefExpr


@dataclass(frozen=True)
class Conj(CoefExpr):
    # internal only: produced by dagger(), never by the parser
    operand: CoefExpr


@dataclass(frozen=True)
class Call(CoefExpr):
    func: str
    arg: CoefExpr

    def __post_init__(self):
        if self.func not in _FUNCTIONS:
            raise CoefficientError(f"unknown function {self.func!r}")


PI = PiConst()
I = ImagUnit()
ZERO = Num(0)
ONE = Num(1)


def _is_num(expr, value=None) -> bool:
    if not isinstance(expr, Num):
        return False
    return value is None or expr.value == value


# literal arithmetic folds only when it is lossless in doubles; anything
# that would round must survive as a tree for the extended-precision pass


def _fold_add(a: "CoefExpr", b: "CoefExpr") -> "CoefExpr":
    if _is_num(a, 0):
        return b
    if _is_num(b, 0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        total = a.value + b.value
        if total - a.value == b.value and total - b.value == a.value:
            return Num(total)
    return Add(a, b)


def _fold_sub(a: "CoefExpr", b: "CoefExpr") -> "CoefExpr":
    if _is_num(b, 0):
        return a
    if _is_num(a, 0):
        return _fold_neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        total = a.value - b.value
        if a.value - total == b.value and total + b.value == a.value:
            return Num(total)
    return Sub(a, b)


def _fold_mul(a: "CoefExpr", b: "CoefExpr") -> "CoefExpr":
    if _is_num(a, 0) or _is_num(b, 0):
        return ZERO
    if _is_num(a, 1):
        return b
    if _is_num(b, 1):
        return a
    return Mul(a, b)


def _fold_div(a: "CoefExpr", b: "CoefExpr") -> "CoefExpr":
    if _is_num(b, 0):
        raise CoefficientError("division by zero")
    if _is_num(b, 1):
        return a
    if _is_num(a, 0):
        return ZERO
    return Div(a, b)


def _fold_neg(a: "CoefExpr") -> "CoefExpr":
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def num(value) -> Num:
    return Num(value)


def param(name: str) -> Param:
    return Param(name)


def as_coef(value) -> CoefExpr:
    if isinstance(value, CoefExpr):
        return value
    if isinstance(value, numbers.Number):
        return Num(value)
    raise CoefficientError(f"cannot treat {value!r} as a coefficient")


def conj(expr) -> CoefExpr:
    expr = as_coef(expr)
    if isinstance(expr, Num):
        return Num(expr.value.conjugate())
    if isinstance(expr, Conj):
        # keeps dagger an involution on the nose
        return expr.operand
    if isinstance(expr, Neg):
        return _fold_neg(conj(expr.operand))
    return Conj(expr)


def sqrt(expr) -> CoefExpr:
    return Call("sqrt", as_coef(expr))


def cosh(expr) -> CoefExpr:
    return Call("cosh", as_coef(expr))


def sinh(expr) -> CoefExpr:
    return Call("sinh", as_coef(expr))


def tanh(expr) -> CoefExpr:
    return Call("tanh", as_coef(expr))


def sech(expr) -> CoefExpr:
    return Call("sech", as_coef(expr))


def exp(expr) -> CoefExpr:
    return Call("exp", as_coef(expr))


def ln(expr) -> CoefExpr:
    return Call("ln", as_coef(expr))


def arccosh(expr) -> CoefExpr:
    return Call("arccosh", as_coef(expr))


def cis(phase) -> CoefExpr:
    """e^{i*phase} as an expression."""
    return Call("exp", Mul(I, as_coef(phase)))


def _collect_params(expr: CoefExpr, found: set[str], seen: set[int]) -> None:
    if id(expr) in seen:
        return
    seen.add(id(expr))
    if isinstance(expr, Param):
        found.add(expr.name)
    elif isinstance(expr, (Add, Sub, Mul, Div)):
        _collect_params(expr.left, found, seen)
        _collect_params(expr.right, found, seen)
    elif isinstance(expr, (Neg, Conj)):
        _collect_params(expr.operand, found, seen)
    elif isinstance(expr, Call):
        _collect_params(expr.arg, found, seen)


class Evaluator:
    """Evaluates expressions under one env, memoizing shared subtrees.

    The memo keys on object identity and keeps the keyed expression alive,
    otherwise a recycled id from a garbage-collected temporary could serve
    another expression's value.
    """

    def __init__(self, env: ParamEnv):
        self.env = env
        self._memo: dict[int, tuple[CoefExpr, mpmath.mpc]] = {}

    def eval(self, expr: CoefExpr) -> mpmath.mpc:
        memo = self._memo
        key = id(expr)
        hit = memo.get(key)
        if hit is not None and hit[0] is expr:
            return hit[1]
        result = self._eval(expr)
        memo[key] = (expr, result)
        return result

    def _eval(self, expr: CoefExpr) -> mpmath.mpc:
        if isinstance(expr, Num):
            return MP.mpc(expr.value)
        if isinstance(expr, Param):
            try:
                return MP.mpc(self.env.values[expr.name])
            except KeyError:
                raise CoefficientError(f"unbound parameter {expr.name!r}") from None
        if isinstance(expr, PiConst):
            return MP.mpc(MP.pi)
        if isinstance(expr, ImagUnit):
            return MP.mpc(0, 1)
        if isinstance(expr, Add):
            return self.eval(expr.left) + self.eval(expr.right)
        if isinstance(expr, Sub):
            return self.eval(expr.left) - self.eval(expr.right)
        if isinstance(expr, Mul):
            return self.eval(expr.left) * self.eval(expr.right)
        if isinstance(expr, Div):
            denom = self.eval(expr.right)
            if denom == 0:
                raise CoefficientError("division by zero")
            return self.eval(expr.left) / denom
        if isinstance(expr, Neg):
            return -self.eval(expr.operand)
        if isinstance(expr, Conj):
            return MP.conj(self.eval(expr.operand))
        if isinstance(expr, Call):
            return MP.mpc(_FUNCTIONS[expr.func](self.eval(expr.arg)))
        raise CoefficientError(f"cannot evaluate {expr!r}")


def evaluate_mp(expr: CoefExpr, env: ParamEnv) -> mpmath.mpc:
    """High-precision evaluation; prefer an Evaluator for batches."""
    return Evaluator(env).eval(expr)


def to_complex(value: mpmath.mpc) -> complex:
    """mpmath boundary conversion; out-of-range magnitudes become inf."""

    def part(x) -> float:
        try:
            return float(x)
        except OverflowError:
            return float("inf") if x > 0 else float("-inf")

    return complex(part(value.real), part(value.imag))


def evaluate(expr: CoefExpr, env: ParamEnv) -> complex:
    return to_complex(evaluate_mp(expr, env))
