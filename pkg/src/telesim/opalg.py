"""Bosonic mode algebra: labeled input modes and linear forms over them.

A :class:`ModeExpr` is a finitely supported map from input-mode labels to
coefficient pairs ``(c, d)`` meaning a contribution ``c*a + d*a_dagger``.
Everything a circuit produces stays in this form, so commutators,
quadrature variances, and mode overlaps reduce to sums over the table.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .coeff import (
    MP,
    CoefExpr,
    Evaluator,
    ParamEnv,
    ZERO,
    as_coef,
    conj,
    to_complex,
)


class ModeKind(Enum):
    VACUUM = "vacuum"
    ENTANGLEMENT_SEED = "entanglement_seed"
    SIGNAL = "signal"
    LOCAL_OSCILLATOR = "local_oscillator"


@dataclass(frozen=True)
class ModeId:
    """Label of one constituent input mode of a circuit."""

    name: str
    rail: str
    time_bin: int = 0
    kind: ModeKind = ModeKind.VACUUM

    def __post_init__(self):
        if self.time_bin < 0:
            raise ValueError(f"time_bin must be >= 0, got {self.time_bin}")

    def sort_key(self):
        return (self.time_bin, self.rail, self.name)


CoefPair = tuple[CoefExpr, CoefExpr]


class ModeExpr:
    """Linear combination sum_i (c_i * a_i + d_i * a_i^dagger)."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[ModeId, CoefPair] | None = None):
        self.terms = dict(terms) if terms else {}

    def __eq__(self, other):
        if not isinstance(other, ModeExpr):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms))

    def __add__(self, other):
        if not isinstance(other, ModeExpr):
            return NotImplemented
        return lin_comb([(1, self), (1, other)])

    def __sub__(self, other):
        if not isinstance(other, ModeExpr):
            return NotImplemented
        return lin_comb([(1, self), (-1, other)])

    def __neg__(self):
        return lin_comb([(-1, self)])

    def __rmul__(self, coefficient):
        return lin_comb([(coefficient, self)])

    def scaled(self, coefficient) -> "ModeExpr":
        return lin_comb([(coefficient, self)])

    def mode_ids(self) -> frozenset[ModeId]:
        return frozenset(self.terms)

    def parameters(self) -> frozenset[str]:
        names: set[str] = set()
        for c, d in self.terms.values():
            names |= c.parameters()
            names |= d.parameters()
        return frozenset(names)

    def __repr__(self):
        if not self.terms:
            return "ModeExpr(0)"
        parts = [m.name for m in sorted(self.terms, key=ModeId.sort_key)]
        return f"ModeExpr(over {', '.join(parts)})"


def input_mode(mode_id: ModeId) -> ModeExpr:
    from .coeff import ONE

    return ModeExpr({mode_id: (ONE, ZERO)})


def dagger(expr: ModeExpr) -> ModeExpr:
    return ModeExpr(
        {m: (conj(d), conj(c)) for m, (c, d) in expr.terms.items()}
    )


def lin_comb(weighted: list[tuple[object, ModeExpr]]) -> ModeExpr:
    """Coefficient-wise linear combination of mode expressions."""
    out: dict[ModeId, CoefPair] = {}
    for weight, expr in weighted:
        w = as_coef(weight)
        for mode, (c, d) in expr.terms.items():
            prev = out.get(mode)
            if prev is None:
                out[mode] = (w * c, w * d)
            else:
                out[mode] = (prev[0] + w * c, prev[1] + w * d)
    return ModeExpr(out)


NumericTerms = dict[ModeId, tuple]


class ModeEvaluator:
    """Numeric view of mode expressions under one parameter binding.

    Coefficient tables are cached per expression object, so repeated
    commutators against the same outputs stay cheap.
    """

    def __init__(self, env: ParamEnv):
        self.env = env
        self._coef = Evaluator(env)
        # identity cache; holds the expression so its id cannot be recycled
        self._tables: dict[int, tuple[ModeExpr, NumericTerms]] = {}

    def table(self, expr: ModeExpr) -> NumericTerms:
        cached = self._tables.get(id(expr))
        if cached is not None and cached[0] is expr:
            return cached[1]
        ev = self._coef.eval
        result = {m: (ev(c), ev(d)) for m, (c, d) in expr.terms.items()}
        self._tables[id(expr)] = (expr, result)
        return result

    def commutator(self, left: ModeExpr, right: ModeExpr):
        lt = self.table(left)
        rt = self.table(right)
        total = MP.mpc(0)
        for mode, (c, d) in lt.items():
            other = rt.get(mode)
            if other is None:
                continue
            e, f = other
            total += c * f - d * e
        return total

    def variance(self, expr: ModeExpr, phase: float):
        fwd = MP.exp(MP.mpc(0, -phase))
        bwd = MP.exp(MP.mpc(0, phase))
        total = MP.mpf(0)
        for c, d in self.table(expr).values():
            amp = fwd * c + bwd * MP.conj(d)
            total += amp.real**2 + amp.imag**2
        return total


def commutator(left: ModeExpr, right: ModeExpr, env: ParamEnv) -> complex:
    """[left, right] as a number; bilinear and antisymmetric."""
    return to_complex(ModeEvaluator(env).commutator(left, right))


def quadrature_variance(expr: ModeExpr, phase: float, env: ParamEnv) -> float:
    """Vacuum variance of X(phase) = e^{-i phase} A + e^{i phase} A^dagger.

    Every constituent mode is treated as an independent vacuum input, so a
    single proper passive mode gives exactly 1.
    """
    return float(ModeEvaluator(env).variance(expr, phase))


def is_proper_mode(expr: ModeExpr, env: ParamEnv, tol: float = 1e-9) -> bool:
    """True when [A, A^dagger] = 1 within tol."""
    norm = ModeEvaluator(env).commutator(expr, dagger(expr))
    return abs(norm - 1) <= tol


def overlap_with(expr: ModeExpr, target: ModeExpr, env: ParamEnv) -> complex:
    """Amplitude of target inside expr, i.e. [expr, target^dagger].

    The target must be canonically normalized, otherwise the number has no
    interpretation as an amplitude.
    """
    evaluator = ModeEvaluator(env)
    norm = evaluator.commutator(target, dagger(target))
    if abs(norm - 1) > 1e-9:
        raise ValueError(
            f"target is not a proper mode: [T, T^dagger] = {to_complex(norm)}"
        )
    return to_complex(evaluator.commutator(expr, dagger(target)))


def prune_for_display(expr: ModeExpr, env: ParamEnv, threshold: float = 1e-14):
    """Numeric coefficient table with negligible entries dropped.

    Display convenience only; expression semantics never depend on it.
    """
    table = {}
    for mode, (c, d) in ModeEvaluator(env).table(expr).items():
        cc, dc = to_complex(c), to_complex(d)
        if abs(cc) <= threshold and abs(dc) <= threshold:
            continue
        table[mode] = (cc, dc)
    return table
