"""Independent checks on evaluated circuits.

Nothing in here feeds back into simulation. Each analysis recomputes what
it needs from first principles: unitarity from pairwise commutators, limits
by pushing scale parameters twice as far, variances through a float64
quadrature pipeline that never touches the operator tables, causality from
the time-bin registry, and selectivity from overlaps against the declared
target. Agreement between the two variance pipelines is the strongest
cross-check the package has, because they share no code past the scalar
evaluator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .circuit import (
    CircuitAst,
    CircuitError,
    CombineStmt,
    DisplaceStmt,
    HomodyneStmt,
    ModeDecl,
    OutputStmt,
    ParamDecl,
    PhaseStmt,
    ProtocolDecl,
    ProtocolOutput,
    SplitStmt,
    SqueezeStmt,
    UnsqueezeStmt,
    merge_env,
)
from .coeff import ParamEnv, evaluate
from .opalg import ModeEvaluator, ModeExpr, ModeId, ModeKind, dagger, to_complex

LIMIT_TOL = 1e-8
DIVERGENCE_BOUND = 1e8
PRUNE_THRESHOLD = 1e-14
LEAKAGE_TOL = 1e-6
NOISE_THRESHOLD = 0.5


# ---------------------------------------------------------------------------
# unitarity


@dataclass(frozen=True)
class BogoliubovReport:
    """Pairwise commutator audit of a set of output modes.

    A set of outputs is a valid new mode basis exactly when [A_i, A_j] = 0
    and [A_i, A_j^dagger] = delta_ij for every pair. failures lists each
    (left, right, check, deviation) that missed by more than tol.
    """

    names: tuple[str, ...]
    tol: float
    max_deviation: float
    failures: tuple[tuple[str, str, str, float], ...]

    @property
    def passed(self) -> bool:
        return not self.failures


def check_bogoliubov(outputs, env: ParamEnv, tol: float = 1e-10) -> BogoliubovReport:
    """Verify that outputs form a canonical mode set under env.

    outputs may be a name -> ModeExpr mapping or a plain sequence; sequences
    get positional names. Both commutator families are checked for every
    unordered pair, plus self-normalization [A, A^dagger] = 1.
    """
    if isinstance(outputs, dict):
        items = list(outputs.items())
    else:
        items = [(f"output{i}", expr) for i, expr in enumerate(outputs)]
    evaluator = ModeEvaluator(env)
    failures = []
    worst = 0.0
    for i, (name_i, expr_i) in enumerate(items):
        for name_j, expr_j in items[i:]:
            plain = abs(to_complex(evaluator.commutator(expr_i, expr_j)))
            worst = max(worst, plain)
            if plain > tol:
                failures.append((name_i, name_j, "commutator", plain))
            expected = 1.0 if name_i == name_j else 0.0
            cross = abs(
                to_complex(evaluator.commutator(expr_i, dagger(expr_j))) - expected
            )
            worst = max(worst, cross)
            if cross > tol:
                failures.append((name_i, name_j, "cross-commutator", cross))
    return BogoliubovReport(
        names=tuple(name for name, _ in items),
        tol=tol,
        max_deviation=worst,
        failures=tuple(failures),
    )


# ---------------------------------------------------------------------------
# limits


@dataclass(frozen=True)
class LimitResult:
    """Coefficient tables at scale L and 2L plus the verdict.

    converged means every coefficient moved by at most tol between the two
    scales and none blew up; limit is the 2L table with entries below the
    display threshold dropped. Divergence is reported, not raised: raw
    classical channels grow like e^r by design and the caller may want to
    see exactly that.
    """

    scale: float
    tol: float
    at_scale: dict
    at_double_scale: dict
    max_difference: float
    divergent: bool
    converged: bool
    limit: dict


def _complex_table(expr: ModeExpr, env: ParamEnv) -> dict:
    return {
        mode: (to_complex(c), to_complex(d))
        for mode, (c, d) in ModeEvaluator(env).table(expr).items()
    }


def limit_coefficients(
    expr: ModeExpr,
    params_to_infinity: list[str],
    env: ParamEnv,
    tol: float = LIMIT_TOL,
) -> LimitResult:
    """Numeric limit of a mode expression as the named parameters grow."""
    scale = env.limit_scale
    low = _complex_table(expr, env.bind(**{p: scale for p in params_to_infinity}))
    high = _complex_table(
        expr, env.bind(**{p: 2 * scale for p in params_to_infinity})
    )
    worst = 0.0
    divergent = False
    for mode in low.keys() | high.keys():
        lc, ld = low.get(mode, (0j, 0j))
        hc, hd = high.get(mode, (0j, 0j))
        worst = max(worst, abs(hc - lc), abs(hd - ld))
        if max(abs(hc), abs(hd)) > DIVERGENCE_BOUND:
            divergent = True
    limit = {}
    for mode, (c, d) in high.items():
        c = c if abs(c) > PRUNE_THRESHOLD else 0j
        d = d if abs(d) > PRUNE_THRESHOLD else 0j
        if c != 0 or d != 0:
            limit[mode] = (c, d)
    return LimitResult(
        scale=scale,
        tol=tol,
        at_scale=low,
        at_double_scale=high,
        max_difference=worst,
        divergent=divergent,
        converged=not divergent and worst <= tol,
        limit=limit,
    )


# ---------------------------------------------------------------------------
# covariance oracle

# Quadrature convention: X = a + a^dagger, P = -i(a - a^dagger), so vacuum
# has Var X = Var P = 1 and a = (X + iP)/2. A wire is tracked by the two
# real rows expressing its X and P in the basis of input-mode quadratures;
# a measurement record by the rows of its real and imaginary parts. The
# element maps below follow from substituting a = (X + iP)/2 into the same
# input-output relations the operator pipeline uses, which keeps the two
# implementations independent everywhere past the scalar evaluator.


class _Rows:
    __slots__ = ("x", "p")

    def __init__(self, x, p):
        self.x = x
        self.p = p


def _zeros(n):
    return [0.0] * n


def _axpy(scale, row, into):
    for i, value in enumerate(row):
        into[i] += scale * value


def _scaled_rows(u: complex, rows: _Rows) -> _Rows:
    # a' = u a: X' = Re(u) X - Im(u) P, P' = Im(u) X + Re(u) P
    n = len(rows.x)
    x, p = _zeros(n), _zeros(n)
    _axpy(u.real, rows.x, x)
    _axpy(-u.imag, rows.p, x)
    _axpy(u.imag, rows.x, p)
    _axpy(u.real, rows.p, p)
    return _Rows(x, p)


def _dagger_rows(rows: _Rows) -> _Rows:
    return _Rows(list(rows.x), [-v for v in rows.p])


def _sum_rows(parts: list[_Rows]) -> _Rows:
    n = len(parts[0].x)
    x, p = _zeros(n), _zeros(n)
    for part in parts:
        _axpy(1.0, part.x, x)
        _axpy(1.0, part.p, p)
    return _Rows(x, p)


def _quadrature_row(rows: _Rows, phase: float):
    c, s = math.cos(phase), math.sin(phase)
    return [c * xv + s * pv for xv, pv in zip(rows.x, rows.p)]


@dataclass
class CovarianceRecord:
    """First and second moments of every declared output.

    All supported inputs are vacuum, so first moments vanish identically
    and the interesting content is the per-port variance function.
    """

    ports: dict[str, _Rows] = field(default_factory=dict)
    records: dict[str, tuple[list, list]] = field(default_factory=dict)
    means: dict[str, tuple[float, float]] = field(default_factory=dict)

    def variance(self, name: str, phase: float = 0.0) -> float:
        row = _quadrature_row(self.ports[name], phase)
        return sum(v * v for v in row)

    @property
    def variances(self) -> dict[str, tuple[float, float]]:
        return {
            name: (self.variance(name, 0.0), self.variance(name, math.pi / 2))
            for name in self.ports
        }


def covariance_oracle(circuit: CircuitAst, env: ParamEnv | None = None) -> CovarianceRecord:
    """Propagate quadrature rows through the circuit in float64.

    Returns per-output X/P variance data computed without the operator
    tables; disagreement with quadrature_variance indicates a defect in one
    of the two pipelines.
    """
    merged, _ = merge_env(circuit, env if env is not None else ParamEnv({}))
    n = 2 * sum(1 for s in circuit.statements if isinstance(s, ModeDecl))
    wires: dict[str, object] = {}
    record = CovarianceRecord()
    slot = 0

    def scalar(expr, loc, what) -> complex:
        try:
            return complex(evaluate(expr, merged))
        except Exception as exc:  # surfaced with the statement position
            raise CircuitError(f"cannot evaluate {what}: {exc}", loc) from exc

    def quantum(name, loc) -> _Rows:
        wire = wires.get(name)
        if not isinstance(wire, _Rows):
            raise CircuitError(f"no quantum wire {name!r}", loc)
        return wire

    def classical(name, loc):
        wire = wires.get(name)
        if wire is None or isinstance(wire, _Rows):
            raise CircuitError(f"no measurement record {name!r}", loc)
        return wire

    for stmt in circuit.statements:
        loc = stmt.loc
        if isinstance(stmt, (ParamDecl, ProtocolDecl)):
            continue
        if isinstance(stmt, ModeDecl):
            x, p = _zeros(n), _zeros(n)
            x[slot] = 1.0
            p[slot + 1] = 1.0
            wires[stmt.name] = _Rows(x, p)
            slot += 2
        elif isinstance(stmt, SplitStmt):
            alpha = scalar(stmt.alpha, loc, "alpha").real
            phi = scalar(stmt.phi, loc, "phi").real
            keep = math.sqrt(min(max(alpha, 0.0), 1.0))
            cross = math.sqrt(max(1.0 - alpha, 0.0))
            t, r = quantum(stmt.in_t, loc), quantum(stmt.in_r, loc)
            down = -1j * complex(math.cos(-phi), math.sin(-phi)) * cross
            up = -1j * complex(math.cos(phi), math.sin(phi)) * cross
            wires[stmt.out_minus] = _sum_rows(
                [_scaled_rows(keep, r), _scaled_rows(down, t)]
            )
            wires[stmt.out_plus] = _sum_rows(
                [_scaled_rows(keep, t), _scaled_rows(up, r)]
            )
        elif isinstance(stmt, SqueezeStmt):
            g = scalar(stmt.gain, loc, "gain").real
            theta = scalar(stmt.phase, loc, "phase").real
            c = math.cosh(g)
            s = complex(math.cos(theta), math.sin(theta)) * math.sinh(g)
            one, two = quantum(stmt.in1, loc), quantum(stmt.in2, loc)
            wires[stmt.out1] = _sum_rows(
                [_scaled_rows(c, one), _scaled_rows(s, _dagger_rows(two))]
            )
            wires[stmt.out2] = _sum_rows(
                [_scaled_rows(c, two), _scaled_rows(s, _dagger_rows(one))]
            )
        elif isinstance(stmt, UnsqueezeStmt):
            g = scalar(stmt.gain, loc, "gain").real
            c, s = math.cosh(g), math.sinh(g)
            one, two = quantum(stmt.in1, loc), quantum(stmt.in2, loc)
            wires[stmt.out1] = _sum_rows(
                [_scaled_rows(c, one), _scaled_rows(-s, _dagger_rows(two))]
            )
            wires[stmt.out2] = _sum_rows(
                [_scaled_rows(c, two), _scaled_rows(-s, _dagger_rows(one))]
            )
        elif isinstance(stmt, PhaseStmt):
            phi = scalar(stmt.phi, loc, "phi").real
            unit = complex(math.cos(phi), math.sin(phi))
            wires[stmt.out] = _scaled_rows(unit, quantum(stmt.operand, loc))
        elif isinstance(stmt, HomodyneStmt):
            xphase = scalar(stmt.xphase, loc, "xphase").real
            pphase = scalar(stmt.pphase, loc, "pphase").real
            sig = quantum(stmt.signal, loc)
            res = quantum(stmt.resource, loc)
            half = 1.0 / math.sqrt(2.0)
            total = _sum_rows([_scaled_rows(half, res), _scaled_rows(half, sig)])
            diff = _sum_rows([_scaled_rows(half, sig), _scaled_rows(-half, res)])
            wires[stmt.out] = (
                _quadrature_row(diff, xphase),
                _quadrature_row(total, pphase),
            )
        elif isinstance(stmt, CombineStmt):
            re_row, im_row = _zeros(n), _zeros(n)
            for weight, name in stmt.terms:
                w = scalar(weight, loc, "combine weight")
                re_part, im_part = classical(name, loc)
                _axpy(w.real, re_part, re_row)
                _axpy(-w.imag, im_part, re_row)
                _axpy(w.imag, re_part, im_row)
                _axpy(w.real, im_part, im_row)
            wires[stmt.out] = (re_row, im_row)
        elif isinstance(stmt, DisplaceStmt):
            zeta = scalar(stmt.gain, loc, "gain")
            base = quantum(stmt.resource, loc)
            re_part, im_part = classical(stmt.record, loc)
            # a' = a + zeta (M_re + i M_im) with Hermitian M parts
            x, p = list(base.x), list(base.p)
            _axpy(2 * zeta.real, re_part, x)
            _axpy(-2 * zeta.imag, im_part, x)
            _axpy(2 * zeta.imag, re_part, p)
            _axpy(2 * zeta.real, im_part, p)
            wires[stmt.out] = _Rows(x, p)
        elif isinstance(stmt, OutputStmt):
            wire = wires.get(stmt.wire)
            if wire is None:
                raise CircuitError(f"unknown wire {stmt.wire!r}", loc)
            record.means[stmt.name] = (0.0, 0.0)
            if isinstance(wire, _Rows):
                record.ports[stmt.name] = wire
            else:
                record.records[stmt.name] = wire
        else:
            raise CircuitError(f"unhandled statement {type(stmt).__name__}", loc)
    return record


# ---------------------------------------------------------------------------
# causality


@dataclass(frozen=True)
class DependencyReport:
    """Which inputs each output can see, and when it can be emitted.

    dependencies maps output names to (mode, time_bin) pairs with nonzero
    coefficient. An output violates causality when its emission bin comes
    before the latest bin it depends on; mandatory_delay is the largest gap
    between an output's nominal slot and its actual emission.
    """

    dependencies: dict[str, frozenset]
    emission: dict[str, int]
    slots: dict[str, int]
    violations: tuple[str, ...]
    verdict: str
    mandatory_delay: int


def _dependency_scan(expr: ModeExpr, evaluator: ModeEvaluator) -> frozenset:
    found = set()
    for mode, (c, d) in evaluator.table(expr).items():
        if c != 0 or d != 0:
            found.add((mode, mode.time_bin))
    return frozenset(found)


def causality_report(protocol: ProtocolOutput) -> DependencyReport:
    """Timing audit of an evaluated protocol."""
    evaluator = ModeEvaluator(protocol.env)
    scanned: dict[str, frozenset] = {}
    for name, expr in protocol.all_ports().items():
        scanned[name] = _dependency_scan(expr, evaluator)
    for name, signal in protocol.classical.items():
        scanned[name] = _dependency_scan(signal.expr, evaluator)
    emission = {name: timing.emission_bin for name, timing in protocol.port_bins.items()}
    slots = {name: timing.slot_bin for name, timing in protocol.port_bins.items()}
    violations = []
    delay = 0
    for name, deps in scanned.items():
        latest = max((time_bin for _, time_bin in deps), default=emission[name])
        if emission[name] < latest:
            violations.append(name)
        delay = max(delay, emission[name] - slots[name])
    return DependencyReport(
        dependencies=scanned,
        emission=emission,
        slots=slots,
        violations=tuple(violations),
        verdict="acausal" if violations else "causal",
        mandatory_delay=delay,
    )


def signaling_test(protocol: ProtocolOutput, prepared_bin: int) -> float:
    """Largest weight of a bin's inputs inside any earlier-emitted output.

    Zero here is structural, not numeric: a causal device simply never
    routes a late input into an output that already left. Protocols whose
    outputs all emit at the final bin have nothing to test and return 0;
    for those the cost shows up as delay in the causality report instead.
    """
    evaluator = ModeEvaluator(protocol.env)
    worst = 0.0
    for name, expr in protocol.all_ports().items():
        if protocol.port_bins[name].emission_bin >= prepared_bin:
            continue
        for mode, (c, d) in evaluator.table(expr).items():
            if mode.time_bin == prepared_bin:
                worst = max(worst, abs(to_complex(c)), abs(to_complex(d)))
    return worst


# ---------------------------------------------------------------------------
# selectivity


@dataclass(frozen=True)
class SelectivityReport:
    """Classification of what a device does to the signal subspace.

    mode_selective: the target arrives intact and no orthogonal signal
    superposition survives on any transmitted port. mode_discriminating:
    the target port is clean but orthogonal content passes, buried under
    excess noise on every port that carries it. Anything else is neither.
    """

    target_overlap: complex
    orthogonal_leakage: float
    port_leakage: dict[str, float]
    noise_variance_excess: dict[str, float]
    clean_port: str
    verdict: str


def _signal_vector(table: dict, signal_ids: list[ModeId]) -> list[complex]:
    return [to_complex(table.get(mode, (0j, 0j))[0]) for mode in signal_ids]


def _inner(left: list[complex], right: list[complex]) -> complex:
    return sum(l * r.conjugate() for l, r in zip(left, right))


def _orthogonal_basis(target: list[complex]) -> list[list[complex]]:
    """Orthonormal basis of the signal subspace orthogonal to target."""
    dim = len(target)
    basis: list[list[complex]] = []
    for k in range(dim):
        candidate = [0j] * dim
        candidate[k] = 1 + 0j
        overlap = _inner(candidate, target)
        candidate = [c - overlap * t for c, t in zip(candidate, target)]
        for prior in basis:
            overlap = _inner(candidate, prior)
            candidate = [c - overlap * b for c, b in zip(candidate, prior)]
        norm = math.sqrt(abs(_inner(candidate, candidate)))
        if norm > 1e-9:
            basis.append([c / norm for c in candidate])
    return basis


def selectivity_report(
    protocol: ProtocolOutput,
    target: ModeExpr | None = None,
    env: ParamEnv | None = None,
) -> SelectivityReport:
    """Classify transmitted ports against the declared target mode.

    Judged at the high-entanglement limit: every parameter the protocol
    declares as tending to infinity is pinned at the limit scale, whatever
    finite value the caller evaluated at.
    """
    target = target if target is not None else protocol.target
    if target is None:
        raise ValueError("protocol declares no target mode")
    base = env if env is not None else protocol.env
    at_limit = base.bind(**{p: base.limit_scale for p in protocol.limit_params})
    evaluator = ModeEvaluator(at_limit)

    signal_ids = sorted(
        (m for m in protocol.input_registry if m.kind is ModeKind.SIGNAL),
        key=ModeId.sort_key,
    )
    tvec = _signal_vector(evaluator.table(target), signal_ids)
    tnorm = math.sqrt(abs(_inner(tvec, tvec)))
    if abs(tnorm - 1) > 1e-6:
        raise ValueError(f"target is not normalized over the signal inputs: {tnorm}")
    complement = _orthogonal_basis(tvec)

    overlaps: dict[str, complex] = {}
    leakage: dict[str, float] = {}
    excess: dict[str, float] = {}
    for name, expr in protocol.transmitted.items():
        pvec = _signal_vector(evaluator.table(expr), signal_ids)
        overlaps[name] = _inner(pvec, tvec)
        leakage[name] = max(
            (abs(_inner(pvec, b)) for b in complement), default=0.0
        )
        spread = max(
            float(evaluator.variance(expr, 0.0)),
            float(evaluator.variance(expr, math.pi / 2)),
        )
        excess[name] = spread - 1.0

    clean = max(overlaps, key=lambda name: abs(overlaps[name]))
    target_arrived = abs(abs(overlaps[clean]) - 1) <= LEAKAGE_TOL
    fully_filtered = all(v <= LEAKAGE_TOL for v in leakage.values())
    if target_arrived and fully_filtered:
        verdict = "mode_selective"
    elif (
        target_arrived
        and leakage[clean] <= LEAKAGE_TOL
        and all(
            excess[name] > NOISE_THRESHOLD
            for name, v in leakage.items()
            if v > LEAKAGE_TOL
        )
    ):
        verdict = "mode_discriminating"
    else:
        verdict = "neither"
    return SelectivityReport(
        target_overlap=overlaps[clean],
        orthogonal_leakage=leakage[clean],
        port_leakage=leakage,
        noise_variance_excess=excess,
        clean_port=clean,
        verdict=verdict,
    )
