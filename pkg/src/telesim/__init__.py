"""Heisenberg-picture toolkit for teleportation-based mode filters.

Circuits are lists of statements over symbolic scalar coefficients; every
wire carries an exact linear combination of input creation/annihilation
operators. The layers stack as coefficients -> operator algebra ->
elements -> circuits -> protocol builders, with an independent analysis
module and a text front end on top.
"""

from .circuit import (
    CircuitAst,
    CircuitError,
    Loc,
    PortTiming,
    ProtocolOutput,
    evaluate_circuit,
    merge_env,
)
from .coeff import CoefExpr, CoefficientError, ParamEnv, evaluate, evaluate_mp
from .dsl import ParseError, format_number, parse_circuit, serialize_circuit
from .elements import (
    ClassicalSignal,
    RailState,
    apply_balanced_bs,
    apply_beamsplitter,
    apply_inverse_squeezer,
    apply_phase_shift,
    apply_two_mode_squeezer,
    classical_combine,
    displace,
    dual_homodyne,
    split_modes,
)
from .opalg import (
    ModeEvaluator,
    ModeExpr,
    ModeId,
    ModeKind,
    commutator,
    dagger,
    input_mode,
    is_proper_mode,
    lin_comb,
    overlap_with,
    prune_for_display,
    quadrature_variance,
)
from .protocols import PROTOCOLS, ArgSpec, ProtocolInfo, build, protocol_text
from .verify import (
    BogoliubovReport,
    CovarianceRecord,
    DependencyReport,
    LimitResult,
    SelectivityReport,
    causality_report,
    check_bogoliubov,
    covariance_oracle,
    limit_coefficients,
    selectivity_report,
    signaling_test,
)

__version__ = "0.1.0"

__all__ = [
    "ArgSpec",
    "BogoliubovReport",
    "CircuitAst",
    "CircuitError",
    "ClassicalSignal",
    "CoefExpr",
    "CoefficientError",
    "CovarianceRecord",
    "DependencyReport",
    "LimitResult",
    "Loc",
    "ModeEvaluator",
    "ModeExpr",
    "ModeId",
    "ModeKind",
    "PROTOCOLS",
    "ParamEnv",
    "ParseError",
    "PortTiming",
    "ProtocolInfo",
    "ProtocolOutput",
    "RailState",
    "SelectivityReport",
    "apply_balanced_bs",
    "apply_beamsplitter",
    "apply_inverse_squeezer",
    "apply_phase_shift",
    "apply_two_mode_squeezer",
    "build",
    "causality_report",
    "check_bogoliubov",
    "classical_combine",
    "commutator",
    "covariance_oracle",
    "dagger",
    "displace",
    "dual_homodyne",
    "evaluate",
    "evaluate_circuit",
    "evaluate_mp",
    "format_number",
    "input_mode",
    "is_proper_mode",
    "limit_coefficients",
    "lin_comb",
    "merge_env",
    "overlap_with",
    "parse_circuit",
    "protocol_text",
    "prune_for_display",
    "quadrature_variance",
    "selectivity_report",
    "serialize_circuit",
    "signaling_test",
    "split_modes",
]
