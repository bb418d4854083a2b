"""Circuit source language: parsing, validation, serialization, evaluation."""

import math
from pathlib import Path

import pytest
from hypothesis import example, given, settings, strategies as st

from telesim.circuit import CircuitError, evaluate_circuit, merge_env
from telesim.coeff import ParamEnv
from telesim.dsl import ParseError, format_number, parse_circuit, serialize_circuit

GOLDEN_DIR = Path(__file__).resolve().parents[1] / "src" / "telesim" / "golden"
GOLDEN_FILES = sorted(GOLDEN_DIR.glob("*.tls"))

MINIMAL = """param s = 1.0
mode entanglement_seed e1 rail=src bin=0
mode entanglement_seed e2 rail=src bin=0
mode signal j rail=in bin=0
(a0, b0) = squeeze(e1, e2, gain=s, phase=0)
m = homodyne(j, a0, xphase=0, pphase=pi/2)
out = displace(b0, m, gain=1/sqrt(2))
output filtered = out role=transmitted
output record = m
"""


def test_minimal_circuit_parses_and_evaluates():
    po = evaluate_circuit(parse_circuit(MINIMAL))
    assert list(po.all_ports()) == ["filtered"]
    assert list(po.classical) == ["record"]
    assert po.limit_params == []


def test_serialization_reaches_a_fixed_point():
    ast = parse_circuit(MINIMAL)
    text = serialize_circuit(ast)
    again = parse_circuit(text)
    assert again == ast
    assert serialize_circuit(again) == text


@pytest.mark.parametrize("path", GOLDEN_FILES, ids=lambda p: p.stem)
def test_golden_byte_round_trip(path):
    text = path.read_text()
    assert serialize_circuit(parse_circuit(text)) == text


def test_infinity_parameter_becomes_limit_param():
    text = "param s = infinity\nmode vacuum v rail=r bin=0\noutput x = v\n"
    po = evaluate_circuit(parse_circuit(text))
    assert po.limit_params == ["s"]
    # stands in at the env's limit scale
    assert po.env.values["s"] == po.env.limit_scale


def test_merge_env_prefers_caller_values():
    ast = parse_circuit(MINIMAL)
    merged, infinite = merge_env(ast, ParamEnv({"s": 2.5}))
    assert merged.values["s"] == 2.5
    assert infinite == []


def test_evaluate_honors_env_override():
    ast = parse_circuit(MINIMAL)
    po = evaluate_circuit(ast, ParamEnv({"s": 0.0}))
    # at zero squeezing the seeds enter with weight exactly 1
    from telesim.opalg import ModeEvaluator

    tab = {m.name: complex(c) for m, (c, _) in ModeEvaluator(po.env).table(po.transmitted["filtered"]).items()}
    assert tab["j"] == pytest.approx(1.0)
    assert tab["e2"] == pytest.approx(1.0)


def test_claimed_emission_bin_is_recorded():
    text = MINIMAL.replace(
        "out = displace(b0, m, gain=1/sqrt(2))",
        "out = displace(b0, m, gain=1/sqrt(2), bin=3)",
    )
    po = evaluate_circuit(parse_circuit(text))
    assert po.port_bins["filtered"].emission_bin == 3


@pytest.mark.parametrize(
    "source, line, column, fragment",
    [
        ("mode vacuum", 1, 12, "expected mode name"),
        ("param = 3", 1, 7, "expected parameter name"),
        ("output x = ", 1, 12, "expected wire name"),
        ("frobnicate q", 1, 12, "expected '='"),
        ("mode vacuum v rail=r bin=zz", 1, 26, "expected integer bin"),
        ("mode vacuum v rail=r bin=0\noutput x = nosuch", 2, 12, "undefined wire"),
        (
            "mode vacuum v rail=r bin=0\noutput x = v\noutput x = v",
            3,
            8,
            "already declared",
        ),
        (
            "mode signal a rail=r bin=2\nmode signal b rail=r bin=1",
            2,
            26,
            "nondecreasing order",
        ),
    ],
)
def test_parse_errors_carry_line_and_column(source, line, column, fragment):
    with pytest.raises(ParseError, match=fragment) as excinfo:
        parse_circuit(source)
    assert excinfo.value.line == line
    assert excinfo.value.column == column


def test_semantic_errors_surface_as_circuit_errors():
    bad_alpha = (
        "mode vacuum v rail=r bin=0\nmode vacuum w rail=q bin=0\n"
        "(a, b) = split(v, w, alpha=2, phi=0)"
    )
    with pytest.raises(CircuitError, match=r"alpha = 2.0 outside"):
        evaluate_circuit(parse_circuit(bad_alpha))
    bad_gain = (
        "mode vacuum v rail=r bin=0\nmode vacuum w rail=q bin=0\n"
        "(a, b) = squeeze(v, w, gain=0-1, phase=0)"
    )
    with pytest.raises(CircuitError, match="nonnegative"):
        evaluate_circuit(parse_circuit(bad_gain))


def test_records_are_not_mode_wires():
    text = (
        "mode vacuum v rail=r bin=0\nmode vacuum w rail=q bin=0\n"
        "m = homodyne(v, w, xphase=0, pphase=pi/2)\n"
        "(a, b) = split(m, v, alpha=0.5, phi=0)"
    )
    with pytest.raises(ParseError, match="not a mode wire"):
        parse_circuit(text)
    text = (
        "mode vacuum v rail=r bin=0\nmode vacuum w rail=q bin=0\n"
        "d = displace(v, w, gain=1)"
    )
    with pytest.raises(ParseError, match="not a measurement record"):
        parse_circuit(text)


def test_format_number_round_trips():
    for value in (0.5, -1.0, 3.0, math.pi, 1 / 3, 1e-12, -0.0):
        assert float(format_number(value)) == value


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=120))
@example("output = = =")
@example("param s = ")
@example("(a, b) = split(")
@example("\x00\x01")
def test_fuzzed_text_never_crashes_the_parser(text):
    # arbitrary input must yield a circuit or a located ParseError, nothing else
    try:
        parse_circuit(text)
    except ParseError as err:
        assert err.line >= 1
        assert err.column >= 1


@settings(max_examples=100, deadline=None)
@given(
    index=st.integers(0, 10_000),
    junk=st.text(alphabet="()=,abTAZ09+-*/ \t", max_size=12),
)
def test_fuzzed_golden_mutations_never_crash(index, junk):
    text = GOLDEN_FILES[index % len(GOLDEN_FILES)].read_text()
    lines = text.splitlines()
    cut = index % len(lines)
    mutated = "\n".join(lines[:cut] + [junk] + lines[cut + 1 :])
    try:
        evaluate_circuit(parse_circuit(mutated))
    except (ParseError, CircuitError):
        pass
