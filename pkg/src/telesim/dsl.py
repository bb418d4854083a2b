"""Textual circuit language: parser and canonical serializer.

One statement per line, `#` comments, define-before-use wires with
single assignment. The serializer emits a canonical spelling (spaces
around + and -, tight * and /, minimal parentheses), so a file produced
by it re-parses to a structurally equal program and re-serializes to
identical bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .circuit import (
    CircuitAst,
    CombineStmt,
    DisplaceStmt,
    HomodyneStmt,
    Loc,
    ModeDecl,
    OutputStmt,
    ParamDecl,
    PhaseStmt,
    ProtocolDecl,
    ROLES,
    SplitStmt,
    SqueezeStmt,
    Stmt,
    UnsqueezeStmt,
)
from .coeff import (
    Add,
    Call,
    CoefExpr,
    Div,
    FUNCTION_NAMES,
    ImagUnit,
    Mul,
    Neg,
    Num,
    Param,
    ParamEnv,
    PiConst,
    Sub,
    evaluate,
)
from .opalg import ModeKind

_MAX_DEPTH = 200

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(\.\d+)?([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[()\[\],=*+\-/])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    """Syntax or resolution failure with a 1-based source position."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize_line(text: str, line_no: int) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line_no, pos + 1)
        kind = match.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, match.group(), line_no, match.start() + 1))
        pos = match.end()
    return tokens


class _LineParser:
    """Cursor over one statement's tokens."""

    def __init__(self, tokens: list[_Token], line_no: int, line_len: int):
        self.tokens = tokens
        self.pos = 0
        self.line = line_no
        self.end_column = line_len + 1
        self.depth = 0

    def error(self, message: str) -> ParseError:
        column = self.tokens[self.pos].column if self.pos < len(self.tokens) else self.end_column
        return ParseError(message, self.line, column)

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> _Token:
        token = self.peek()
        if token is None:
            raise self.error("unexpected end of line")
        self.pos += 1
        return token

    def at_punct(self, text: str) -> bool:
        token = self.peek()
        return token is not None and token.kind == "punct" and token.text == text

    def expect_punct(self, text: str) -> _Token:
        if not self.at_punct(text):
            raise self.error(f"expected {text!r}")
        return self.next()

    def expect_ident(self, what: str = "identifier") -> _Token:
        token = self.peek()
        if token is None or token.kind != "ident":
            raise self.error(f"expected {what}")
        return self.next()

    def expect_keyword(self, word: str) -> None:
        token = self.expect_ident(f"keyword {word!r}")
        if token.text != word:
            raise ParseError(f"expected keyword {word!r}", token.line, token.column)

    def expect_end(self) -> None:
        if self.peek() is not None:
            raise self.error("unexpected trailing input")

    def expect_int(self, what: str) -> int:
        token = self.peek()
        if token is None or token.kind != "number" or not token.text.isdigit():
            raise self.error(f"expected integer {what}")
        self.next()
        return int(token.text)

    # expression grammar: expr := term (('+'|'-') term)*
    #                     term := factor (('*'|'/') factor)*
    #                     factor := '-' factor | atom
    def parse_expr(self) -> CoefExpr:
        self.depth += 1
        if self.depth > _MAX_DEPTH:
            raise self.error("expression too deeply nested")
        try:
            node = self.parse_term()
            while self.at_punct("+") or self.at_punct("-"):
                op = self.next().text
                right = self.parse_term()
                node = Add(node, right) if op == "+" else Sub(node, right)
            return node
        finally:
            self.depth -= 1

    def parse_term(self) -> CoefExpr:
        node = self.parse_factor()
        while self.at_punct("*") or self.at_punct("/"):
            op = self.next().text
            right = self.parse_factor()
            node = Mul(node, right) if op == "*" else Div(node, right)
        return node

    def parse_factor(self) -> CoefExpr:
        self.depth += 1
        if self.depth > _MAX_DEPTH:
            raise self.error("expression too deeply nested")
        try:
            if self.at_punct("-"):
                self.next()
                return Neg(self.parse_factor())
            return self.parse_atom()
        finally:
            self.depth -= 1

    def parse_atom(self) -> CoefExpr:
        token = self.peek()
        if token is None:
            raise self.error("expected expression")
        if token.kind == "number":
            self.next()
            return Num(_number_value(token.text))
        if token.kind == "punct" and token.text == "(":
            self.next()
            inner = self.parse_expr()
            self.expect_punct(")")
            return inner
        if token.kind == "ident":
            self.next()
            name = token.text
            if name == "pi":
                return PiConst()
            if name == "i":
                return ImagUnit()
            if name in FUNCTION_NAMES:
                if not self.at_punct("("):
                    raise ParseError(
                        f"function {name!r} requires an argument list", token.line, token.column
                    )
                self.next()
                arg = self.parse_expr()
                self.expect_punct(")")
                return Call(name, arg)
            return Param(name)
        raise self.error("expected expression")


def _number_value(text: str) -> float:
    if text.isdigit():
        return int(text)
    return float(text)


class _CircuitParser:
    def __init__(self):
        self.statements: list[Stmt] = []
        self.params: set[str] = set()
        self.wires: dict[str, str] = {}  # name -> 'q' | 'c'
        self.rail_bins: dict[str, int] = {}
        self.output_names: set[str] = set()
        self.protocol_seen = False

    def parse(self, text: str) -> CircuitAst:
        for index, raw in enumerate(text.split("\n"), start=1):
            tokens = _tokenize_line(raw, index)
            if not tokens:
                continue
            line = _LineParser(tokens, index, len(raw))
            self.statements.append(self._statement(line))
        return CircuitAst(tuple(self.statements))

    _RESERVED = frozenset(("pi", "i", "infinity", "param", "mode", "output", "protocol"))

    def _fresh(self, token: _Token, what: str) -> str:
        name = token.text
        if name in self.params or name in self.wires:
            raise ParseError(f"{what} {name!r} already defined", token.line, token.column)
        if name in FUNCTION_NAMES or name in self._RESERVED:
            raise ParseError(f"name {name!r} is reserved", token.line, token.column)
        return name

    def _fresh_pair(self, first: _Token, second: _Token) -> tuple[str, str]:
        out1 = self._fresh(first, "wire")
        out2 = self._fresh(second, "wire")
        if out1 == out2:
            raise ParseError(f"wire {out2!r} bound twice", second.line, second.column)
        self.wires[out1] = self.wires[out2] = "q"
        return out1, out2

    def _expr(self, line: _LineParser) -> CoefExpr:
        start = line.peek()
        expr = line.parse_expr()
        for name in sorted(expr.parameters()):
            if name not in self.params:
                where = start if start is not None else _Token("", "", line.line, 1)
                raise ParseError(f"undeclared parameter {name!r}", where.line, where.column)
        return expr

    def _keyword_expr(self, line: _LineParser, key: str) -> CoefExpr:
        line.expect_punct(",")
        line.expect_keyword(key)
        line.expect_punct("=")
        return self._expr(line)

    def _wire_in(self, line: _LineParser, kind: str) -> str:
        token = line.expect_ident("wire name")
        declared = self.wires.get(token.text)
        if declared is None:
            raise ParseError(f"undefined wire {token.text!r}", token.line, token.column)
        if declared != kind:
            need = "measurement record" if kind == "c" else "mode wire"
            raise ParseError(f"wire {token.text!r} is not a {need}", token.line, token.column)
        return token.text

    def _statement(self, line: _LineParser) -> Stmt:
        token = line.peek()
        loc = Loc(token.line, token.column)
        if token.kind == "ident" and token.text in ("param", "mode", "output", "protocol"):
            line.next()
            handler = getattr(self, f"_parse_{token.text}")
            return handler(line, loc)
        return self._parse_assignment(line, loc)

    def _parse_param(self, line: _LineParser, loc: Loc) -> ParamDecl:
        name = self._fresh(line.expect_ident("parameter name"), "parameter")
        line.expect_punct("=")
        token = line.peek()
        if token is not None and token.kind == "ident" and token.text == "infinity":
            line.next()
            line.expect_end()
            self.params.add(name)
            return ParamDecl(loc, name, None, infinite=True)
        negative = False
        if line.at_punct("-"):
            line.next()
            negative = True
        num = line.peek()
        if num is None or num.kind != "number":
            raise line.error("expected a number or 'infinity'")
        line.next()
        line.expect_end()
        value = float(num.text)
        self.params.add(name)
        return ParamDecl(loc, name, -value if negative else value)

    def _parse_mode(self, line: _LineParser, loc: Loc) -> ModeDecl:
        kind_token = line.expect_ident("mode kind")
        try:
            kind = ModeKind(kind_token.text)
        except ValueError:
            raise ParseError(
                f"unknown mode kind {kind_token.text!r}", kind_token.line, kind_token.column
            ) from None
        name = self._fresh(line.expect_ident("mode name"), "mode")
        line.expect_keyword("rail")
        line.expect_punct("=")
        rail = line.expect_ident("rail name").text
        line.expect_keyword("bin")
        line.expect_punct("=")
        bin_token = line.peek()
        time_bin = line.expect_int("bin")
        line.expect_end()
        last = self.rail_bins.get(rail)
        if last is not None and time_bin < last:
            raise ParseError(
                f"bin {time_bin} breaks nondecreasing order on rail {rail!r}",
                bin_token.line,
                bin_token.column,
            )
        self.rail_bins[rail] = time_bin
        self.wires[name] = "q"
        return ModeDecl(loc, kind, name, rail, time_bin)

    def _parse_output(self, line: _LineParser, loc: Loc) -> OutputStmt:
        name_token = line.expect_ident("output name")
        if name_token.text in self.output_names:
            raise ParseError(
                f"output {name_token.text!r} already declared", name_token.line, name_token.column
            )
        line.expect_punct("=")
        wire_token = line.expect_ident("wire name")
        if wire_token.text not in self.wires:
            raise ParseError(
                f"undefined wire {wire_token.text!r}", wire_token.line, wire_token.column
            )
        slot_bin = None
        role = None
        while line.peek() is not None:
            key = line.expect_ident("'bin' or 'role'")
            line.expect_punct("=")
            if key.text == "bin" and slot_bin is None:
                slot_bin = line.expect_int("bin")
            elif key.text == "role" and role is None:
                role_token = line.expect_ident("role")
                if role_token.text not in ROLES:
                    raise ParseError(
                        f"unknown role {role_token.text!r}", role_token.line, role_token.column
                    )
                role = role_token.text
            else:
                raise ParseError(f"unexpected clause {key.text!r}", key.line, key.column)
        self.output_names.add(name_token.text)
        return OutputStmt(loc, name_token.text, wire_token.text, slot_bin, role)

    def _parse_protocol(self, line: _LineParser, loc: Loc) -> ProtocolDecl:
        if self.protocol_seen:
            raise ParseError("duplicate protocol declaration", loc.line, loc.column)
        self.protocol_seen = True
        name = line.expect_ident("protocol name").text
        line.expect_punct("(")
        args: list[tuple[str, object]] = []
        if not self.at_close(line):
            while True:
                key = line.expect_ident("argument name").text
                line.expect_punct("=")
                args.append((key, self._protocol_value(line)))
                if line.at_punct(","):
                    line.next()
                    continue
                break
        line.expect_punct(")")
        line.expect_end()
        return ProtocolDecl(loc, name, tuple(args))

    @staticmethod
    def at_close(line: _LineParser) -> bool:
        return line.at_punct(")")

    def _protocol_value(self, line: _LineParser):
        if line.at_punct("["):
            line.next()
            items = []
            if not line.at_punct("]"):
                while True:
                    items.append(self._protocol_number(line))
                    if line.at_punct(","):
                        line.next()
                        continue
                    break
            line.expect_punct("]")
            return tuple(items)
        token = line.peek()
        if token is not None and token.kind == "ident":
            following = line.tokens[line.pos + 1] if line.pos + 1 < len(line.tokens) else None
            bare = following is None or (
                following.kind == "punct" and following.text in (",", ")")
            )
            if bare and token.text not in ("pi", "i") and token.text not in self.params:
                line.next()
                return token.text
        return self._protocol_number(line)

    def _protocol_number(self, line: _LineParser) -> float:
        # protocol arguments are plain data, not expressions over params
        token = line.peek()
        expr = self._expr(line)
        try:
            value = evaluate(expr, ParamEnv({}))
        except Exception:
            value = None
        if value is None or value.imag != 0:
            where = token if token is not None else line.tokens[-1]
            raise ParseError(
                "protocol argument must be a real number", where.line, where.column
            )
        return value.real

    def _parse_assignment(self, line: _LineParser, loc: Loc) -> Stmt:
        if line.at_punct("("):
            line.next()
            first = line.expect_ident("wire name")
            line.expect_punct(",")
            second = line.expect_ident("wire name")
            line.expect_punct(")")
            line.expect_punct("=")
            return self._pair_element(line, loc, first, second)
        target = line.expect_ident("statement")
        line.expect_punct("=")
        return self._single_element(line, loc, target)

    def _pair_element(self, line: _LineParser, loc: Loc, first: _Token, second: _Token) -> Stmt:
        elem = line.expect_ident("element name")
        line.expect_punct("(")
        in1 = self._wire_in(line, "q")
        line.expect_punct(",")
        in2 = self._wire_in(line, "q")
        if elem.text == "split":
            alpha = self._keyword_expr(line, "alpha")
            phi = self._keyword_expr(line, "phi")
            line.expect_punct(")")
            line.expect_end()
            out1, out2 = self._fresh_pair(first, second)
            return SplitStmt(loc, out1, out2, in1, in2, alpha, phi)
        if elem.text == "squeeze":
            gain = self._keyword_expr(line, "gain")
            phase = self._keyword_expr(line, "phase")
            line.expect_punct(")")
            line.expect_end()
            out1, out2 = self._fresh_pair(first, second)
            return SqueezeStmt(loc, out1, out2, in1, in2, gain, phase)
        if elem.text == "unsqueeze":
            gain = self._keyword_expr(line, "gain")
            line.expect_punct(")")
            line.expect_end()
            out1, out2 = self._fresh_pair(first, second)
            return UnsqueezeStmt(loc, out1, out2, in1, in2, gain)
        raise ParseError(f"unknown two-output element {elem.text!r}", elem.line, elem.column)

    def _single_element(self, line: _LineParser, loc: Loc, target: _Token) -> Stmt:
        elem = line.expect_ident("element name")
        line.expect_punct("(")
        if elem.text == "phase":
            operand = self._wire_in(line, "q")
            phi = self._keyword_expr(line, "phi")
            line.expect_punct(")")
            line.expect_end()
            out = self._fresh(target, "wire")
            self.wires[out] = "q"
            return PhaseStmt(loc, out, operand, phi)
        if elem.text == "homodyne":
            signal = self._wire_in(line, "q")
            line.expect_punct(",")
            resource = self._wire_in(line, "q")
            xphase = self._keyword_expr(line, "xphase")
            pphase = self._keyword_expr(line, "pphase")
            line.expect_punct(")")
            line.expect_end()
            out = self._fresh(target, "wire")
            self.wires[out] = "c"
            return HomodyneStmt(loc, out, signal, resource, xphase, pphase)
        if elem.text == "combine":
            terms = [self._combine_term(line)]
            while line.at_punct(","):
                line.next()
                terms.append(self._combine_term(line))
            line.expect_punct(")")
            line.expect_end()
            out = self._fresh(target, "wire")
            self.wires[out] = "c"
            return CombineStmt(loc, out, tuple(terms))
        if elem.text == "displace":
            resource = self._wire_in(line, "q")
            line.expect_punct(",")
            record = self._wire_in(line, "c")
            gain = self._keyword_expr(line, "gain")
            claimed = None
            if line.at_punct(","):
                line.next()
                line.expect_keyword("bin")
                line.expect_punct("=")
                claimed = line.expect_int("bin")
            line.expect_punct(")")
            line.expect_end()
            out = self._fresh(target, "wire")
            self.wires[out] = "q"
            return DisplaceStmt(loc, out, resource, record, gain, claimed)
        raise ParseError(f"unknown element {elem.text!r}", elem.line, elem.column)

    def _combine_term(self, line: _LineParser) -> tuple[CoefExpr, str]:
        start = line.peek()
        expr = line.parse_expr()
        if not isinstance(expr, Mul) or not isinstance(expr.right, Param):
            where = start if start is not None else _Token("", "", line.line, line.end_column)
            raise ParseError(
                "combine term must be WEIGHT*RECORD", where.line, where.column
            )
        record = expr.right.name
        if self.wires.get(record) != "c":
            where = start if start is not None else _Token("", "", line.line, line.end_column)
            raise ParseError(
                f"wire {record!r} is not a measurement record", where.line, where.column
            )
        weight = expr.left
        for name in sorted(weight.parameters()):
            if name not in self.params:
                raise ParseError(
                    f"undeclared parameter {name!r}",
                    start.line if start is not None else line.line,
                    start.column if start is not None else 1,
                )
        return weight, record


def parse_circuit(text: str) -> CircuitAst:
    """Parse source text; raises ParseError with line/column on failure."""
    if not isinstance(text, str):
        raise ParseError("source must be text", 1, 1)
    return _CircuitParser().parse(text)


# ---------------------------------------------------------------------------
# canonical serialization

_LEVEL_ADD, _LEVEL_MUL, _LEVEL_UNARY, _LEVEL_ATOM = 1, 2, 3, 4


def format_number(value: float) -> str:
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError("cannot serialize a non-finite number")
    if value == 0:
        return "0"
    if float(value).is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


def format_coef(expr: CoefExpr) -> str:
    return _format_expr(expr, 0)


def _format_expr(expr: CoefExpr, need: int) -> str:
    if isinstance(expr, Num):
        value = expr.value
        if value.imag != 0:
            raise ValueError("complex literals have no source form; build them from i")
        if value.real < 0:
            text = "-" + format_number(-value.real)
            return f"({text})" if need > _LEVEL_UNARY else text
        return format_number(value.real)
    if isinstance(expr, Param):
        return expr.name
    if isinstance(expr, PiConst):
        return "pi"
    if isinstance(expr, ImagUnit):
        return "i"
    if isinstance(expr, Call):
        return f"{expr.func}({_format_expr(expr.arg, 0)})"
    if isinstance(expr, Neg):
        text = "-" + _format_expr(expr.operand, _LEVEL_UNARY)
        return f"({text})" if need > _LEVEL_UNARY else text
    if isinstance(expr, (Add, Sub)):
        op = " + " if isinstance(expr, Add) else " - "
        text = _format_expr(expr.left, _LEVEL_ADD) + op + _format_expr(expr.right, _LEVEL_ADD + 1)
        return f"({text})" if need > _LEVEL_ADD else text
    if isinstance(expr, (Mul, Div)):
        op = "*" if isinstance(expr, Mul) else "/"
        text = _format_expr(expr.left, _LEVEL_MUL) + op + _format_expr(expr.right, _LEVEL_MUL + 1)
        return f"({text})" if need > _LEVEL_MUL else text
    raise ValueError(f"expression {type(expr).__name__} has no source form")


def _format_protocol_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, tuple):
        return "[" + ", ".join(_format_protocol_value(item) for item in value) + "]"
    if isinstance(value, (int, float)):
        return format_number(float(value))
    raise ValueError(f"protocol argument {value!r} has no source form")


def serialize_statement(stmt: Stmt) -> str:
    if isinstance(stmt, ParamDecl):
        value = "infinity" if stmt.infinite else format_number(stmt.value)
        return f"param {stmt.name} = {value}"
    if isinstance(stmt, ModeDecl):
        return f"mode {stmt.kind.value} {stmt.name} rail={stmt.rail} bin={stmt.time_bin}"
    if isinstance(stmt, SplitStmt):
        return (
            f"({stmt.out_minus}, {stmt.out_plus}) = split({stmt.in_t}, {stmt.in_r}, "
            f"alpha={format_coef(stmt.alpha)}, phi={format_coef(stmt.phi)})"
        )
    if isinstance(stmt, SqueezeStmt):
        return (
            f"({stmt.out1}, {stmt.out2}) = squeeze({stmt.in1}, {stmt.in2}, "
            f"gain={format_coef(stmt.gain)}, phase={format_coef(stmt.phase)})"
        )
    if isinstance(stmt, UnsqueezeStmt):
        return (
            f"({stmt.out1}, {stmt.out2}) = unsqueeze({stmt.in1}, {stmt.in2}, "
            f"gain={format_coef(stmt.gain)})"
        )
    if isinstance(stmt, PhaseStmt):
        return f"{stmt.out} = phase({stmt.operand}, phi={format_coef(stmt.phi)})"
    if isinstance(stmt, HomodyneStmt):
        return (
            f"{stmt.out} = homodyne({stmt.signal}, {stmt.resource}, "
            f"xphase={format_coef(stmt.xphase)}, pphase={format_coef(stmt.pphase)})"
        )
    if isinstance(stmt, CombineStmt):
        terms = ", ".join(
            f"{_format_expr(weight, _LEVEL_MUL)}*{record}" for weight, record in stmt.terms
        )
        return f"{stmt.out} = combine({terms})"
    if isinstance(stmt, DisplaceStmt):
        claim = "" if stmt.claimed_bin is None else f", bin={stmt.claimed_bin}"
        return (
            f"{stmt.out} = displace({stmt.resource}, {stmt.record}, "
            f"gain={format_coef(stmt.gain)}{claim})"
        )
    if isinstance(stmt, OutputStmt):
        text = f"output {stmt.name} = {stmt.wire}"
        if stmt.slot_bin is not None:
            text += f" bin={stmt.slot_bin}"
        if stmt.role is not None:
            text += f" role={stmt.role}"
        return text
    if isinstance(stmt, ProtocolDecl):
        args = ", ".join(f"{key}={_format_protocol_value(value)}" for key, value in stmt.args)
        return f"protocol {stmt.name}({args})"
    raise ValueError(f"statement {type(stmt).__name__} has no source form")


def serialize_circuit(ast: CircuitAst) -> str:
    return "\n".join(serialize_statement(stmt) for stmt in ast.statements) + "\n"
