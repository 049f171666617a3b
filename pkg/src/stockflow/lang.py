"""Parser and printer for the textual .sd model format.

One equation per line (`name = expression`), `#` comments, and
`#@slider name | min max step` directives.  Names are matched
case-insensitively with whitespace runs collapsed.  Multiword builtin
keywords (IF THEN ELSE, DELAY FIXED, RANDOM UNIFORM) are recognized only
when immediately followed by `(`; otherwise the words are part of an
identifier.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast import (
    Binary,
    BuiltinKind,
    Call,
    Compare,
    Equation,
    Expr,
    ModelAst,
    NameKey,
    NumberLit,
    SliderDirective,
    StockflowError,
    TIME_KEY,
    Unary,
    VarRef,
    normalize_name,
)

ERROR_KINDS = ("Lex", "Syntax", "Arity", "DuplicateDefinition", "ReservedName")


@dataclass(frozen=True)
class ParseError:
    line: int
    column: int
    message: str
    kind: str  # one of ERROR_KINDS

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.kind}: {self.message}"


class ModelParseError(StockflowError):
    """Raised with every error found in a source text, not just the first."""

    def __init__(self, errors: list[ParseError]):
        self.errors = errors
        summary = "; ".join(str(e) for e in errors[:5])
        if len(errors) > 5:
            summary += f"; ... ({len(errors)} errors total)"
        super().__init__(summary)


_KEYWORDS = {bk.keyword.lower(): bk for bk in BuiltinKind}

_COMPARE_OPS = ("<=", ">=", "<>", "<", ">", "=")
_IDENT_CONT = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_ ")


@dataclass(frozen=True)
class _Token:
    kind: str  # NUMBER IDENT BUILTIN OP EOF
    text: str
    column: int  # 1-based
    value: float | BuiltinKind | None = None


class _LineLexer:
    def __init__(self, text: str, line_no: int):
        self.text = text
        self.line_no = line_no
        self.pos = 0

    def error(self, col: int, message: str, kind: str = "Lex") -> ParseError:
        return ParseError(self.line_no, col, message, kind)

    def tokens(self) -> list[_Token]:
        out: list[_Token] = []
        text = self.text
        n = len(text)
        i = 0
        while i < n:
            ch = text[i]
            if ch in " \t":
                i += 1
                continue
            if ch == "#":  # trailing comment
                break
            col = i + 1
            if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
                i, tok = self._lex_number(i)
                out.append(tok)
                continue
            if ch.isalpha():
                i, tok = self._lex_word_run(i)
                out.append(tok)
                continue
            two = text[i : i + 2]
            if two in ("<=", ">=", "<>"):
                out.append(_Token("OP", two, col))
                i += 2
                continue
            if ch in "+-*/(),<>=":
                out.append(_Token("OP", ch, col))
                i += 1
                continue
            raise _LexFailure(self.error(col, f"unexpected character {ch!r}"))
        out.append(_Token("EOF", "", n + 1))
        return out

    def _lex_number(self, i: int) -> tuple[int, _Token]:
        text = self.text
        n = len(text)
        start = i
        while i < n and text[i].isdigit():
            i += 1
        if i < n and text[i] == ".":
            i += 1
            while i < n and text[i].isdigit():
                i += 1
        if i < n and text[i] in "eE":
            j = i + 1
            if j < n and text[j] in "+-":
                j += 1
            if j < n and text[j].isdigit():
                i = j
                while i < n and text[i].isdigit():
                    i += 1
        lexeme = text[start:i]
        try:
            value = float(lexeme)
        except ValueError:
            raise _LexFailure(self.error(start + 1, f"bad number literal {lexeme!r}"))
        return i, _Token("NUMBER", lexeme, start + 1, value)

    def _lex_word_run(self, i: int) -> tuple[int, _Token]:
        # Identifiers start with a letter and continue with letters, digits,
        # spaces and underscores; the run is trimmed of trailing spaces.
        text = self.text
        n = len(text)
        start = i
        while i < n and text[i] in _IDENT_CONT:
            i += 1
        end = i
        while end > start and text[end - 1] == " ":
            end -= 1
        lexeme = text[start:end]
        normalized = " ".join(lexeme.lower().split())
        builtin = _KEYWORDS.get(normalized)
        if builtin is not None and i < n and text[i] == "(":
            return i, _Token("BUILTIN", lexeme, start + 1, builtin)
        return i, _Token("IDENT", lexeme, start + 1)


class _LexFailure(Exception):
    def __init__(self, err: ParseError):
        self.err = err


class _ParseFailure(Exception):
    def __init__(self, err: ParseError):
        self.err = err


class _LineParser:
    def __init__(self, tokens: list[_Token], line_no: int):
        self.tokens = tokens
        self.line_no = line_no
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def fail(self, tok: _Token, message: str, kind: str = "Syntax") -> _ParseFailure:
        return _ParseFailure(ParseError(self.line_no, tok.column, message, kind))

    def expect_op(self, op: str) -> _Token:
        tok = self.peek()
        if tok.kind != "OP" or tok.text != op:
            shown = tok.text if tok.kind != "EOF" else "end of line"
            raise self.fail(tok, f"expected {op!r}, found {shown!r}")
        return self.advance()

    # --- grammar -----------------------------------------------------------

    def parse_equation(self) -> Equation:
        name_tok = self.peek()
        if name_tok.kind != "IDENT":
            raise self.fail(name_tok, "expected a variable name at start of equation")
        self.advance()
        name = normalize_name(name_tok.text)
        if name.key == TIME_KEY:
            raise _ParseFailure(
                ParseError(
                    self.line_no,
                    name_tok.column,
                    '"time" is reserved for the simulation clock and cannot be defined',
                    "ReservedName",
                )
            )
        self.expect_op("=")
        rhs = self.parse_rhs()
        self.expect_end()
        return Equation(name=name, rhs=rhs, source_line=self.line_no)

    def expect_end(self) -> None:
        tok = self.peek()
        if tok.kind != "EOF":
            raise self.fail(tok, f"unexpected {tok.text!r} after expression")

    def parse_rhs(self) -> Expr:
        # INTEG is only legal as the entire right-hand side: that equation
        # defines a stock.
        tok = self.peek()
        if tok.kind == "BUILTIN" and tok.value is BuiltinKind.INTEG:
            call = self.parse_call(allow_integ=True)
            end = self.peek()
            if end.kind != "EOF":
                raise self.fail(
                    end,
                    "INTEG must be the entire right-hand side of its equation",
                    "Arity",
                )
            return call
        return self.parse_additive()

    def parse_additive(self) -> Expr:
        expr = self.parse_multiplicative()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in "+-":
                self.advance()
                rhs = self.parse_multiplicative()
                expr = Binary(tok.text, expr, rhs)
            else:
                return expr

    def parse_multiplicative(self) -> Expr:
        expr = self.parse_unary()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in "*/":
                self.advance()
                rhs = self.parse_unary()
                expr = Binary(tok.text, expr, rhs)
            else:
                return expr

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "-":
            self.advance()
            return Unary(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            return NumberLit(tok.value)
        if tok.kind == "IDENT":
            self.advance()
            nxt = self.peek()
            if nxt.kind == "OP" and nxt.text == "(":
                raise self.fail(nxt, f"{tok.text!r} is not a builtin function")
            return VarRef(normalize_name(tok.text))
        if tok.kind == "BUILTIN":
            if tok.value is BuiltinKind.INTEG:
                raise self.fail(
                    tok,
                    "INTEG must be the entire right-hand side of its equation",
                    "Arity",
                )
            return self.parse_call(allow_integ=False)
        if tok.kind == "OP" and tok.text == "(":
            self.advance()
            expr = self.parse_additive()
            self.expect_op(")")
            return expr
        shown = tok.text if tok.kind != "EOF" else "end of line"
        raise self.fail(tok, f"expected an expression, found {shown!r}")

    def parse_call(self, allow_integ: bool) -> Expr:
        tok = self.advance()
        builtin: BuiltinKind = tok.value
        self.expect_op("(")
        args: list[Expr] = []
        if not (self.peek().kind == "OP" and self.peek().text == ")"):
            while True:
                if builtin is BuiltinKind.IF_THEN_ELSE and not args:
                    args.append(self.parse_condition())
                else:
                    args.append(self.parse_additive())
                nxt = self.peek()
                if nxt.kind == "OP" and nxt.text == ",":
                    self.advance()
                    continue
                break
        self.expect_op(")")
        if len(args) != builtin.arity:
            raise _ParseFailure(
                ParseError(
                    self.line_no,
                    tok.column,
                    f"{builtin.keyword} expects {builtin.arity} arguments, got {len(args)}",
                    "Arity",
                )
            )
        return Call(builtin, tuple(args))

    def parse_condition(self) -> Expr:
        # Comparisons are legal only here, as the first argument of
        # IF THEN ELSE; everywhere else a comparison operator is a syntax
        # error, which keeps boolean and numeric expressions separate.
        lhs = self.parse_additive()
        tok = self.peek()
        if not (tok.kind == "OP" and tok.text in _COMPARE_OPS):
            raise self.fail(
                tok, "IF THEN ELSE condition must be a comparison (<, <=, >, >=, =, <>)"
            )
        self.advance()
        rhs = self.parse_additive()
        return Compare(tok.text, lhs, rhs)


def _lex_line(text: str, line_no: int) -> list[_Token]:
    return _LineLexer(text, line_no).tokens()


def parse_expr(source: str, line_no: int = 1) -> Expr:
    """Parse a single expression; raises ModelParseError on failure."""
    try:
        parser = _LineParser(_lex_line(source, line_no), line_no)
        expr = parser.parse_rhs()
        parser.expect_end()
        return expr
    except _LexFailure as exc:
        raise ModelParseError([exc.err]) from None
    except _ParseFailure as exc:
        raise ModelParseError([exc.err]) from None


_DIRECTIVE_PREFIX = "#@slider"


def _parse_directive(stripped: str, line_no: int, col0: int) -> SliderDirective:
    body = stripped[len(_DIRECTIVE_PREFIX) :]
    if "|" not in body:
        raise _ParseFailure(
            ParseError(
                line_no, col0, "slider directive needs 'name | min max step'", "Syntax"
            )
        )
    name_part, _, range_part = body.partition("|")
    name_part = name_part.strip()
    if not name_part:
        raise _ParseFailure(
            ParseError(line_no, col0, "slider directive is missing a target name", "Syntax")
        )
    fields = range_part.split()
    if len(fields) != 3:
        raise _ParseFailure(
            ParseError(
                line_no,
                col0,
                f"slider directive needs three numbers (min max step), got {len(fields)}",
                "Syntax",
            )
        )
    try:
        lo, hi, step = (float(f) for f in fields)
    except ValueError:
        raise _ParseFailure(
            ParseError(line_no, col0, "slider range values must be numbers", "Syntax")
        ) from None
    if not lo < hi:
        raise _ParseFailure(
            ParseError(line_no, col0, "slider min must be less than max", "Syntax")
        )
    if not (step > 0 and step <= hi - lo):
        raise _ParseFailure(
            ParseError(line_no, col0, "slider step must be in (0, max - min]", "Syntax")
        )
    return SliderDirective(target=normalize_name(name_part), min=lo, max=hi, step=step)


def parse_model(source: str, model_id: str = "") -> ModelAst:
    """Parse a whole .sd source text.

    All detected errors are collected and raised together as a
    ModelParseError so a bad file reports every problem at once.
    """
    equations: list[Equation] = []
    directives: list[SliderDirective] = []
    errors: list[ParseError] = []
    seen: dict[str, int] = {}

    for line_no, raw in enumerate(source.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith(_DIRECTIVE_PREFIX):
            try:
                directives.append(
                    _parse_directive(stripped, line_no, raw.index(_DIRECTIVE_PREFIX) + 1)
                )
            except _ParseFailure as exc:
                errors.append(exc.err)
            continue
        if stripped.startswith("#"):
            continue
        try:
            eq = _LineParser(_lex_line(raw, line_no), line_no).parse_equation()
        except _LexFailure as exc:
            errors.append(exc.err)
            continue
        except _ParseFailure as exc:
            errors.append(exc.err)
            continue
        first = seen.get(eq.name.key)
        if first is not None:
            errors.append(
                ParseError(
                    line_no,
                    1,
                    f"duplicate definition of '{eq.name.canonical}' (first defined on line {first})",
                    "DuplicateDefinition",
                )
            )
            continue
        seen[eq.name.key] = line_no
        equations.append(eq)

    if errors:
        raise ModelParseError(errors)
    return ModelAst(equations=tuple(equations), directives=tuple(directives), model_id=model_id)


# --- printing ---------------------------------------------------------------

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_UNARY = 3
_PREC_PRIMARY = 4


def format_number(value: float) -> str:
    """Shortest decimal that round-trips; integral values print bare."""
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError(f"cannot print non-finite number {value!r}")
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def print_expr(e: Expr) -> str:
    return _print(e, 0)


def _print(e: Expr, min_prec: int) -> str:
    if isinstance(e, NumberLit):
        return format_number(e.value)
    if isinstance(e, VarRef):
        return e.name.canonical
    if isinstance(e, Unary):
        text = "-" + _print(e.operand, _PREC_UNARY)
        return f"({text})" if min_prec > _PREC_UNARY else text
    if isinstance(e, Binary):
        prec = _PREC_ADD if e.op in "+-" else _PREC_MUL
        # Left-associative: the right child needs parens at equal precedence
        # so the printed text re-parses to the same tree shape.
        text = f"{_print(e.lhs, prec)} {e.op} {_print(e.rhs, prec + 1)}"
        return f"({text})" if min_prec > prec else text
    if isinstance(e, Compare):
        return f"{_print(e.lhs, _PREC_ADD)} {e.op} {_print(e.rhs, _PREC_ADD)}"
    if isinstance(e, Call):
        args = ", ".join(_print(a, 0) for a in e.args)
        return f"{e.builtin.keyword}({args})"
    raise TypeError(f"unknown expression node {e!r}")


def print_model(ast: ModelAst) -> str:
    """Canonical text form: directives first, then equations in stored order."""
    lines: list[str] = []
    for d in ast.directives:
        lines.append(
            f"#@slider {d.target.canonical} | "
            f"{format_number(d.min)} {format_number(d.max)} {format_number(d.step)}"
        )
    for eq in ast.equations:
        lines.append(f"{eq.name.canonical} = {print_expr(eq.rhs)}")
    return "\n".join(lines) + ("\n" if lines else "")
