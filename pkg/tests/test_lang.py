import random

import pytest

from stockflow import (
    Binary,
    BuiltinKind,
    Call,
    Compare,
    ModelParseError,
    NumberLit,
    Unary,
    VarRef,
    parse_expr,
    parse_model,
    print_expr,
    print_model,
)
from stockflow.lang import format_number


def errors_of(source):
    with pytest.raises(ModelParseError) as exc:
        parse_model(source)
    return exc.value.errors


# --- parsing ------------------------------------------------------------------


def test_parse_complaints_equation():
    ast = parse_model("complaints = (3 / quality perceived by customers) - 2\n")
    (eq,) = ast.equations
    assert eq.name.key == "complaints"
    assert eq.rhs == Binary(
        "-",
        Binary("/", NumberLit(3.0), VarRef(eq.rhs.lhs.rhs.name)),
        NumberLit(2.0),
    )
    assert eq.rhs.lhs.rhs.name.key == "quality perceived by customers"


def test_arity_error():
    errs = errors_of("x = MAX(1)\n")
    assert len(errs) == 1
    assert errs[0].kind == "Arity"
    assert "MAX" in errs[0].message


def test_parse_stock_equation():
    ast = parse_model(
        "Trained Testers = INTEG (training completion rate - quitting rate, 100 * 24 / 23)\n"
    )
    (eq,) = ast.equations
    assert isinstance(eq.rhs, Call)
    assert eq.rhs.builtin is BuiltinKind.INTEG
    assert len(eq.rhs.args) == 2


def test_parse_expr_step_and_random_uniform():
    e = parse_expr(
        "STEP(0.2, 5) * ((1-A) + A * RANDOM UNIFORM(-0.5, 0.5, NOISE SEQUENCE SEED))"
    )
    assert isinstance(e, Binary) and e.op == "*"
    assert isinstance(e.lhs, Call) and e.lhs.builtin is BuiltinKind.STEP
    ru = e.rhs.rhs.rhs
    assert isinstance(ru, Call) and ru.builtin is BuiltinKind.RANDOM_UNIFORM
    assert ru.args[0] == Unary(NumberLit(0.5))


def test_unary_minus_binds_tighter_than_plus():
    e = parse_expr("-3 + 2")
    assert e == Binary("+", Unary(NumberLit(3.0)), NumberLit(2.0))


def test_parse_if_then_else_with_comparison():
    e = parse_expr(
        "IF THEN ELSE(averaged complaints < 0.5, 0, 200 * (averaged complaints - 0.5))"
    )
    assert isinstance(e, Call) and e.builtin is BuiltinKind.IF_THEN_ELSE
    cond = e.args[0]
    assert isinstance(cond, Compare) and cond.op == "<"


def test_comparison_outside_condition_rejected():
    with pytest.raises(ModelParseError):
        parse_expr("1 < 2")
    with pytest.raises(ModelParseError):
        parse_expr("MAX(a < b, 1)")


def test_condition_must_be_comparison():
    with pytest.raises(ModelParseError) as exc:
        parse_expr("IF THEN ELSE(averaged complaints, 0, 1)")
    assert "comparison" in exc.value.errors[0].message


def test_keyword_words_can_be_identifiers():
    # STEP not followed by ( is a plain variable name.
    ast = parse_model("step = 5\nx = step * 2\n")
    assert ast.equations[0].name.key == "step"
    assert ast.equations[1].rhs.lhs == VarRef(ast.equations[1].rhs.lhs.name)


def test_multiword_keyword_requires_paren():
    ast = parse_model("delay fixed = 1\n")
    assert ast.equations[0].name.key == "delay fixed"


def test_nested_integ_rejected():
    errs = errors_of("x = 1 + INTEG(a, b)\n")
    assert any(e.kind == "Arity" and "INTEG" in e.message for e in errs)
    errs = errors_of("x = INTEG(a, b) + 1\n")
    assert any(e.kind == "Arity" for e in errs)


def test_duplicate_definition():
    errs = errors_of("a = 1\nA  =  2\n")
    assert len(errs) == 1
    assert errs[0].kind == "DuplicateDefinition"
    assert errs[0].line == 2


def test_time_is_reserved():
    errs = errors_of("Time = 4\n")
    assert errs[0].kind == "ReservedName"


def test_error_recovery_reports_all_bad_lines():
    source = "a = \nb = MAX(1)\nc = 1 +\nok = 2\n"
    errs = errors_of(source)
    assert len(errs) >= 3
    assert {e.line for e in errs} >= {1, 2, 3}


def test_error_position_points_into_line():
    errs = errors_of("x = 1 + $\n")
    assert errs[0].line == 1
    assert 1 <= errs[0].column <= len("x = 1 + $") + 1


def test_case_and_whitespace_insensitive_refs():
    ast = parse_model("TRAINED TESTERS = 1\nx = trained   testers * 2\n")
    ref = ast.equations[1].rhs.lhs
    assert ref.name.key == ast.equations[0].name.key


def test_directive_parsing():
    ast = parse_model("#@slider HIRING DELAY | 0.5 8 0.5\nHIRING DELAY = 2\n")
    (d,) = ast.directives
    assert d.target.key == "hiring delay"
    assert (d.min, d.max, d.step) == (0.5, 8.0, 0.5)


def test_directive_validation():
    assert errors_of("#@slider A | 1 0 1\nA = 0\n")[0].kind == "Syntax"
    assert errors_of("#@slider A | 0 1 0\nA = 0\n")[0].kind == "Syntax"
    assert errors_of("#@slider A | 0 1 2\nA = 0\n")[0].kind == "Syntax"


def test_comments_and_blank_lines_ignored():
    ast = parse_model("# heading\n\na = 1  # trailing\n")
    assert len(ast.equations) == 1


# --- printing -----------------------------------------------------------------


def test_print_quitting_rate():
    ast = parse_model("quitting rate = Trained Testers / 36\n")
    assert print_model(ast) == "quitting rate = Trained Testers / 36\n"


def test_print_empty_model():
    assert print_model(parse_model("")) == ""


def test_print_preserves_canonical_spelling():
    ast = parse_model("Trained Testers = 1\nx = TRAINED TESTERS + 1\n")
    out = print_model(ast)
    assert "x = TRAINED TESTERS + 1" in out


def test_print_minimal_parens_keep_structure():
    cases = [
        "x = a - (b - c)",
        "x = (a - b) - c",
        "x = a * (b + c)",
        "x = -(a + b)",
        "x = a / (b * c)",
        "x = a - -b",
    ]
    for source in cases:
        first = parse_model(source)
        printed = print_model(first)
        again = parse_model(printed)
        assert again.equations == first.equations, source


def test_number_formatting_round_trips():
    for v in [0.125, 3.0, 200.0, 0.0, -0.5, 1e20, 104.34782608695652, 1e-9]:
        assert float(format_number(v)) == v


def _random_expr(rng, names, depth):
    choice = rng.random()
    if depth <= 0 or choice < 0.3:
        if rng.random() < 0.5:
            return f"{rng.randint(0, 40)}"
        return rng.choice(names)
    if choice < 0.75:
        op = rng.choice("+-*/")
        return f"{_random_expr(rng, names, depth - 1)} {op} {_random_expr(rng, names, depth - 1)}"
    if choice < 0.85:
        return f"-{_random_expr(rng, names, depth - 1)}"
    if choice < 0.95:
        return f"({_random_expr(rng, names, depth - 1)})"
    fn = rng.choice(["MAX", "MIN"])
    return f"{fn}({_random_expr(rng, names, depth - 1)}, {_random_expr(rng, names, depth - 1)})"


def test_round_trip_random_models():
    rng = random.Random(20210918)
    names = ["alpha", "beta two", "Gamma Delta", "x_1"]
    for trial in range(60):
        lines = [f"{n} = {_random_expr(rng, names, 3)}" for n in names]
        source = "\n".join(lines) + "\n"
        first = parse_model(source)
        printed = print_model(first)
        second = parse_model(printed)
        assert second.equations == first.equations
        assert print_model(second) == printed


def test_corpus_round_trip_fixed_point(baseline_ast, improved_ast):
    for ast in (baseline_ast, improved_ast):
        printed = print_model(ast)
        reparsed = parse_model(printed, model_id=ast.model_id)
        assert reparsed.equations == ast.equations
        assert reparsed.directives == ast.directives
        assert print_model(reparsed) == printed


def test_crlf_accepted():
    ast = parse_model("a = 1\r\nb = a + 1\r\n")
    assert len(ast.equations) == 2
