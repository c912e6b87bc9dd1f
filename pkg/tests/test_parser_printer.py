"""Grammar coverage and the parse -> print -> parse round trip."""

from pathlib import Path

import pytest

from fusegen import load_description, parse_description, parse_only
from fusegen.ast import BinOp, Call, Num, Pow
from fusegen.diagnostics import SourceError
from fusegen.parser import Parser
from fusegen.lexer import tokenize
from fusegen.printer import format_description, format_expr, format_number


def parse_expression(text: str):
    return Parser(tokenize(text), "<expr>").parse_expr()


def test_reference_description_structure(corpus: Path) -> None:
    desc = parse_only((corpus / "pendulum.nt").read_text(), "pendulum.nt")
    assert [c.name for c in desc.constants] == ["g"]
    assert desc.constants[0].value == 9.80665
    assert [inv.name for inv in desc.invariants] == [
        "pendulum_process",
        "pendulum_measure",
    ]
    process, measure = desc.invariants
    assert [p.name for p in process.parameters] == ["theta", "dtheta", "dt", "L"]
    assert [c.lhs for c in process.constraints] == ["theta", "dtheta"]
    assert [p.name for p in measure.parameters] == ["theta", "dtheta", "dt", "gyro_z"]
    assert [c.lhs for c in measure.constraints] == ["gyro_z"]
    assert desc.includes == ["NewtonBaseSignals.nt"]


def test_include_semicolon_is_optional() -> None:
    bare = parse_only('include "a.nt"\n')
    terminated = parse_only('include "a.nt";\n')
    assert bare.includes == terminated.includes == ["a.nt"]


def test_constant_unit_is_optional() -> None:
    desc = parse_only("c : constant = 2.5;\n")
    assert desc.constants[0].unit is None
    assert desc.constants[0].value == 2.5


def test_signal_declaration() -> None:
    desc = parse_only("accel : signal = meter / second ** 2;\n")
    assert desc.signals[0].name == "accel"


def test_gaussian_annotation() -> None:
    desc = parse_only(
        "m : invariant( a : angle = Gaussian(0.0, 0.25), b : angle ) = { a ~ b }\n"
    )
    unc = desc.invariants[0].parameters[0].uncertainty
    assert unc is not None
    assert (unc.mean, unc.variance) == (0.0, 0.25)
    assert desc.invariants[0].parameters[1].uncertainty is None


def test_expression_precedence() -> None:
    expr = parse_expression("a + b * c ** 2")
    assert isinstance(expr, BinOp) and expr.op == "+"
    assert isinstance(expr.right, BinOp) and expr.right.op == "*"
    assert isinstance(expr.right.right, Pow)


def test_unary_minus_and_calls() -> None:
    expr = parse_expression("-sin(x) * 2")
    assert isinstance(expr, BinOp) and expr.op == "*"
    assert format_expr(expr) == "-sin(x) * 2.0"


def test_parse_error_format() -> None:
    with pytest.raises(SourceError) as info:
        parse_description("pendulum : invariant( =", "broken.nt")
    diag = info.value.diagnostics[0]
    rendered = diag.render()
    assert rendered.startswith("broken.nt:1:")
    assert ": error: " in rendered


def test_duplicate_invariant_rejected() -> None:
    src = "a : invariant( x : angle ) = { x ~ x }\n" * 2
    with pytest.raises(SourceError) as info:
        parse_description(src)
    assert "duplicate invariant 'a'" in info.value.diagnostics[0].message


def test_missing_constraint_separator() -> None:
    with pytest.raises(SourceError):
        parse_description("a : invariant( x : angle ) = { x ~ x x ~ x }")


@pytest.mark.parametrize(
    "name",
    [
        "pendulum.nt",
        "pendulum_filter.nt",
        "pendulum_noisy.nt",
        "pendulum_damped.nt",
        "diffdrive.nt",
        "constant_velocity.nt",
        "NewtonBaseSignals.nt",
    ],
)
def test_print_parse_round_trip(corpus: Path, name: str) -> None:
    desc = parse_only((corpus / name).read_text(), name)
    printed = format_description(desc)
    reparsed = parse_only(printed, name)
    assert format_description(reparsed) == printed


def test_format_number_is_minimal() -> None:
    assert format_number(1.0) == "1.0"
    assert format_number(9.80665) == "9.80665"
    assert format_number(1e-06) == "1e-06"
    assert float(format_number(0.1)) == 0.1


def test_loaded_corpus_has_no_warnings(corpus: Path) -> None:
    for name in ("pendulum_filter.nt", "pendulum_damped.nt", "diffdrive.nt"):
        _, diags = load_description(corpus / name, search_paths=[str(corpus)])
        assert diags == [], f"{name}: {[d.render() for d in diags]}"
