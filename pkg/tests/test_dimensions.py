"""Dimensional analysis: algebra on exponent vectors, checking of whole
descriptions, and the labeled corruption corpus."""

from fractions import Fraction
from pathlib import Path

from mutation_corpus import MUTATIONS, reference_source

from fusegen import build_signal_table, parse_only
from fusegen.diagnostics import Diagnostic, SourceError
from fusegen.dimensions import DIMENSIONLESS, Dimension, base_dimension, check_description
from fusegen.signals import IncludeResolver, load_description_text

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def check_errors(source: str, filename: str = "pendulum.nt") -> list[Diagnostic]:
    """Errors from the full checking pipeline on in-memory source."""
    resolver = IncludeResolver([str(CORPUS)])
    try:
        desc, _ = load_description_text(source, filename, resolver)
    except SourceError as failure:
        return [d for d in failure.diagnostics if d.severity == "error"]
    table, diags = build_signal_table(desc)
    diags += check_description(desc, table)
    return [d for d in diags if d.severity == "error"]


# -- dimension algebra -------------------------------------------------------


def test_dimension_arithmetic() -> None:
    time = base_dimension("time")
    length = base_dimension("length")
    speed = length / time
    assert speed.render() == "length * time**-1"
    assert (speed * time) == length
    assert speed.power(2).render() == "length**2 * time**-2"
    assert (length * length).root(2) == length
    assert DIMENSIONLESS.is_dimensionless
    assert (time / time).is_dimensionless


def test_fractional_exponent_rendering() -> None:
    time = base_dimension("time")
    assert time.root(2).render() == "time**(1/2)"
    assert (DIMENSIONLESS / time.root(2)).render() == "time**(-1/2)"
    assert time.root(2).exponents[Dimension().exponents.index(Fraction(0))] in (
        Fraction(1, 2),
        Fraction(0),
    )


# -- whole-description checking ----------------------------------------------


def test_reference_description_is_accepted_verbatim() -> None:
    assert check_errors(reference_source()) == []


def test_diagnostic_rendering_format() -> None:
    source = reference_source().replace("sin(theta)", "sin(dt)")
    errors = check_errors(source)
    assert len(errors) == 1
    rendered = errors[0].render()
    assert rendered == (
        "pendulum.nt:12:31: error: "
        "argument of sin() must be dimensionless, not time"
    )


def test_mutation_corpus_is_rejected_with_labeled_violations() -> None:
    source = reference_source()
    for mutation in MUTATIONS:
        actual = [(d.line, d.message) for d in check_errors(mutation.apply(source))]
        assert actual == mutation.expected, (
            f"{mutation.name}: expected {mutation.expected}, got {actual}"
        )


def test_errors_do_not_cascade() -> None:
    # one bad subexpression must produce one diagnostic, not a chain
    source = reference_source().replace("g/L", "g0/L")
    errors = check_errors(source)
    assert len(errors) == 1
    assert "'g0' is not a parameter or constant" in errors[0].message


def test_angle_is_dimensionless() -> None:
    desc = parse_only(
        "m : invariant( a : angle, w : angularRate, dt : time ) = { a ~ a + w * dt }"
    )
    table, diags = build_signal_table(desc)
    assert check_description(desc, table) == []


def test_derived_signal_declaration_participates() -> None:
    desc = parse_only(
        "jerk : signal = length / time ** 3;\n"
        "m : invariant( j : jerk, dt : time, a : acceleration ) = { a ~ j * dt }"
    )
    table, _ = build_signal_table(desc)
    assert check_description(desc, table) == []
