"""Symbolic differentiation and simplification against numeric oracles."""

import math
import random

from conftest import central_difference, finite, random_env, random_expression

from fusegen.ast import Num
from fusegen.printer import format_expr
from fusegen.symbolic import (
    add,
    call,
    derivative,
    div,
    evaluate,
    ident,
    mul,
    num,
    powi,
    resolve_constants,
    simplify,
    sub,
    substitute,
)

X, Y = ident("x"), ident("y")


def test_evaluate_basic() -> None:
    expr = add(mul(X, powi(Y, 2)), call("sin", X))
    assert evaluate(expr, {"x": 2.0, "y": 3.0}) == 2.0 * 9.0 + math.sin(2.0)


def test_polynomial_derivative() -> None:
    # d/dx (x^3 + 2x) = 3x^2 + 2
    expr = add(powi(X, 3), mul(num(2.0), X))
    dx = derivative(expr, "x")
    for v in (-1.5, 0.0, 0.7, 2.0):
        assert math.isclose(evaluate(dx, {"x": v}), 3 * v * v + 2, rel_tol=1e-12)


def test_transcendental_derivatives() -> None:
    cases = [
        (call("sin", X), lambda v: math.cos(v)),
        (call("cos", X), lambda v: -math.sin(v)),
        (call("tan", X), lambda v: 1.0 / math.cos(v) ** 2),
        (call("exp", X), lambda v: math.exp(v)),
        (call("ln", X), lambda v: 1.0 / v),
        (call("sqrt", X), lambda v: 0.5 / math.sqrt(v)),
    ]
    for expr, expected in cases:
        dx = derivative(expr, "x")
        for v in (0.3, 1.0, 1.9):
            assert math.isclose(evaluate(dx, {"x": v}), expected(v), rel_tol=1e-12)


def test_quotient_rule() -> None:
    expr = div(X, add(Y, num(1.0)))
    dy = derivative(expr, "y")
    env = {"x": 3.0, "y": 2.0}
    assert math.isclose(evaluate(dy, env), -3.0 / 9.0, rel_tol=1e-12)


def test_derivative_of_unrelated_variable_is_zero() -> None:
    expr = mul(X, call("sin", X))
    dy = derivative(expr, "y")
    assert isinstance(dy, Num) and dy.value == 0.0


def test_derivative_matches_finite_differences_on_random_corpus() -> None:
    rng = random.Random(20240817)
    checked = 0
    while checked < 120:
        expr = random_expression(rng)
        env = random_env(rng)
        try:
            value = evaluate(expr, env)
        except (ValueError, ZeroDivisionError, OverflowError):
            continue
        if not finite(value):
            continue
        ok = True
        for name in ("x", "y", "u"):
            exact_expr = derivative(expr, name)
            try:
                exact = evaluate(exact_expr, env)
                approx = central_difference(lambda e: evaluate(expr, e), env, name)
            except (ValueError, ZeroDivisionError, OverflowError):
                ok = False
                break
            if not (finite(exact) and finite(approx)):
                ok = False
                break
            assert abs(exact - approx) <= max(1e-6 * abs(exact), 1e-6), (
                f"{format_expr(expr)} d/d{name}: exact={exact} approx={approx}"
            )
        if ok:
            checked += 1


def test_simplify_identities() -> None:
    zero, one = num(0.0), num(1.0)
    assert format_expr(simplify(add(X, zero))) == "x"
    assert format_expr(simplify(mul(X, one))) == "x"
    assert format_expr(simplify(mul(X, zero))) == "0.0"
    assert format_expr(simplify(sub(X, zero))) == "x"
    assert format_expr(simplify(powi(X, 1))) == "x"
    assert format_expr(simplify(powi(X, 0))) == "1.0"
    assert format_expr(simplify(div(X, one))) == "x"


def test_simplify_preserves_value() -> None:
    rng = random.Random(7)
    for _ in range(60):
        expr = random_expression(rng)
        env = random_env(rng)
        try:
            before = evaluate(expr, env)
        except (ValueError, ZeroDivisionError, OverflowError):
            continue
        if not finite(before):
            continue
        after = evaluate(simplify(expr), env)
        assert math.isclose(before, after, rel_tol=1e-12, abs_tol=1e-12)


def test_substitute_replaces_parameters() -> None:
    expr = add(ident("g"), X)
    assert evaluate(substitute(expr, {"g": num(5.0)}), {"x": 1.0}) == 6.0


def test_resolve_constants_replaces_constant_refs() -> None:
    from fusegen.ast import ConstantRef
    from fusegen.diagnostics import Span

    nowhere = Span(0, 0, 1, 1)
    expr = div(ConstantRef(nowhere, "g"), ident("L"))
    resolved = resolve_constants(expr, {"g": 9.80665})
    assert evaluate(resolved, {"L": 2.0}) == 9.80665 / 2.0
