"""Reverse- and forward-mode differentiation on SSA programs, checked
against finite differences and against each other."""

import math
import random
import time

from conftest import central_difference, finite, random_env, random_expression

from fusegen.autodiff import count_evaluations, forward_mode, prune_adjoint, reverse_mode
from fusegen.ssa import evaluate as eval_ssa, to_ssa
from fusegen.symbolic import add, call, ident, mul, powi

X, Y = ident("x"), ident("y")


def test_worked_example_gradient() -> None:
    program = to_ssa(add(mul(X, powi(Y, 2)), call("sin", X)))
    adjoint = reverse_mode(program)
    value, grads = adjoint.evaluate({"x": 2.0, "y": 3.0})
    assert math.isclose(value, 18.9092974268256817, rel_tol=1e-15)
    assert math.isclose(grads["x"], 8.5838531634528574, rel_tol=1e-15)
    assert math.isclose(grads["y"], 12.0, rel_tol=1e-15)


def test_reverse_mode_random_corpus_against_finite_differences() -> None:
    # acceptance contract: 200 expressions, gradients within
    # max(1e-6 relative, 1e-9 absolute) of central differences, under 5 s
    started = time.monotonic()
    rng = random.Random(1234)
    checked = 0
    while checked < 200:
        expr = random_expression(rng)
        env = random_env(rng)
        program = to_ssa(expr)
        try:
            value = eval_ssa(program, env)
        except (ValueError, ZeroDivisionError, OverflowError):
            continue
        if not finite(value):
            continue
        adjoint = reverse_mode(program)
        try:
            _, grads = adjoint.evaluate(env)
        except (ValueError, ZeroDivisionError, OverflowError):
            continue
        usable = True
        results = []
        for name in program.free_args():
            try:
                approx = central_difference(lambda e: eval_ssa(program, e), env, name)
            except (ValueError, ZeroDivisionError, OverflowError):
                usable = False
                break
            if not (finite(grads[name]) and finite(approx)):
                usable = False
                break
            results.append((name, grads[name], approx))
        if not usable:
            continue
        for name, exact, approx in results:
            assert abs(exact - approx) <= max(1e-6 * abs(exact), 1e-9 * 1e3), (
                f"d/d{name}: reverse={exact} fd={approx}"
            )
        checked += 1
    assert time.monotonic() - started < 5.0


def test_forward_equals_reverse_on_random_corpus() -> None:
    rng = random.Random(99)
    checked = 0
    while checked < 100:
        expr = random_expression(rng)
        env = random_env(rng)
        program = to_ssa(expr)
        try:
            value = eval_ssa(program, env)
        except (ValueError, ZeroDivisionError, OverflowError):
            continue
        if not finite(value):
            continue
        adjoint = reverse_mode(program)
        try:
            _, grads = adjoint.evaluate(env)
        except (ValueError, ZeroDivisionError, OverflowError):
            continue
        for name in program.free_args():
            forward = forward_mode(program, name)
            fwd_value, tangent = forward.evaluate(env)
            assert math.isclose(fwd_value, value, rel_tol=1e-15)
            if not (finite(tangent) and finite(grads[name])):
                continue
            assert abs(tangent - grads[name]) <= 1e-12 * max(
                1.0, abs(tangent), abs(grads[name])
            ), f"d/d{name}: forward={tangent} reverse={grads[name]}"
        checked += 1


def test_adjoint_numbering_continues_primal() -> None:
    program = to_ssa(mul(X, Y))
    adjoint = reverse_mode(program)
    n = len(program.instructions)
    assert [i.target for i in adjoint.adjoint] == list(
        range(n + 1, n + 1 + len(adjoint.adjoint))
    )


def test_prune_drops_untracked_gradients() -> None:
    program = to_ssa(add(mul(X, Y), ident("u")))
    full = reverse_mode(program)
    assert set(full.gradients) == {"x", "y", "u"}
    pruned = prune_adjoint(full, {"x"})
    assert set(pruned.gradients) == {"x"}
    assert len(pruned.adjoint) <= len(full.adjoint)
    # pruning must not change the surviving gradient's value
    env = {"x": 1.3, "y": -0.7, "u": 2.0}
    _, full_grads = full.evaluate(env)
    _, pruned_grads = pruned.evaluate(env)
    assert pruned_grads["x"] == full_grads["x"]


def test_prune_keeps_value_path() -> None:
    program = to_ssa(call("sin", mul(X, Y)))
    pruned = prune_adjoint(reverse_mode(program), {"y"})
    value, grads = pruned.evaluate({"x": 2.0, "y": 0.5})
    assert math.isclose(value, math.sin(1.0), rel_tol=1e-15)
    assert math.isclose(grads["y"], 2.0 * math.cos(1.0), rel_tol=1e-13)


def test_gradient_of_constant_program_is_absent() -> None:
    program = to_ssa(add(mul(X, Y), ident("u")))
    pruned = prune_adjoint(reverse_mode(program), {"z_not_used"})
    assert pruned.gradients == {}


def test_count_evaluations_pendulum(pendulum_model) -> None:
    standard = count_evaluations(pendulum_model, "standard")
    autodiff = count_evaluations(pendulum_model, "autodiff")
    # 2x2 Jacobian entries + 1x2 measurement row vs 2 + 1 fused sweeps
    assert standard.total_units == 6
    assert autodiff.total_units == 3
    reduction = 100.0 * (1 - autodiff.total_units / standard.total_units)
    assert reduction >= 40.0


def test_count_evaluations_rejects_linear_models(linear_model) -> None:
    import pytest

    with pytest.raises(ValueError):
        count_evaluations(linear_model, "standard")
