"""SSA construction: shape, numbering, evaluation, validation."""

import math
import random

import pytest
from conftest import finite, random_env, random_expression

from fusegen.ssa import Arg, Imm, SSAProgram, Temp, evaluate, to_ssa
from fusegen.symbolic import add, call, evaluate as eval_expr, ident, mul, num, powi

X, Y = ident("x"), ident("y")


def test_worked_example_shape() -> None:
    # z = x * y**2 + sin(x) flattens to exactly four instructions:
    # the square, the product, the sine, and the sum.
    program = to_ssa(add(mul(X, powi(Y, 2)), call("sin", X)))
    rendered = [str(instr) for instr in program.instructions]
    assert rendered == [
        "r1 = pow y 2.0",
        "r2 = mul x r1",
        "r3 = sin x",
        "r4 = add r2 r3",
    ]
    assert program.result == 4


def test_worked_example_value() -> None:
    program = to_ssa(add(mul(X, powi(Y, 2)), call("sin", X)))
    value = evaluate(program, {"x": 2.0, "y": 3.0})
    assert math.isclose(value, 18.9092974268256817, rel_tol=1e-15)


def test_temporaries_are_one_based_and_sequential() -> None:
    program = to_ssa(add(mul(X, Y), mul(Y, X)))
    assert [i.target for i in program.instructions] == list(
        range(1, len(program.instructions) + 1)
    )
    program.validate()


def test_leaves_are_operands_not_instructions() -> None:
    # a bare identifier or literal needs one instruction at most
    program = to_ssa(ident("x"))
    assert len(program.instructions) == 1
    assert program.instructions[0].op == "load"
    assert program.instructions[0].operands == (Arg("x"),)

    program = to_ssa(num(2.5))
    assert len(program.instructions) == 1
    assert program.instructions[0].operands == (Imm(2.5),)


def test_free_args_in_first_appearance_order() -> None:
    program = to_ssa(add(mul(Y, X), ident("u")))
    assert program.free_args() == ["y", "x", "u"]


def test_validate_rejects_bad_numbering() -> None:
    program = to_ssa(add(X, Y))
    broken = SSAProgram(
        [program.instructions[0].__class__(5, "add", (Arg("x"), Arg("y")))], 5
    )
    with pytest.raises(ValueError):
        broken.validate()


def test_validate_rejects_undefined_temp() -> None:
    from fusegen.ssa import Instruction

    broken = SSAProgram([Instruction(1, "add", (Temp(3), Arg("x")))], 1)
    with pytest.raises(ValueError):
        broken.validate()


def test_ssa_evaluation_matches_tree_evaluation() -> None:
    rng = random.Random(11)
    checked = 0
    while checked < 80:
        expr = random_expression(rng)
        env = random_env(rng)
        try:
            direct = eval_expr(expr, env)
        except (ValueError, ZeroDivisionError, OverflowError):
            continue
        if not finite(direct):
            continue
        program = to_ssa(expr)
        program.validate()
        assert math.isclose(evaluate(program, env), direct, rel_tol=1e-12, abs_tol=1e-12)
        checked += 1
