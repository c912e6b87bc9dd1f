"""Symbolic manipulation of description expressions: evaluation,
conservative simplification, substitution, and differentiation."""

from __future__ import annotations

import math

from .ast import BinOp, Call, ConstantRef, Expr, Ident, Neg, Num, Pow
from .diagnostics import Span

_NOWHERE = Span(0, 0, 0, 0)


def num(value: float) -> Num:
    return Num(_NOWHERE, float(value))


def ident(name: str) -> Ident:
    return Ident(_NOWHERE, name)


def add(left: Expr, right: Expr) -> Expr:
    return BinOp(_NOWHERE, "+", left, right)


def sub(left: Expr, right: Expr) -> Expr:
    return BinOp(_NOWHERE, "-", left, right)


def mul(left: Expr, right: Expr) -> Expr:
    return BinOp(_NOWHERE, "*", left, right)


def div(left: Expr, right: Expr) -> Expr:
    return BinOp(_NOWHERE, "/", left, right)


def neg(operand: Expr) -> Expr:
    return Neg(_NOWHERE, operand)


def powi(base: Expr, exponent: int) -> Expr:
    return Pow(_NOWHERE, base, exponent)


def call(func: str, arg: Expr) -> Expr:
    return Call(_NOWHERE, func, arg)


def apply_function(func: str, value: float) -> float:
    if func == "sin":
        return math.sin(value)
    if func == "cos":
        return math.cos(value)
    if func == "tan":
        return math.tan(value)
    if func == "exp":
        return math.exp(value)
    if func == "ln":
        return math.log(value)
    if func == "sqrt":
        return math.sqrt(value)
    raise ValueError(f"unknown function '{func}'")


def evaluate(expr: Expr, env: dict[str, float]) -> float:
    """Numeric value of *expr*; the environment must bind every parameter
    and constant name it references."""
    if isinstance(expr, (Ident, ConstantRef)):
        try:
            return env[expr.name]
        except KeyError:
            raise KeyError(f"'{expr.name}' is not bound in the evaluation environment") from None
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Neg):
        return -evaluate(expr.operand, env)
    if isinstance(expr, BinOp):
        left = evaluate(expr.left, env)
        right = evaluate(expr.right, env)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        return left / right
    if isinstance(expr, Pow):
        return evaluate(expr.base, env) ** expr.exponent
    if isinstance(expr, Call):
        return apply_function(expr.func, evaluate(expr.arg, env))
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def substitute(expr: Expr, bindings: dict[str, Expr]) -> Expr:
    """Replace parameter references by the given expressions."""
    if isinstance(expr, Ident):
        return bindings.get(expr.name, expr)
    if isinstance(expr, Neg):
        return Neg(expr.span, substitute(expr.operand, bindings))
    if isinstance(expr, BinOp):
        return BinOp(
            expr.span, expr.op, substitute(expr.left, bindings), substitute(expr.right, bindings)
        )
    if isinstance(expr, Pow):
        return Pow(expr.span, substitute(expr.base, bindings), expr.exponent)
    if isinstance(expr, Call):
        return Call(expr.span, expr.func, substitute(expr.arg, bindings))
    return expr


def resolve_constants(expr: Expr, values: dict[str, float]) -> Expr:
    """Replace constant references by numeric literals."""
    if isinstance(expr, ConstantRef):
        return Num(expr.span, values[expr.name])
    if isinstance(expr, Neg):
        return Neg(expr.span, resolve_constants(expr.operand, values))
    if isinstance(expr, BinOp):
        return BinOp(
            expr.span,
            expr.op,
            resolve_constants(expr.left, values),
            resolve_constants(expr.right, values),
        )
    if isinstance(expr, Pow):
        return Pow(expr.span, resolve_constants(expr.base, values), expr.exponent)
    if isinstance(expr, Call):
        return Call(expr.span, expr.func, resolve_constants(expr.arg, values))
    return expr


def _is_zero(expr: Expr) -> bool:
    return isinstance(expr, Num) and expr.value == 0


def _is_one(expr: Expr) -> bool:
    return isinstance(expr, Num) and expr.value == 1


def simplify(expr: Expr) -> Expr:
    """Conservative bottom-up cleanup: constant folding plus the 0/1
    identities.  No factoring or reassociation, so the shape of what the
    author wrote (and what differentiation produced) stays recognizable."""
    if isinstance(expr, Neg):
        operand = simplify(expr.operand)
        if isinstance(operand, Num):
            return Num(expr.span, -operand.value)
        if isinstance(operand, Neg):
            return operand.operand
        return Neg(expr.span, operand)

    if isinstance(expr, BinOp):
        left = simplify(expr.left)
        right = simplify(expr.right)
        if isinstance(left, Num) and isinstance(right, Num) and not (
            expr.op == "/" and right.value == 0
        ):
            return Num(expr.span, evaluate(BinOp(expr.span, expr.op, left, right), {}))
        if expr.op == "+":
            if _is_zero(left):
                return right
            if _is_zero(right):
                return left
        elif expr.op == "-":
            if _is_zero(right):
                return left
            if _is_zero(left):
                return simplify(Neg(expr.span, right))
        elif expr.op == "*":
            if _is_zero(left) or _is_zero(right):
                return Num(expr.span, 0.0)
            if _is_one(left):
                return right
            if _is_one(right):
                return left
        elif expr.op == "/":
            if _is_zero(left):
                return Num(expr.span, 0.0)
            if _is_one(right):
                return left
        return BinOp(expr.span, expr.op, left, right)

    if isinstance(expr, Pow):
        base = simplify(expr.base)
        if expr.exponent == 0:
            return Num(expr.span, 1.0)
        if expr.exponent == 1:
            return base
        if isinstance(base, Num):
            return Num(expr.span, base.value**expr.exponent)
        return Pow(expr.span, base, expr.exponent)

    if isinstance(expr, Call):
        arg = simplify(expr.arg)
        if isinstance(arg, Num):
            try:
                return Num(expr.span, apply_function(expr.func, arg.value))
            except ValueError:
                pass
            except (OverflowError, ZeroDivisionError):
                pass
        return Call(expr.span, expr.func, arg)

    return expr


def derivative(expr: Expr, var: str) -> Expr:
    """Partial derivative of *expr* with respect to the parameter *var*,
    simplified."""
    return simplify(_derivative(expr, var))


def _derivative(expr: Expr, var: str) -> Expr:
    if isinstance(expr, Ident):
        return num(1.0) if expr.name == var else num(0.0)
    if isinstance(expr, (Num, ConstantRef)):
        return num(0.0)
    if isinstance(expr, Neg):
        return neg(_derivative(expr.operand, var))
    if isinstance(expr, BinOp):
        dl = _derivative(expr.left, var)
        dr = _derivative(expr.right, var)
        if expr.op == "+":
            return add(dl, dr)
        if expr.op == "-":
            return sub(dl, dr)
        if expr.op == "*":
            return add(mul(dl, expr.right), mul(expr.left, dr))
        # quotient rule: (l' r - l r') / r**2
        return div(sub(mul(dl, expr.right), mul(expr.left, dr)), powi(expr.right, 2))
    if isinstance(expr, Pow):
        db = _derivative(expr.base, var)
        factor = mul(num(float(expr.exponent)), powi(expr.base, expr.exponent - 1))
        return mul(factor, db)
    if isinstance(expr, Call):
        da = _derivative(expr.arg, var)
        arg = expr.arg
        if expr.func == "sin":
            return mul(call("cos", arg), da)
        if expr.func == "cos":
            return neg(mul(call("sin", arg), da))
        if expr.func == "tan":
            return div(da, powi(call("cos", arg), 2))
        if expr.func == "exp":
            return mul(call("exp", arg), da)
        if expr.func == "ln":
            return div(da, arg)
        if expr.func == "sqrt":
            return div(da, mul(num(2.0), call("sqrt", arg)))
        raise ValueError(f"unknown function '{expr.func}'")
    raise TypeError(f"unknown expression node {type(expr).__name__}")
