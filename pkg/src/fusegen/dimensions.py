"""Dimensional analysis over the seven SI base dimensions.

Exponents are exact rationals: sqrt halves them, so integer exponents
would not survive expressions like sqrt(L / g).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .ast import (
    BinOp,
    Call,
    ConstantRef,
    Constraint,
    Description,
    Expr,
    Ident,
    Neg,
    Num,
    Pow,
)
from .diagnostics import Diagnostic, error

BASE_DIMENSIONS = (
    "length",
    "mass",
    "time",
    "current",
    "temperature",
    "amount",
    "luminosity",
)

_ZERO = (Fraction(0),) * len(BASE_DIMENSIONS)


@dataclass(frozen=True)
class Dimension:
    """Exponent vector over the SI base dimensions."""

    exponents: tuple[Fraction, ...] = _ZERO

    def __mul__(self, other: "Dimension") -> "Dimension":
        return Dimension(tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def __truediv__(self, other: "Dimension") -> "Dimension":
        return Dimension(tuple(a - b for a, b in zip(self.exponents, other.exponents)))

    def power(self, exponent: int | Fraction) -> "Dimension":
        return Dimension(tuple(a * exponent for a in self.exponents))

    def root(self, degree: int) -> "Dimension":
        return Dimension(tuple(a / degree for a in self.exponents))

    @property
    def is_dimensionless(self) -> bool:
        return all(a == 0 for a in self.exponents)

    def render(self) -> str:
        if self.is_dimensionless:
            return "dimensionless"
        parts = []
        for name, exp in zip(BASE_DIMENSIONS, self.exponents):
            if exp == 0:
                continue
            if exp == 1:
                parts.append(name)
            elif exp.denominator == 1:
                parts.append(f"{name}**{exp.numerator}")
            else:
                parts.append(f"{name}**({exp.numerator}/{exp.denominator})")
        return " * ".join(parts)


DIMENSIONLESS = Dimension()


def base_dimension(name: str) -> Dimension:
    index = BASE_DIMENSIONS.index(name)
    exps = [Fraction(0)] * len(BASE_DIMENSIONS)
    exps[index] = Fraction(1)
    return Dimension(tuple(exps))


def evaluate_unit(
    expr: Expr,
    signals: "SignalLookup",
    filename: str,
    diags: list[Diagnostic],
) -> Dimension | None:
    """Dimension of a unit expression (the tail of a constant or signal
    declaration).  Returns None after recording a diagnostic."""
    if isinstance(expr, Ident):
        dim = signals.lookup(expr.name)
        if dim is None:
            diags.append(error(f"unknown signal '{expr.name}'", filename, expr.span))
        return dim
    if isinstance(expr, Num):
        return DIMENSIONLESS
    if isinstance(expr, BinOp) and expr.op in ("*", "/"):
        left = evaluate_unit(expr.left, signals, filename, diags)
        right = evaluate_unit(expr.right, signals, filename, diags)
        if left is None or right is None:
            return None
        return left * right if expr.op == "*" else left / right
    if isinstance(expr, Pow):
        base = evaluate_unit(expr.base, signals, filename, diags)
        return None if base is None else base.power(expr.exponent)
    diags.append(error("invalid unit expression", filename, expr.span))
    return None


class SignalLookup:
    """Name -> dimension mapping with the built-in table underneath."""

    def __init__(self, entries: dict[str, Dimension] | None = None):
        self.entries = dict(entries or {})

    def lookup(self, name: str) -> Dimension | None:
        return self.entries.get(name)

    def define(self, name: str, dim: Dimension) -> None:
        self.entries[name] = dim


def infer_dimension(
    expr: Expr,
    env: dict[str, Dimension | None],
    constants: dict[str, Dimension | None],
    filename: str,
    diags: list[Diagnostic],
) -> Dimension | None:
    """Dimension of a constraint expression, or None if a sub-expression
    already produced a diagnostic (so errors do not cascade)."""
    if isinstance(expr, Ident):
        if expr.name in env:
            return env[expr.name]
        if expr.name in constants:
            return constants[expr.name]
        diags.append(error(f"'{expr.name}' is not a parameter or constant", filename, expr.span))
        return None
    if isinstance(expr, ConstantRef):
        return constants.get(expr.name)
    if isinstance(expr, Num):
        return DIMENSIONLESS
    if isinstance(expr, Neg):
        return infer_dimension(expr.operand, env, constants, filename, diags)
    if isinstance(expr, BinOp):
        left = infer_dimension(expr.left, env, constants, filename, diags)
        right = infer_dimension(expr.right, env, constants, filename, diags)
        if left is None or right is None:
            return None
        if expr.op in ("+", "-"):
            if left != right:
                verb = "add" if expr.op == "+" else "subtract"
                diags.append(
                    error(
                        f"cannot {verb} {right.render()} to {left.render()}"
                        if expr.op == "+"
                        else f"cannot {verb} {right.render()} from {left.render()}",
                        filename,
                        expr.span,
                    )
                )
                return None
            return left
        return left * right if expr.op == "*" else left / right
    if isinstance(expr, Pow):
        base = infer_dimension(expr.base, env, constants, filename, diags)
        return None if base is None else base.power(expr.exponent)
    if isinstance(expr, Call):
        arg = infer_dimension(expr.arg, env, constants, filename, diags)
        if arg is None:
            return None
        if expr.func == "sqrt":
            return arg.root(2)
        if not arg.is_dimensionless:
            diags.append(
                error(
                    f"argument of {expr.func}() must be dimensionless, not {arg.render()}",
                    filename,
                    expr.arg.span,
                )
            )
            return None
        return DIMENSIONLESS
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def check_description(desc: Description, signals: SignalLookup) -> list[Diagnostic]:
    """Dimension-check every constraint; collects all diagnostics rather
    than stopping at the first.  Empty result means the description is
    dimensionally consistent."""
    diags: list[Diagnostic] = []
    filename = desc.source_name

    constant_dims: dict[str, Dimension | None] = {}
    for const in desc.constants:
        if const.unit is None:
            constant_dims[const.name] = DIMENSIONLESS
        else:
            constant_dims[const.name] = evaluate_unit(const.unit, signals, filename, diags)

    for inv in desc.invariants:
        env: dict[str, Dimension | None] = {}
        for param in inv.parameters:
            dim = signals.lookup(param.signal)
            if dim is None:
                diags.append(
                    error(f"unknown signal '{param.signal}'", filename, param.span)
                )
            env[param.name] = dim
        for cons in inv.constraints:
            _check_constraint(cons, env, constant_dims, filename, diags)

    return diags


def _check_constraint(
    cons: Constraint,
    env: dict[str, Dimension | None],
    constants: dict[str, Dimension | None],
    filename: str,
    diags: list[Diagnostic],
) -> None:
    lhs_dim = env.get(cons.lhs)
    rhs_dim = infer_dimension(cons.rhs, env, constants, filename, diags)
    if lhs_dim is None or rhs_dim is None:
        return
    if lhs_dim != rhs_dim:
        diags.append(
            error(
                f"constraint on '{cons.lhs}' is dimensionally inconsistent: "
                f"left side is {lhs_dim.render()}, right side is {rhs_dim.render()}",
                filename,
                cons.span,
            )
        )
