"""Syntax tree for system description files.

Expressions are immutable; every node carries the source span it was
parsed from so later stages can point diagnostics at the right place.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import Span

# Functions the expression language understands.  All but sqrt demand a
# dimensionless argument; sqrt halves the argument's dimension instead.
KNOWN_FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt")


@dataclass(frozen=True)
class Expr:
    span: Span


@dataclass(frozen=True)
class Ident(Expr):
    """Reference to an invariant parameter."""

    name: str


@dataclass(frozen=True)
class ConstantRef(Expr):
    """Reference to a file-level constant, resolved from an Ident."""

    name: str


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    """op is one of "+", "-", "*", "/"."""

    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    """Integer power.  The exponent is restricted to an integer literal so
    the dimension of the result is always expressible."""

    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


@dataclass
class Uncertainty:
    """Gaussian annotation on a parameter: mean and variance."""

    mean: float
    variance: float
    span: Span


@dataclass
class Parameter:
    name: str
    signal: str
    uncertainty: Uncertainty | None
    span: Span


@dataclass
class Constraint:
    """lhs ~ rhs, read as: the next value of lhs is modeled by rhs."""

    lhs: str
    lhs_span: Span
    rhs: Expr
    span: Span


@dataclass
class Invariant:
    name: str
    parameters: list[Parameter]
    constraints: list[Constraint]
    span: Span

    def parameter(self, name: str) -> Parameter | None:
        for p in self.parameters:
            if p.name == name:
                return p
        return None


@dataclass
class Constant:
    name: str
    value: float
    unit: Expr | None  # None means dimensionless
    span: Span


@dataclass
class SignalDecl:
    """Declares a named signal in terms of existing ones, e.g.
    ``speed : signal = distance / time;``."""

    name: str
    definition: Expr
    span: Span


@dataclass
class Description:
    source_name: str
    includes: list[str] = field(default_factory=list)
    constants: list[Constant] = field(default_factory=list)
    signals: list[SignalDecl] = field(default_factory=list)
    invariants: list[Invariant] = field(default_factory=list)

    def constant(self, name: str) -> Constant | None:
        for c in self.constants:
            if c.name == name:
                return c
        return None

    def invariant(self, name: str) -> Invariant | None:
        for inv in self.invariants:
            if inv.name == name:
                return inv
        return None

    def constant_values(self) -> dict[str, float]:
        return {c.name: c.value for c in self.constants}


def exprs_equal(a: Expr, b: Expr) -> bool:
    """Structural equality ignoring spans."""
    if type(a) is not type(b):
        return False
    if isinstance(a, (Ident, ConstantRef)):
        return a.name == b.name
    if isinstance(a, Num):
        return a.value == b.value
    if isinstance(a, Neg):
        return exprs_equal(a.operand, b.operand)
    if isinstance(a, BinOp):
        return a.op == b.op and exprs_equal(a.left, b.left) and exprs_equal(a.right, b.right)
    if isinstance(a, Pow):
        return a.exponent == b.exponent and exprs_equal(a.base, b.base)
    if isinstance(a, Call):
        return a.func == b.func and exprs_equal(a.arg, b.arg)
    raise TypeError(f"unknown expression node {type(a).__name__}")


def free_idents(expr: Expr) -> list[str]:
    """Parameter names referenced by *expr*, in first-appearance order.

    Constant references are not included; they are bound at compile time.
    """
    seen: list[str] = []

    def walk(e: Expr) -> None:
        if isinstance(e, Ident):
            if e.name not in seen:
                seen.append(e.name)
        elif isinstance(e, Neg):
            walk(e.operand)
        elif isinstance(e, BinOp):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, Pow):
            walk(e.base)
        elif isinstance(e, Call):
            walk(e.arg)

    walk(expr)
    return seen


def contains_ident(expr: Expr, names: set[str]) -> bool:
    if isinstance(expr, Ident):
        return expr.name in names
    if isinstance(expr, Neg):
        return contains_ident(expr.operand, names)
    if isinstance(expr, BinOp):
        return contains_ident(expr.left, names) or contains_ident(expr.right, names)
    if isinstance(expr, Pow):
        return contains_ident(expr.base, names)
    if isinstance(expr, Call):
        return contains_ident(expr.arg, names)
    return False
