"""Pretty-printer for descriptions and expressions.

Printing then re-parsing yields a structurally identical tree (spans
aside); parenthesization is driven by the same precedence ladder the
parser uses.
"""

from __future__ import annotations

from .ast import (
    BinOp,
    Call,
    Constant,
    ConstantRef,
    Description,
    Expr,
    Ident,
    Invariant,
    Neg,
    Num,
    Parameter,
    Pow,
    SignalDecl,
)

_ADD, _MUL, _UNARY, _POWER, _ATOM = 10, 20, 30, 40, 50


def format_number(value: float) -> str:
    """Shortest round-trip decimal form; also a valid C double literal."""
    return repr(float(value))


def _precedence(expr: Expr) -> int:
    if isinstance(expr, BinOp):
        return _ADD if expr.op in "+-" else _MUL
    if isinstance(expr, Neg):
        return _UNARY
    if isinstance(expr, Num) and (expr.value < 0 or str(expr.value)[0] == "-"):
        return _UNARY  # prints with a leading minus
    if isinstance(expr, Pow):
        return _POWER
    return _ATOM


def _child(expr: Expr, minimum: int) -> str:
    text = format_expr(expr)
    if _precedence(expr) < minimum:
        return f"({text})"
    return text


def format_expr(expr: Expr) -> str:
    if isinstance(expr, (Ident, ConstantRef)):
        return expr.name
    if isinstance(expr, Num):
        return format_number(expr.value)
    if isinstance(expr, Neg):
        return f"-{_child(expr.operand, _UNARY)}"
    if isinstance(expr, BinOp):
        if expr.op in "+-":
            mine, right_min = _ADD, _ADD + 1
        else:
            mine, right_min = _MUL, _MUL + 1
        return f"{_child(expr.left, mine)} {expr.op} {_child(expr.right, right_min)}"
    if isinstance(expr, Pow):
        return f"{_child(expr.base, _ATOM)} ** {expr.exponent}"
    if isinstance(expr, Call):
        return f"{expr.func}({format_expr(expr.arg)})"
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def _format_parameter(param: Parameter) -> str:
    text = f"{param.name} : {param.signal}"
    if param.uncertainty is not None:
        unc = param.uncertainty
        text += f" = Gaussian({format_number(unc.mean)}, {format_number(unc.variance)})"
    return text


def _format_invariant(inv: Invariant) -> str:
    params = ", ".join(_format_parameter(p) for p in inv.parameters)
    lines = [f"{inv.name} : invariant ({params}) = {{"]
    for index, cons in enumerate(inv.constraints):
        comma = "," if index + 1 < len(inv.constraints) else ""
        lines.append(f"    {cons.lhs} ~ {format_expr(cons.rhs)}{comma}")
    lines.append("}")
    return "\n".join(lines)


def _format_constant(const: Constant) -> str:
    if const.unit is None:
        return f"{const.name} : constant = {format_number(const.value)};"
    return f"{const.name} : constant = {format_number(const.value)} {format_expr(const.unit)};"


def _format_signal(sig: SignalDecl) -> str:
    return f"{sig.name} : signal = {format_expr(sig.definition)};"


def format_description(desc: Description) -> str:
    chunks: list[str] = []
    for name in desc.includes:
        chunks.append(f'include "{name}"')
    for sig in desc.signals:
        chunks.append(_format_signal(sig))
    for const in desc.constants:
        chunks.append(_format_constant(const))
    for inv in desc.invariants:
        chunks.append(_format_invariant(inv))
    return "\n\n".join(chunks) + "\n"
