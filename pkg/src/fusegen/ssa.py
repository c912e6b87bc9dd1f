"""Static single assignment form for constraint expressions.

Every interior node of an expression tree becomes exactly one
instruction; leaves (parameters and literals) appear inline as operands.
Instructions are emitted in post order, so operands always refer to
earlier temporaries.  Identical subtrees are *not* merged: the program
mirrors the written expression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .ast import BinOp, Call, ConstantRef, Expr, Ident, Neg, Num, Pow
from .printer import format_number

# Instruction opcodes.  Unary: neg, sin, cos, tan, exp, ln, sqrt, load.
# Binary: add, sub, mul, div, pow (exponent operand is an integer
# immediate).  Nullary-ish: const (single immediate operand).
UNARY_OPS = ("neg", "sin", "cos", "tan", "exp", "ln", "sqrt")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")


@dataclass(frozen=True)
class Temp:
    """Reference to the result of an earlier instruction."""

    index: int

    def __str__(self) -> str:
        return f"r{self.index}"


@dataclass(frozen=True)
class Arg:
    """Reference to a free input (an invariant parameter)."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Imm:
    """Inline numeric constant."""

    value: float

    def __str__(self) -> str:
        return format_number(self.value)


Operand = Temp | Arg | Imm


@dataclass(frozen=True)
class Instruction:
    target: int
    op: str
    operands: tuple[Operand, ...]

    def __str__(self) -> str:
        args = " ".join(str(op) for op in self.operands)
        return f"r{self.target} = {self.op} {args}"


@dataclass
class SSAProgram:
    instructions: list[Instruction]
    result: int

    def __str__(self) -> str:
        return "\n".join(str(instr) for instr in self.instructions)

    def free_args(self) -> list[str]:
        """Free input names in first-appearance order."""
        seen: list[str] = []
        for instr in self.instructions:
            for op in instr.operands:
                if isinstance(op, Arg) and op.name not in seen:
                    seen.append(op.name)
        return seen

    def validate(self) -> None:
        """Check the SSA well-formedness invariants."""
        defined: set[int] = set()
        for position, instr in enumerate(self.instructions):
            if instr.target != position + 1:
                raise ValueError(
                    f"instruction {position} defines r{instr.target}, expected r{position + 1}"
                )
            for op in instr.operands:
                if isinstance(op, Temp) and op.index not in defined:
                    raise ValueError(f"r{instr.target} uses undefined temporary r{op.index}")
            defined.add(instr.target)
        if self.result not in defined:
            raise ValueError(f"result r{self.result} is never defined")


def to_ssa(expr: Expr) -> SSAProgram:
    """Flatten an expression tree into SSA instructions.

    Constant references must be resolved to literals first (see
    symbolic.resolve_constants); parameters stay symbolic as Arg operands.
    """
    instructions: list[Instruction] = []

    def emit(op: str, *operands: Operand) -> Temp:
        target = len(instructions) + 1
        instructions.append(Instruction(target, op, tuple(operands)))
        return Temp(target)

    def walk(e: Expr) -> Operand:
        if isinstance(e, Ident):
            return Arg(e.name)
        if isinstance(e, Num):
            return Imm(e.value)
        if isinstance(e, ConstantRef):
            raise TypeError(
                f"constant reference '{e.name}' must be resolved before SSA conversion"
            )
        if isinstance(e, Neg):
            return emit("neg", walk(e.operand))
        if isinstance(e, BinOp):
            op = {"+": "add", "-": "sub", "*": "mul", "/": "div"}[e.op]
            left = walk(e.left)
            right = walk(e.right)
            return emit(op, left, right)
        if isinstance(e, Pow):
            return emit("pow", walk(e.base), Imm(float(e.exponent)))
        if isinstance(e, Call):
            return emit(e.func, walk(e.arg))
        raise TypeError(f"unknown expression node {type(e).__name__}")

    root = walk(expr)
    if isinstance(root, Temp):
        result = root.index
    elif isinstance(root, Arg):
        result = emit("load", root).index
    else:
        result = emit("const", root).index
    return SSAProgram(instructions, result)


def apply_op(op: str, values: list[float]) -> float:
    if op in ("load", "const"):
        return values[0]
    if op == "neg":
        return -values[0]
    if op == "add":
        return values[0] + values[1]
    if op == "sub":
        return values[0] - values[1]
    if op == "mul":
        return values[0] * values[1]
    if op == "div":
        return values[0] / values[1]
    if op == "pow":
        return values[0] ** int(values[1])
    if op == "sin":
        return math.sin(values[0])
    if op == "cos":
        return math.cos(values[0])
    if op == "tan":
        return math.tan(values[0])
    if op == "exp":
        return math.exp(values[0])
    if op == "ln":
        return math.log(values[0])
    if op == "sqrt":
        return math.sqrt(values[0])
    raise ValueError(f"unknown opcode '{op}'")


def run_instructions(
    instructions: list[Instruction],
    env: dict[str, float],
    slots: dict[int, float] | None = None,
) -> dict[int, float]:
    """Execute instructions, extending and returning the temporary-value
    map.  *slots* lets adjoint code reuse the primal temporaries."""
    values: dict[int, float] = dict(slots or {})

    def read(op: Operand) -> float:
        if isinstance(op, Temp):
            return values[op.index]
        if isinstance(op, Arg):
            try:
                return env[op.name]
            except KeyError:
                raise KeyError(f"'{op.name}' is not bound in the evaluation environment") from None
        return op.value

    for instr in instructions:
        values[instr.target] = apply_op(instr.op, [read(op) for op in instr.operands])
    return values


def evaluate(program: SSAProgram, env: dict[str, float]) -> float:
    return run_instructions(program.instructions, env)[program.result]
