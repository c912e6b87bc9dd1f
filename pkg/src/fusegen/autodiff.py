"""Derivatives of SSA programs.

Reverse mode appends an adjoint sweep to the primal program: one pass
computes the value and the gradient with respect to every input.
Forward mode interleaves tangent instructions instead and differentiates
with respect to a single seed input; it exists as an independent check
on reverse mode and is never used for code generation (reverse mode
needs one sweep per Jacobian *row*, forward mode one per *column*, and
our models have at least as many columns as rows).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .model import StateSpaceModel
from .ssa import (
    Arg,
    Imm,
    Instruction,
    Operand,
    SSAProgram,
    Temp,
    run_instructions,
    to_ssa,
)
from .symbolic import resolve_constants

_SlotKey = tuple[str, int | str]


@dataclass
class AdjointProgram:
    """A primal program plus its reverse sweep.

    Adjoint temporaries continue the primal numbering.  ``gradients``
    maps each free input of the primal to the temporary holding its
    total derivative.
    """

    primal: SSAProgram
    adjoint: list[Instruction]
    gradients: dict[str, Temp]

    def __str__(self) -> str:
        lines = [str(i) for i in self.primal.instructions]
        lines += [str(i) for i in self.adjoint]
        lines += [f"grad {name} = {temp}" for name, temp in self.gradients.items()]
        return "\n".join(lines)

    def evaluate(self, env: dict[str, float]) -> tuple[float, dict[str, float]]:
        slots = run_instructions(self.primal.instructions, env)
        slots = run_instructions(self.adjoint, env, slots)
        grads = {name: slots[temp.index] for name, temp in self.gradients.items()}
        return slots[self.primal.result], grads


def reverse_mode(primal: SSAProgram) -> AdjointProgram:
    """Append the reverse (adjoint) sweep to *primal*.

    The result's adjoint is seeded with 1; walking the instructions in
    reverse, each one scatters ``local-partial * adjoint`` contributions
    to its operands.  An operand used k times receives k contributions,
    summed in the order the walk finds them.
    """
    adjoint: list[Instruction] = []
    next_index = len(primal.instructions) + 1

    def emit(op: str, *operands: Operand) -> Temp:
        nonlocal next_index
        instr = Instruction(next_index, op, tuple(operands))
        adjoint.append(instr)
        next_index += 1
        return Temp(instr.target)

    slots: dict[_SlotKey, Operand] = {}

    def accumulate(key: _SlotKey, contribution: Operand) -> None:
        if key in slots:
            slots[key] = emit("add", slots[key], contribution)
        else:
            slots[key] = contribution

    def scatter(operand: Operand, make: Callable[[], Operand]) -> None:
        if isinstance(operand, Imm):
            return
        if isinstance(operand, Temp):
            accumulate(("t", operand.index), make())
        else:
            accumulate(("a", operand.name), make())

    seed = emit("const", Imm(1.0))
    slots[("t", primal.result)] = seed

    for instr in reversed(primal.instructions):
        key: _SlotKey = ("t", instr.target)
        if key not in slots:
            continue
        a = slots[key]
        op, operands = instr.op, instr.operands

        if op in ("load", "const"):
            scatter(operands[0], lambda: a)
        elif op == "add":
            scatter(operands[0], lambda: a)
            scatter(operands[1], lambda: a)
        elif op == "sub":
            scatter(operands[0], lambda: a)
            scatter(operands[1], lambda: emit("neg", a))
        elif op == "neg":
            scatter(operands[0], lambda: emit("neg", a))
        elif op == "mul":
            left, right = operands
            scatter(left, lambda: emit("mul", right, a))
            scatter(right, lambda: emit("mul", left, a))
        elif op == "div":
            u, w = operands

            def du() -> Operand:
                return emit("div", a, w)

            def dw() -> Operand:
                squared = emit("mul", w, w)
                ratio = emit("div", u, squared)
                scaled = emit("mul", ratio, a)
                return emit("neg", scaled)

            scatter(u, du)
            scatter(w, dw)
        elif op == "pow":
            base, exponent = operands
            assert isinstance(exponent, Imm)
            k = int(exponent.value)
            if k == 0:
                pass
            elif k == 1:
                scatter(base, lambda: a)
            else:

                def dpow() -> Operand:
                    lowered = base if k == 2 else emit("pow", base, Imm(float(k - 1)))
                    local = emit("mul", Imm(float(k)), lowered)
                    return emit("mul", local, a)

                scatter(base, dpow)
        elif op == "sin":
            (u,) = operands

            def dsin() -> Operand:
                local = emit("cos", u)
                return emit("mul", local, a)

            scatter(u, dsin)
        elif op == "cos":
            (u,) = operands

            def dcos() -> Operand:
                local = emit("sin", u)
                product = emit("mul", local, a)
                return emit("neg", product)

            scatter(u, dcos)
        elif op == "tan":
            (u,) = operands

            def dtan() -> Operand:
                local = emit("cos", u)
                squared = emit("mul", local, local)
                return emit("div", a, squared)

            scatter(u, dtan)
        elif op == "exp":
            (u,) = operands
            value = Temp(instr.target)
            scatter(u, lambda: emit("mul", value, a))
        elif op == "ln":
            (u,) = operands
            scatter(u, lambda: emit("div", a, u))
        elif op == "sqrt":
            (u,) = operands
            value = Temp(instr.target)

            def dsqrt() -> Operand:
                doubled = emit("mul", Imm(2.0), value)
                return emit("div", a, doubled)

            scatter(u, dsqrt)
        else:
            raise ValueError(f"unknown opcode '{op}'")

    gradients: dict[str, Temp] = {}
    for name in primal.free_args():
        slot = slots.get(("a", name))
        if slot is None:
            slot = emit("const", Imm(0.0))
        elif not isinstance(slot, Temp):
            slot = emit("const", slot)
        gradients[name] = slot
    return AdjointProgram(primal, adjoint, gradients)


def prune_adjoint(program: AdjointProgram, keep: set[str]) -> AdjointProgram:
    """Drop adjoint instructions not needed for the gradients of *keep*.

    The primal is left intact (all of it feeds the result); temporaries
    keep their numbering so instruction identity is stable.
    """
    kept_gradients = {n: t for n, t in program.gradients.items() if n in keep}
    live: set[int] = {t.index for t in kept_gradients.values()}
    kept: list[Instruction] = []
    for instr in reversed(program.adjoint):
        if instr.target not in live:
            continue
        kept.append(instr)
        for op in instr.operands:
            if isinstance(op, Temp):
                live.add(op.index)
    kept.reverse()
    return AdjointProgram(program.primal, kept, kept_gradients)


@dataclass
class ForwardProgram:
    """Primal instructions interleaved with tangent instructions for a
    single seed input.  ``tangent`` is where the directional derivative
    of the result lives (an immediate when it is trivially constant)."""

    instructions: list[Instruction]
    result: int
    tangent: Operand
    seed: str

    def __str__(self) -> str:
        lines = [str(i) for i in self.instructions]
        lines.append(f"tangent d/d{self.seed} = {self.tangent}")
        return "\n".join(lines)

    def evaluate(self, env: dict[str, float]) -> tuple[float, float]:
        slots = run_instructions(self.instructions, env)
        value = slots[self.result]
        if isinstance(self.tangent, Temp):
            return value, slots[self.tangent.index]
        if isinstance(self.tangent, Arg):
            return value, env[self.tangent.name]
        return value, self.tangent.value


def forward_mode(primal: SSAProgram, seed: str) -> ForwardProgram:
    """Interleave tangent instructions differentiating by *seed*.

    Tangents that are identically zero are folded away rather than
    emitted, so a constant-only program ends with tangent 0.
    """
    if seed not in primal.free_args():
        raise ValueError(f"unknown seed '{seed}'; inputs are {primal.free_args()}")

    instructions: list[Instruction] = []
    remap: dict[int, Temp] = {}
    tangents: dict[int, Operand] = {}

    def emit(op: str, *operands: Operand) -> Temp:
        instr = Instruction(len(instructions) + 1, op, tuple(operands))
        instructions.append(instr)
        return Temp(instr.target)

    def value_of(operand: Operand) -> Operand:
        if isinstance(operand, Temp):
            return remap[operand.index]
        return operand

    def tangent_of(operand: Operand) -> Operand:
        if isinstance(operand, Temp):
            return tangents[operand.index]
        if isinstance(operand, Arg):
            return Imm(1.0) if operand.name == seed else Imm(0.0)
        return Imm(0.0)

    def is_zero(operand: Operand) -> bool:
        return isinstance(operand, Imm) and operand.value == 0.0

    for instr in primal.instructions:
        operands = instr.operands
        new_operands = tuple(value_of(op) for op in operands)
        new_target = emit(instr.op, *new_operands)
        remap[instr.target] = new_target

        op = instr.op
        if op in ("load", "const"):
            tangent = tangent_of(operands[0])
        elif op == "neg":
            du = tangent_of(operands[0])
            tangent = Imm(0.0) if is_zero(du) else emit("neg", du)
        elif op == "add":
            da, db = tangent_of(operands[0]), tangent_of(operands[1])
            if is_zero(da):
                tangent = db
            elif is_zero(db):
                tangent = da
            else:
                tangent = emit("add", da, db)
        elif op == "sub":
            da, db = tangent_of(operands[0]), tangent_of(operands[1])
            if is_zero(db):
                tangent = da
            elif is_zero(da):
                tangent = emit("neg", db)
            else:
                tangent = emit("sub", da, db)
        elif op == "mul":
            a, b = new_operands
            da, db = tangent_of(operands[0]), tangent_of(operands[1])
            terms: list[Operand] = []
            if not is_zero(da):
                terms.append(emit("mul", b, da))
            if not is_zero(db):
                terms.append(emit("mul", a, db))
            if not terms:
                tangent = Imm(0.0)
            elif len(terms) == 1:
                tangent = terms[0]
            else:
                tangent = emit("add", terms[0], terms[1])
        elif op == "div":
            u, w = new_operands
            du, dw = tangent_of(operands[0]), tangent_of(operands[1])
            first = None if is_zero(du) else emit("div", du, w)
            second = None
            if not is_zero(dw):
                squared = emit("mul", w, w)
                scaled = emit("mul", u, dw)
                second = emit("div", scaled, squared)
            if first is None and second is None:
                tangent = Imm(0.0)
            elif second is None:
                tangent = first  # type: ignore[assignment]
            elif first is None:
                tangent = emit("neg", second)
            else:
                tangent = emit("sub", first, second)
        elif op == "pow":
            base, exponent = new_operands
            assert isinstance(exponent, Imm)
            k = int(exponent.value)
            db = tangent_of(operands[0])
            if is_zero(db) or k == 0:
                tangent = Imm(0.0)
            elif k == 1:
                tangent = db
            else:
                lowered = base if k == 2 else emit("pow", base, Imm(float(k - 1)))
                local = emit("mul", Imm(float(k)), lowered)
                tangent = emit("mul", local, db)
        else:
            (u,) = new_operands
            du = tangent_of(instr.operands[0])
            if is_zero(du):
                tangent = Imm(0.0)
            elif op == "sin":
                local = emit("cos", u)
                tangent = emit("mul", local, du)
            elif op == "cos":
                local = emit("sin", u)
                product = emit("mul", local, du)
                tangent = emit("neg", product)
            elif op == "tan":
                local = emit("cos", u)
                squared = emit("mul", local, local)
                tangent = emit("div", du, squared)
            elif op == "exp":
                tangent = emit("mul", new_target, du)
            elif op == "ln":
                tangent = emit("div", du, u)
            elif op == "sqrt":
                doubled = emit("mul", Imm(2.0), new_target)
                tangent = emit("div", du, doubled)
            else:
                raise ValueError(f"unknown opcode '{op}'")
        tangents[instr.target] = tangent

    return ForwardProgram(
        instructions, remap[primal.result].index, tangents[primal.result], seed
    )


@dataclass
class WorkEstimate:
    """Differentiation work per filter cycle, in model-function units.

    Standard differentiation evaluates one closed-form expression per
    Jacobian entry; reverse mode evaluates one fused value-and-gradient
    sweep per Jacobian row.
    """

    mode: str
    unit_name: str
    process_units: int
    measurement_units: int
    scalar_instructions: int

    @property
    def total_units(self) -> int:
        return self.process_units + self.measurement_units

    def describe(self) -> str:
        return (
            f"{self.total_units} {self.unit_name} "
            f"({self.process_units} transition + {self.measurement_units} measurement), "
            f"{self.scalar_instructions} scalar instructions"
        )


def count_evaluations(model: StateSpaceModel, mode: str) -> WorkEstimate:
    """Count the model-function work one filter cycle spends obtaining
    its Jacobians under the given differentiation mode.

    Linear models have closed-form matrices and no Jacobian work, which
    is an error here.  Multi-mode models are counted on their first mode
    (one mode runs per cycle).
    """
    if model.linear:
        raise ValueError("linear models have closed-form matrices; there is no Jacobian work to count")
    if mode not in ("standard", "autodiff"):
        raise ValueError(f"unknown differentiation mode '{mode}'")

    constants = model.constants
    state = model.variables.state
    transition = model.modes[0].transition
    n, z = len(state), len(model.measurement)

    if mode == "standard":
        entries = [cell for row in model.modes[0].jacobian for cell in row]
        entries += [cell for row in model.measurement_jacobian for cell in row]
        scalar = sum(
            len(to_ssa(resolve_constants(e, constants)).instructions) for e in entries
        )
        return WorkEstimate("standard", "entry evaluations", n * n, z * n, scalar)

    keep = set(state)
    scalar = 0
    for rhs in [*transition, *model.measurement]:
        adjoint = prune_adjoint(reverse_mode(to_ssa(resolve_constants(rhs, constants))), keep)
        scalar += len(adjoint.primal.instructions) + len(adjoint.adjoint)
    return WorkEstimate("autodiff", "row sweeps", n, z, scalar)
