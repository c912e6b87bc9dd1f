"""C source generation for state estimators.

Given a built model, emits a header/implementation pair containing a
caller-owned filter context and exactly three entry points
(<prefix>filterInit / <prefix>filterPredict / <prefix>filterUpdate).
The emitted code is C99, allocates nothing, and depends only on the
math library and the small matrix runtime header.  Output is a pure
function of the model and options: same input, same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ast import BinOp, Call, ConstantRef, Expr, Ident, Neg, Num, Pow, free_idents
from .autodiff import AdjointProgram, prune_adjoint, reverse_mode
from .model import StateSpaceModel
from .printer import format_number
from .ssa import Arg, Imm, Instruction, Operand, Temp, to_ssa
from .symbolic import resolve_constants

_C_KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while""".split()
)
_RESERVED = frozenset({"s", "z", "ctx", "mode", "grad", "i", "j", "snew"})

# Largest |exponent| expanded to a multiplication chain; beyond this the
# generated code calls pow().
_POW_CHAIN_LIMIT = 4


@dataclass
class GenOptions:
    filter_kind: str = "ekf"  # "lkf" | "ekf"
    diff_mode: str = "autodiff"  # "standard" | "autodiff"
    symbol_prefix: str = "kf_"
    output_basename: str = "filter"
    matrix_runtime_header: str = "kfrt.h"
    single_precision: bool = False
    # Noise enters the model additively.  The flag exists so callers are
    # explicit about the assumption; nothing else is implemented.
    additive_noise: bool = True


@dataclass
class GeneratedSource:
    header_filename: str
    impl_filename: str
    header: str
    implementation: str


def _valid_c_ident(name: str) -> bool:
    return (
        bool(name)
        and (name[0].isalpha() or name[0] == "_")
        and all(c.isalnum() or c == "_" for c in name)
        and name not in _C_KEYWORDS
    )


class _CWriter:
    def __init__(self) -> None:
        self.lines: list[str] = []
        self.depth = 0

    def line(self, text: str = "") -> None:
        if text:
            self.lines.append("    " * self.depth + text)
        else:
            self.lines.append("")

    def open(self, text: str) -> None:
        self.line(text)
        self.depth += 1

    def fn(self, signature: str) -> None:
        """A function definition: brace on its own line."""
        self.line(signature)
        self.line("{")
        self.depth += 1

    def close(self, text: str = "}") -> None:
        self.depth -= 1
        self.line(text)

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


class _Generator:
    def __init__(self, model: StateSpaceModel, opts: GenOptions):
        self.model = model
        self.opts = opts
        self.n = model.state_dim
        self.z = model.measurement_dim
        self.prefix = opts.symbol_prefix
        self.macro = opts.symbol_prefix.rstrip("_").upper()
        self.real = f"{self.prefix}real"
        self.ctx_type = f"{self.prefix}filter_t"
        self.state = model.variables.state
        self.extras = model.variables.extras
        self.extra_cnames = {name: self._sanitize(name) for name in self.extras}
        self.multi_mode = len(model.modes) > 1

    @staticmethod
    def _sanitize(name: str) -> str:
        if name in _C_KEYWORDS or name in _RESERVED or not _valid_c_ident(name):
            return name + "_e"
        return name

    # -- literals and expressions ---------------------------------------

    def lit(self, value: float) -> str:
        text = format_number(value)
        return text + "f" if self.opts.single_precision else text

    def fn(self, name: str) -> str:
        builtin = {"ln": "log"}.get(name, name)
        return builtin + "f" if self.opts.single_precision else builtin

    def _pow_c(self, base: str, exponent: int) -> str:
        if exponent == 0:
            return self.lit(1.0)
        if exponent == 1:
            return base
        magnitude = abs(exponent)
        if magnitude <= _POW_CHAIN_LIMIT:
            chain = " * ".join([base] * magnitude)
            return f"({chain})" if exponent > 0 else f"{self.lit(1.0)} / ({chain})"
        return f"{self.fn('pow')}({base}, {self.lit(float(exponent))})"

    def render_expr(self, expr: Expr, env: dict[str, str]) -> str:
        """Precedence-aware C rendering of an expression tree whose
        constants have already been resolved to literals."""

        def prec(e: Expr) -> int:
            if isinstance(e, BinOp):
                return 10 if e.op in "+-" else 20
            if isinstance(e, Neg):
                return 30
            if isinstance(e, Num) and e.value < 0:
                return 30
            return 100  # atoms, calls, and pow (rendered self-contained)

        def child(e: Expr, minimum: int) -> str:
            text = walk(e)
            return f"({text})" if prec(e) < minimum else text

        def walk(e: Expr) -> str:
            if isinstance(e, Ident):
                try:
                    return env[e.name]
                except KeyError:
                    raise ValueError(f"no C binding for '{e.name}'") from None
            if isinstance(e, ConstantRef):
                raise ValueError(f"unresolved constant '{e.name}' reached code generation")
            if isinstance(e, Num):
                return self.lit(e.value)
            if isinstance(e, Neg):
                return f"-{child(e.operand, 30)}"
            if isinstance(e, BinOp):
                if e.op in "+-":
                    mine, right_min = 10, 11
                else:
                    mine, right_min = 20, 21
                return f"{child(e.left, mine)} {e.op} {child(e.right, right_min)}"
            if isinstance(e, Pow):
                return self._pow_c(child(e.base, 100), e.exponent)
            if isinstance(e, Call):
                return f"{self.fn(e.func)}({walk(e.arg)})"
            raise TypeError(f"unknown expression node {type(e).__name__}")

        return walk(expr)

    # -- SSA rendering ---------------------------------------------------

    def _operand_c(self, op: Operand, env: dict[str, str]) -> str:
        if isinstance(op, Temp):
            return f"r{op.index}"
        if isinstance(op, Arg):
            try:
                return env[op.name]
            except KeyError:
                raise ValueError(f"no C binding for '{op.name}'") from None
        text = self.lit(op.value)
        return f"({text})" if text.startswith("-") else text

    def _instruction_c(self, instr: Instruction, env: dict[str, str]) -> str:
        ops = [self._operand_c(o, env) for o in instr.operands]
        if instr.op in ("load", "const"):
            rhs = ops[0]
        elif instr.op == "neg":
            rhs = f"-{ops[0]}"
        elif instr.op == "add":
            rhs = f"{ops[0]} + {ops[1]}"
        elif instr.op == "sub":
            rhs = f"{ops[0]} - {ops[1]}"
        elif instr.op == "mul":
            rhs = f"{ops[0]} * {ops[1]}"
        elif instr.op == "div":
            rhs = f"{ops[0]} / {ops[1]}"
        elif instr.op == "pow":
            exponent_imm = instr.operands[1]
            assert isinstance(exponent_imm, Imm)
            rhs = self._pow_c(ops[0], int(exponent_imm.value))
        else:
            rhs = f"{self.fn(instr.op)}({ops[0]})"
        return f"{self.real} r{instr.target} = {rhs};"

    # -- environments ----------------------------------------------------

    def _model_fn_env(self) -> dict[str, str]:
        env = {name: f"s[{i}]" for i, name in enumerate(self.state)}
        for name in self.extras:
            env[name] = self.extra_cnames[name]
        return env

    def _extras_params(self) -> str:
        return "".join(f", {self.real} {self.extra_cnames[name]}" for name in self.extras)

    def _extras_args(self) -> str:
        return "".join(f", {self.extra_cnames[name]}" for name in self.extras)

    def _resolved(self, expr: Expr) -> Expr:
        return resolve_constants(expr, self.model.constants)

    # -- model functions ---------------------------------------------------

    def _fn_name(self, kind: str, mode: int, row: int, col: int | None = None) -> str:
        tag = f"m{mode}_" if self.multi_mode and kind == "f" else ""
        name = f"{self.prefix}{tag}{kind}{row}"
        if col is not None:
            name += f"_ds{col}"
        return name

    def _emit_value_fn(self, w: _CWriter, name: str, expr: Expr, doc: str) -> None:
        """Plain scalar model function returning one expression."""
        expr = self._resolved(expr)
        env = self._model_fn_env()
        used = set(free_idents(expr))
        w.line(f"/* {doc} */")
        w.fn(
            f"static {self.real} {name}(const {self.real} *s{self._extras_params()})"
        )
        self._emit_unused_casts(w, used)
        w.line(f"return {self.render_expr(expr, env)};")
        w.close()
        w.line()

    def _emit_sweep_fn(self, w: _CWriter, name: str, expr: Expr, doc: str) -> None:
        """Fused value-and-gradient model function (reverse sweep).

        Writes d(value)/d(state[j]) to grad[j] and returns the value; the
        gradient falls out of the same pass that computes the value.
        """
        program = self._adjoint(expr)
        env = self._model_fn_env()
        used = {a for a in program.primal.free_args()}
        for instr in program.adjoint:
            for op in instr.operands:
                if isinstance(op, Arg):
                    used.add(op.name)
        w.line(f"/* {doc}; grad receives the state gradient */")
        w.fn(
            f"static {self.real} {name}(const {self.real} *s{self._extras_params()}, "
            f"{self.real} *grad)"
        )
        self._emit_unused_casts(w, used)
        for instr in program.primal.instructions:
            w.line(self._instruction_c(instr, env))
        for instr in program.adjoint:
            w.line(self._instruction_c(instr, env))
        for j, state_name in enumerate(self.state):
            temp = program.gradients.get(state_name)
            value = f"r{temp.index}" if temp is not None else self.lit(0.0)
            w.line(f"grad[{j}] = {value};")
        w.line(f"return r{program.primal.result};")
        w.close()
        w.line()

    def _adjoint(self, expr: Expr) -> AdjointProgram:
        program = reverse_mode(to_ssa(self._resolved(expr)))
        return prune_adjoint(program, set(self.state))

    def _emit_unused_casts(self, w: _CWriter, used: set[str]) -> None:
        if not any(name in used for name in self.state):
            w.line("(void)s;")
        for name in self.extras:
            if name not in used:
                w.line(f"(void){self.extra_cnames[name]};")

    # -- noise matrices ----------------------------------------------------

    def _emit_const_matrix(self, w: _CWriter, name: str, matrix: np.ndarray) -> None:
        flat = ", ".join(self.lit(v) for v in np.asarray(matrix, dtype=float).ravel())
        w.line(f"static const {self.real} {name}[{matrix.size}] = {{ {flat} }};")

    # -- header --------------------------------------------------------------

    def header(self) -> str:
        w = _CWriter()
        model = self.model
        base = self.opts.output_basename
        kind = self.opts.filter_kind
        diff = self.opts.diff_mode
        describe = kind if kind == "lkf" else f"{kind}, {diff} derivatives"

        def var_list(names: list[str]) -> str:
            return ", ".join(f"{n} ({model.signals.get(n, '?')})" for n in names)

        w.line(f"/* {base}.h -- generated state estimator ({describe}).")
        w.line(" *")
        w.line(f" * state:        {var_list(self.state)}")
        w.line(f" * measurements: {var_list(model.variables.measurement)}")
        w.line(f" * extras:       {var_list(self.extras) or '(none)'}")
        if self.multi_mode:
            names = ", ".join(f"{i} = {m.name}" for i, m in enumerate(model.modes))
            w.line(f" * modes:        {names}")
        w.line(" *")
        w.line(" * Generated code: do not edit.")
        w.line(" */")
        guard = f"{self.macro}_FILTER_H"
        w.line(f"#ifndef {guard}")
        w.line(f"#define {guard}")
        w.line()
        if self.opts.single_precision:
            w.line("/* single-precision build: include this header before the runtime")
            w.line(" * header anywhere else, and compile the runtime with -DKFRT_REAL=float */")
            w.line("#ifndef KFRT_REAL")
            w.line("#define KFRT_REAL float")
            w.line("#endif")
        w.line(f'#include "{self.opts.matrix_runtime_header}"')
        w.line()
        w.line(f"#define {self.macro}_STATE_DIM {self.n}")
        w.line(f"#define {self.macro}_MEASUREMENT_DIM {self.z}")
        w.line(f"#define {self.macro}_EXTRA_COUNT {len(self.extras)}")
        w.line(f"#define {self.macro}_MODE_COUNT {len(model.modes)}")
        w.line()
        w.line("/* ctx->status bit flags */")
        w.line(f"#define {self.macro}_STATUS_OK 0")
        w.line(f"#define {self.macro}_STATUS_SINGULAR 1  /* update skipped: singular innovation */")
        w.line(f"#define {self.macro}_STATUS_BAD_MODE 2  /* predict skipped: unknown mode */")
        w.line()
        w.line(f"typedef kfrt_real {self.real};")
        w.line()
        n, z = self.n, self.z
        w.open("typedef struct {")
        w.line(f"{self.real} s[{n}];        /* state estimate */")
        w.line(f"{self.real} P[{n * n}];        /* estimate covariance, row-major */")
        w.line("int status;")
        w.line(f"{self.real} K[{n * z}];        /* last Kalman gain */")
        w.line(f"{self.real} innovation[{z}];")
        w.line("/* scratch (no dynamic allocation anywhere) */")
        w.line(f"{self.real} F[{n * n}];")
        w.line(f"{self.real} H[{z * n}];")
        w.line(f"{self.real} Sinv[{z * z}];")
        w.line(f"{self.real} zpred[{z}];")
        w.line(f"{self.real} tnn0[{n * n}];")
        w.line(f"{self.real} tnn1[{n * n}];")
        w.line(f"{self.real} tnn2[{n * n}];")
        w.line(f"{self.real} tnz0[{n * z}];")
        w.line(f"{self.real} tnz1[{n * z}];")
        w.line(f"{self.real} tzn0[{z * n}];")
        w.line(f"{self.real} tzz0[{z * z}];")
        w.line(f"{self.real} tn0[{n}];")
        w.line(f"{self.real} tn1[{n}];")
        w.line(f"{self.real} tz0[{z}];")
        w.close(f"}} {self.ctx_type};")
        w.line()
        extras_sig = self._extras_params()
        w.line(
            f"void {self.prefix}filterInit({self.ctx_type} *ctx, "
            f"const {self.real} s0[{n}], const {self.real} P0[{n * n}]);"
        )
        w.line(f"void {self.prefix}filterPredict({self.ctx_type} *ctx{extras_sig}, int mode);")
        w.line(
            f"void {self.prefix}filterUpdate({self.ctx_type} *ctx, "
            f"const {self.real} z[{z}]{extras_sig});"
        )
        w.line()
        w.line("/* read-only views of the filter internals */")
        for name, field, doc in (
            ("state", "s", "current state estimate"),
            ("covariance", "P", "current covariance, row-major"),
            ("gain", "K", "gain used by the last completed update"),
            ("innovation", "innovation", "innovation of the last completed update"),
        ):
            w.line(f"/* {doc} */")
            w.fn(
                f"static inline const {self.real} *{self.prefix}{name}"
                f"(const {self.ctx_type} *ctx)"
            )
            w.line(f"return ctx->{field};")
            w.close()
            w.line()
        w.fn(f"static inline int {self.prefix}status(const {self.ctx_type} *ctx)")
        w.line("return ctx->status;")
        w.close()
        w.line()
        w.line(f"#endif /* {guard} */")
        return w.text()

    # -- implementation -------------------------------------------------------

    def implementation(self) -> str:
        w = _CWriter()
        base = self.opts.output_basename
        w.line(f"/* {base}.c -- generated state estimator; see {base}.h. */")
        w.line("#include <math.h>")
        w.line(f'#include "{base}.h"')
        w.line()
        self._emit_const_matrix(w, f"{self.prefix}Q", self.model.process_noise)
        self._emit_const_matrix(w, f"{self.prefix}R", self.model.measurement_noise)
        w.line()
        w.fn(f"static void {self.prefix}clear({self.real} *a, int n)")
        w.line("int i;")
        w.line(f"for (i = 0; i < n; ++i) a[i] = {self.lit(0.0)};")
        w.close()
        w.line()

        if self.opts.filter_kind == "ekf":
            self._emit_model_functions(w)

        self._emit_init(w)
        self._emit_predict(w)
        self._emit_update(w)
        return w.text()

    def _emit_model_functions(self, w: _CWriter) -> None:
        model = self.model
        standard = self.opts.diff_mode == "standard"
        for m, mode in enumerate(model.modes):
            for i, rhs in enumerate(mode.transition):
                doc = f"{self.state[i]} transition ({mode.name})"
                if standard:
                    self._emit_value_fn(w, self._fn_name("f", m, i), rhs, doc)
                    for j, entry in enumerate(mode.jacobian[i]):
                        self._emit_value_fn(
                            w,
                            self._fn_name("f", m, i, j),
                            entry,
                            f"d({self.state[i]})/d({self.state[j]}) ({mode.name})",
                        )
                else:
                    self._emit_sweep_fn(w, self._fn_name("f", m, i), rhs, doc)
        for i, rhs in enumerate(model.measurement):
            name = model.variables.measurement[i]
            if standard:
                self._emit_value_fn(w, self._fn_name("h", 0, i), rhs, f"{name} prediction")
                for j, entry in enumerate(model.measurement_jacobian[i]):
                    self._emit_value_fn(
                        w,
                        self._fn_name("h", 0, i, j),
                        entry,
                        f"d({name})/d({self.state[j]})",
                    )
            else:
                self._emit_sweep_fn(w, self._fn_name("h", 0, i), rhs, f"{name} prediction")

    def _emit_init(self, w: _CWriter) -> None:
        n = self.n
        w.fn(
            f"void {self.prefix}filterInit({self.ctx_type} *ctx, "
            f"const {self.real} s0[{n}], const {self.real} P0[{n * n}])"
        )
        w.line("int i;")
        w.line(f"for (i = 0; i < {n}; ++i) ctx->s[i] = s0[i];")
        w.line(f"for (i = 0; i < {n * n}; ++i) ctx->P[i] = P0[i];")
        w.line(f"ctx->status = {self.macro}_STATUS_OK;")
        for field, size in (
            ("K", self.n * self.z),
            ("innovation", self.z),
            ("F", n * n),
            ("H", self.z * n),
            ("Sinv", self.z * self.z),
            ("zpred", self.z),
            ("tnn0", n * n),
            ("tnn1", n * n),
            ("tnn2", n * n),
            ("tnz0", n * self.z),
            ("tnz1", n * self.z),
            ("tzn0", self.z * n),
            ("tzz0", self.z * self.z),
            ("tn0", n),
            ("tn1", n),
            ("tz0", self.z),
        ):
            w.line(f"{self.prefix}clear(ctx->{field}, {size});")
        w.close()
        w.line()

    def _predict_fill(self, w: _CWriter, m: int) -> None:
        """F and the predicted state (into tn0) for one mode, evaluated at
        the pre-step estimate."""
        model = self.model
        mode = model.modes[m]
        n = self.n
        env = {name: self.extra_cnames[name] for name in self.extras}
        if self.opts.filter_kind == "lkf":
            assert mode.matrix is not None and mode.offset is not None
            for i, row in enumerate(mode.matrix):
                for j, entry in enumerate(row):
                    rendered = self.render_expr(self._resolved(entry), env)
                    w.line(f"ctx->F[{i * n + j}] = {rendered};")
            for i, entry in enumerate(mode.offset):
                w.line(f"ctx->tn1[{i}] = {self.render_expr(self._resolved(entry), env)};")
            w.line(f"kfrt_mat_vec_mul(ctx->F, {n}, {n}, ctx->s, ctx->tn0);")
            for i in range(n):
                w.line(f"ctx->tn0[{i}] = ctx->tn0[{i}] + ctx->tn1[{i}];")
            return
        args = self._extras_args()
        if self.opts.diff_mode == "standard":
            for i in range(n):
                for j in range(n):
                    fn = self._fn_name("f", m, i, j)
                    w.line(f"ctx->F[{i * n + j}] = {fn}(ctx->s{args});")
            for i in range(n):
                w.line(f"ctx->tn0[{i}] = {self._fn_name('f', m, i)}(ctx->s{args});")
        else:
            for i in range(n):
                fn = self._fn_name("f", m, i)
                w.line(f"ctx->tn0[{i}] = {fn}(ctx->s{args}, &ctx->F[{i * n}]);")

    def _emit_predict(self, w: _CWriter) -> None:
        n = self.n
        w.fn(
            f"void {self.prefix}filterPredict({self.ctx_type} *ctx"
            f"{self._extras_params()}, int mode)"
        )
        if self.opts.filter_kind == "lkf":
            self._emit_lkf_unused_casts_predict(w)
        if self.multi_mode:
            w.open("switch (mode) {")
            for m in range(len(self.model.modes)):
                w.line(f"case {m}:")
                w.depth += 1
                self._predict_fill(w, m)
                w.line("break;")
                w.depth -= 1
            w.line("default:")
            w.depth += 1
            w.line(f"ctx->status |= {self.macro}_STATUS_BAD_MODE;")
            w.line("return;")
            w.depth -= 1
            w.close()
        else:
            w.open("if (mode != 0) {")
            w.line(f"ctx->status |= {self.macro}_STATUS_BAD_MODE;")
            w.line("return;")
            w.close()
            self._predict_fill(w, 0)
        for i in range(n):
            w.line(f"ctx->s[{i}] = ctx->tn0[{i}];")
        w.line("/* P = F P F^T + Q */")
        w.line(f"kfrt_mat_mul(ctx->F, {n}, {n}, ctx->P, {n}, {n}, ctx->tnn0);")
        w.line(f"kfrt_mat_transpose(ctx->F, {n}, {n}, ctx->tnn1);")
        w.line(f"kfrt_mat_mul(ctx->tnn0, {n}, {n}, ctx->tnn1, {n}, {n}, ctx->tnn2);")
        w.line(f"kfrt_mat_add(ctx->tnn2, {n}, {n}, {self.prefix}Q, {n}, {n}, ctx->P);")
        w.close()
        w.line()

    def _lkf_used_names(self, exprs: list[Expr]) -> set[str]:
        used: set[str] = set()
        for expr in exprs:
            used.update(free_idents(self._resolved(expr)))
        return used

    def _emit_lkf_unused_casts_predict(self, w: _CWriter) -> None:
        exprs: list[Expr] = []
        for mode in self.model.modes:
            assert mode.matrix is not None and mode.offset is not None
            exprs += [c for row in mode.matrix for c in row]
            exprs += mode.offset
        used = self._lkf_used_names(exprs)
        for name in self.extras:
            if name not in used:
                w.line(f"(void){self.extra_cnames[name]};")

    def _emit_update(self, w: _CWriter) -> None:
        model = self.model
        n, z = self.n, self.z
        w.fn(
            f"void {self.prefix}filterUpdate({self.ctx_type} *ctx, "
            f"const {self.real} z[{z}]{self._extras_params()})"
        )
        env = {name: self.extra_cnames[name] for name in self.extras}
        if self.opts.filter_kind == "lkf":
            assert model.measurement_matrix is not None and model.measurement_offset is not None
            used = self._lkf_used_names(
                [c for row in model.measurement_matrix for c in row] + model.measurement_offset
            )
            for name in self.extras:
                if name not in used:
                    w.line(f"(void){self.extra_cnames[name]};")
            for i, row in enumerate(model.measurement_matrix):
                for j, entry in enumerate(row):
                    rendered = self.render_expr(self._resolved(entry), env)
                    w.line(f"ctx->H[{i * n + j}] = {rendered};")
            w.line(f"kfrt_mat_vec_mul(ctx->H, {z}, {n}, ctx->s, ctx->tz0);")
            for i, entry in enumerate(model.measurement_offset):
                rendered = self.render_expr(self._resolved(entry), env)
                w.line(f"ctx->zpred[{i}] = ctx->tz0[{i}] + {rendered};")
        else:
            args = self._extras_args()
            if self.opts.diff_mode == "standard":
                for i in range(z):
                    for j in range(n):
                        fn = self._fn_name("h", 0, i, j)
                        w.line(f"ctx->H[{i * n + j}] = {fn}(ctx->s{args});")
                for i in range(z):
                    w.line(f"ctx->zpred[{i}] = {self._fn_name('h', 0, i)}(ctx->s{args});")
            else:
                for i in range(z):
                    fn = self._fn_name("h", 0, i)
                    w.line(f"ctx->zpred[{i}] = {fn}(ctx->s{args}, &ctx->H[{i * n}]);")
        w.line("/* S = H P H^T + R */")
        w.line(f"kfrt_mat_mul(ctx->H, {z}, {n}, ctx->P, {n}, {n}, ctx->tzn0);")
        w.line(f"kfrt_mat_transpose(ctx->H, {z}, {n}, ctx->tnz0);")
        w.line(f"kfrt_mat_mul(ctx->tzn0, {z}, {n}, ctx->tnz0, {n}, {z}, ctx->tzz0);")
        w.line(f"kfrt_mat_add(ctx->tzz0, {z}, {z}, {self.prefix}R, {z}, {z}, ctx->Sinv);")
        w.open(f"if (kfrt_mat_invert(ctx->Sinv, {z}, ctx->Sinv) != KFRT_OK) {{")
        w.line(f"ctx->status |= {self.macro}_STATUS_SINGULAR;")
        w.line("return;")
        w.close()
        w.line("/* K = P H^T S^-1 */")
        w.line(f"kfrt_mat_mul(ctx->P, {n}, {n}, ctx->tnz0, {n}, {z}, ctx->tnz1);")
        w.line(f"kfrt_mat_mul(ctx->tnz1, {n}, {z}, ctx->Sinv, {z}, {z}, ctx->K);")
        for i in range(z):
            w.line(f"ctx->innovation[{i}] = z[{i}] - ctx->zpred[{i}];")
        w.line("/* s += K innovation */")
        w.line(f"kfrt_mat_vec_mul(ctx->K, {n}, {z}, ctx->innovation, ctx->tn0);")
        for i in range(n):
            w.line(f"ctx->s[{i}] = ctx->s[{i}] + ctx->tn0[{i}];")
        w.line("/* P = (I - K H) P, then symmetrize */")
        w.line(f"kfrt_mat_mul(ctx->K, {n}, {z}, ctx->H, {z}, {n}, ctx->tnn0);")
        w.line(f"kfrt_mat_identity(ctx->tnn1, {n});")
        w.line(f"kfrt_mat_sub(ctx->tnn1, {n}, {n}, ctx->tnn0, {n}, {n}, ctx->tnn2);")
        w.line(f"kfrt_mat_mul(ctx->tnn2, {n}, {n}, ctx->P, {n}, {n}, ctx->tnn0);")
        w.line(f"kfrt_mat_transpose(ctx->tnn0, {n}, {n}, ctx->tnn1);")
        w.line(f"kfrt_mat_add(ctx->tnn0, {n}, {n}, ctx->tnn1, {n}, {n}, ctx->tnn2);")
        w.line(f"kfrt_mat_scale(ctx->tnn2, {n}, {n}, {self.lit(0.5)}, ctx->P);")
        w.close()
        w.line()


def generate(model: StateSpaceModel, opts: GenOptions) -> GeneratedSource:
    """Emit the header/implementation pair for *model*."""
    if opts.filter_kind not in ("lkf", "ekf"):
        raise ValueError(f"unknown filter kind '{opts.filter_kind}'")
    if opts.diff_mode not in ("standard", "autodiff"):
        raise ValueError(f"unknown differentiation mode '{opts.diff_mode}'")
    if opts.filter_kind == "lkf" and not model.linear:
        raise ValueError(
            "the model is nonlinear; a linear filter cannot represent it (use the ekf kind)"
        )
    if not opts.additive_noise:
        raise ValueError("only additive noise is supported; additive_noise must be True")
    if not _valid_c_ident(opts.symbol_prefix.rstrip("_") or "_"):
        raise ValueError(f"symbol prefix '{opts.symbol_prefix}' is not a valid C identifier stem")

    generator = _Generator(model, opts)
    return GeneratedSource(
        header_filename=f"{opts.output_basename}.h",
        impl_filename=f"{opts.output_basename}.c",
        header=generator.header(),
        implementation=generator.implementation(),
    )


def dump_ssa(model: StateSpaceModel, diff_mode: str = "autodiff") -> str:
    """Textual SSA listing of every model function, as the generator
    would emit it (reverse sweeps pruned to the state gradient)."""
    lines: list[str] = []
    state = set(model.variables.state)

    def dump_one(label: str, expr: Expr) -> None:
        lines.append(f"{label}:")
        resolved = resolve_constants(expr, model.constants)
        if diff_mode == "autodiff":
            program = prune_adjoint(reverse_mode(to_ssa(resolved)), state)
            body = str(program)
        else:
            body = str(to_ssa(resolved))
        lines.extend(f"  {line}" for line in body.splitlines())

    for m, mode in enumerate(model.modes):
        tag = f"mode {m} ({mode.name}) " if len(model.modes) > 1 else ""
        for i, rhs in enumerate(mode.transition):
            dump_one(f"{tag}f[{i}] ({model.variables.state[i]})", rhs)
        if diff_mode == "standard":
            for i, row in enumerate(mode.jacobian):
                for j, entry in enumerate(row):
                    dump_one(
                        f"{tag}dF[{i}][{j}] (d {model.variables.state[i]} / "
                        f"d {model.variables.state[j]})",
                        entry,
                    )
    for i, rhs in enumerate(model.measurement):
        dump_one(f"h[{i}] ({model.variables.measurement[i]})", rhs)
        if diff_mode == "standard":
            for j, entry in enumerate(model.measurement_jacobian[i]):
                dump_one(
                    f"dH[{i}][{j}] (d {model.variables.measurement[i]} / "
                    f"d {model.variables.state[j]})",
                    entry,
                )
    return "\n".join(lines) + "\n"
