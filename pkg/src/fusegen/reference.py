"""Interpreted reference filters.

These run the same estimator math the generated C runs, but by direct
expression-tree evaluation — no code generation anywhere.  They are the
oracle the generated code is compared against, so the matrix kernels
below mirror the embedded runtime operation for operation (same
accumulation order, same pivoting rule, same symmetrization point).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import StateSpaceModel
from .simulate import SimulationTrace
from .symbolic import evaluate

Matrix = list[list[float]]
Vector = list[float]

SINGULAR_PIVOT_TOLERANCE = 1e-12


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    rows, inner, cols = len(a), len(b), len(b[0])
    out = [[0.0] * cols for _ in range(rows)]
    for i in range(rows):
        for j in range(cols):
            acc = 0.0
            for k in range(inner):
                acc += a[i][k] * b[k][j]
            out[i][j] = acc
    return out


def mat_vec(a: Matrix, x: Vector) -> Vector:
    out = []
    for row in a:
        acc = 0.0
        for value, xv in zip(row, x):
            acc += value * xv
        out.append(acc)
    return out


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return [[av + bv for av, bv in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a: Matrix, b: Matrix) -> Matrix:
    return [[av - bv for av, bv in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_transpose(a: Matrix) -> Matrix:
    return [[a[i][j] for i in range(len(a))] for j in range(len(a[0]))]


def mat_identity(n: int) -> Matrix:
    return [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]


def gauss_jordan_invert(a: Matrix, tol: float = SINGULAR_PIVOT_TOLERANCE) -> Matrix | None:
    """Gauss-Jordan inversion with partial pivoting.

    Returns None when a pivot's magnitude falls below *tol*; callers
    treat that as "skip this update".  The elimination order here is the
    contract the embedded runtime follows too.
    """
    n = len(a)
    work = [row[:] for row in a]
    out = mat_identity(n)
    for col in range(n):
        pivot_row = col
        best = abs(work[col][col])
        for row in range(col + 1, n):
            if abs(work[row][col]) > best:
                best = abs(work[row][col])
                pivot_row = row
        if best < tol:
            return None
        if pivot_row != col:
            work[col], work[pivot_row] = work[pivot_row], work[col]
            out[col], out[pivot_row] = out[pivot_row], out[col]
        pivot = work[col][col]
        for j in range(n):
            work[col][j] /= pivot
            out[col][j] /= pivot
        for row in range(n):
            if row == col:
                continue
            factor = work[row][col]
            if factor == 0.0:
                continue
            for j in range(n):
                work[row][j] -= factor * work[col][j]
                out[row][j] -= factor * out[col][j]
    return out


@dataclass
class ReferenceFilter:
    """Direct-evaluation state estimator for a built model.

    kind "lkf" uses the closed-form affine matrices (the model must be
    linear); kind "ekf" re-evaluates the transition and its Jacobian at
    the current estimate every step.
    """

    model: StateSpaceModel
    kind: str = "ekf"
    state: Vector = field(default_factory=list)
    covariance: Matrix = field(default_factory=list)
    last_update_skipped: bool = False
    updates_skipped: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("lkf", "ekf"):
            raise ValueError(f"unknown filter kind '{self.kind}'")
        if self.kind == "lkf" and not self.model.linear:
            raise ValueError("a linear filter cannot run a nonlinear model")

    # -- lifecycle -----------------------------------------------------

    def init(self, state: Vector, covariance: Matrix) -> None:
        n = self.model.state_dim
        if len(state) != n or len(covariance) != n or any(len(r) != n for r in covariance):
            raise ValueError(f"initial state/covariance must be {n} and {n}x{n}")
        self.state = list(state)
        self.covariance = [row[:] for row in covariance]
        self.last_update_skipped = False
        self.updates_skipped = 0

    def _env(self, extras: dict[str, float]) -> dict[str, float]:
        env = dict(self.model.constants)
        env.update(extras)
        env.update(zip(self.model.variables.state, self.state))
        return env

    # -- steps ---------------------------------------------------------

    def predict(self, extras: dict[str, float], mode: int = 0) -> None:
        model = self.model
        if not 0 <= mode < len(model.modes):
            raise ValueError(f"mode {mode} out of range (model has {len(model.modes)})")
        env = self._env(extras)
        process = model.modes[mode]

        if self.kind == "lkf":
            assert process.matrix is not None and process.offset is not None
            f_matrix = [[evaluate(c, env) for c in row] for row in process.matrix]
            offset = [evaluate(c, env) for c in process.offset]
            moved = mat_vec(f_matrix, self.state)
            new_state = [m + o for m, o in zip(moved, offset)]
        else:
            new_state = [evaluate(rhs, env) for rhs in process.transition]
            f_matrix = [[evaluate(c, env) for c in row] for row in process.jacobian]

        fp = mat_mul(f_matrix, self.covariance)
        fpft = mat_mul(fp, mat_transpose(f_matrix))
        self.covariance = mat_add(fpft, [list(r) for r in self.model.process_noise])
        self.state = new_state

    def update(self, measurement: Vector, extras: dict[str, float]) -> None:
        model = self.model
        if len(measurement) != model.measurement_dim:
            raise ValueError(
                f"measurement has {len(measurement)} components, expected {model.measurement_dim}"
            )
        env = self._env(extras)

        if self.kind == "lkf":
            assert model.measurement_matrix is not None and model.measurement_offset is not None
            h_matrix = [[evaluate(c, env) for c in row] for row in model.measurement_matrix]
            offset = [evaluate(c, env) for c in model.measurement_offset]
            predicted = [m + o for m, o in zip(mat_vec(h_matrix, self.state), offset)]
        else:
            predicted = [evaluate(rhs, env) for rhs in model.measurement]
            h_matrix = [[evaluate(c, env) for c in row] for row in model.measurement_jacobian]

        hp = mat_mul(h_matrix, self.covariance)
        ht = mat_transpose(h_matrix)
        s_matrix = mat_add(mat_mul(hp, ht), [list(r) for r in model.measurement_noise])
        s_inverse = gauss_jordan_invert(s_matrix)
        if s_inverse is None:
            self.last_update_skipped = True
            self.updates_skipped += 1
            return
        self.last_update_skipped = False

        pht = mat_mul(self.covariance, ht)
        gain = mat_mul(pht, s_inverse)
        innovation = [z - p for z, p in zip(measurement, predicted)]
        correction = mat_vec(gain, innovation)
        self.state = [s + c for s, c in zip(self.state, correction)]

        kh = mat_mul(gain, h_matrix)
        ikh = mat_sub(mat_identity(model.state_dim), kh)
        new_p = mat_mul(ikh, self.covariance)
        pt = mat_transpose(new_p)
        self.covariance = [
            [0.5 * (new_p[i][j] + pt[i][j]) for j in range(model.state_dim)]
            for i in range(model.state_dim)
        ]


def run_filter(
    model: StateSpaceModel,
    trace: SimulationTrace,
    initial_state: Vector,
    initial_covariance: Matrix,
    kind: str = "ekf",
) -> tuple[list[Vector], ReferenceFilter]:
    """Drive a reference filter over a trace: predict then update per
    row.  Returns the post-update state after every row."""
    flt = ReferenceFilter(model, kind)
    flt.init(initial_state, initial_covariance)
    expected = model.variables.extras
    if trace.extra_names != expected:
        raise ValueError(
            f"trace extras {trace.extra_names} do not match the model's {expected}"
        )
    estimates: list[Vector] = []
    for i in range(len(trace)):
        extras = dict(zip(trace.extra_names, trace.extras[i]))
        flt.predict(extras, trace.modes[i])
        flt.update(trace.measurements[i], extras)
        estimates.append(list(flt.state))
    return estimates, flt
