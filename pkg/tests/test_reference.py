"""Direct-evaluation estimator oracle: LKF/EKF equivalence and edge cases."""

import math

import pytest

from fusegen.reference import (
    ReferenceFilter,
    gauss_jordan_invert,
    run_filter,
)
from fusegen.rng import Rng
from fusegen.simulate import SimulationTrace, simulate_pendulum


def _linear_trace(steps: int = 1000, seed: int = 5) -> SimulationTrace:
    rng = Rng(seed)
    tr = SimulationTrace(state_names=["x", "v"], extra_names=["dt"], measurement_names=["z"])
    x, v, dt = 0.0, 1.0, 0.1
    for i in range(steps):
        x += v * dt
        tr.append((i + 1) * dt, [x, v], [x + 0.1 * rng.normal()], [dt])
    return tr


def test_lkf_and_ekf_agree_exactly_on_affine_model(linear_model):
    # On an affine model the linearization is the model itself, so the
    # two filter kinds must walk identical trajectories.
    trace = _linear_trace(1000)
    p0 = [[1.0, 0.0], [0.0, 1.0]]
    lkf_est, _ = run_filter(linear_model, trace, [0.0, 0.0], p0, kind="lkf")
    ekf_est, _ = run_filter(linear_model, trace, [0.0, 0.0], p0, kind="ekf")
    for a, b in zip(lkf_est, ekf_est):
        for u, v in zip(a, b):
            assert abs(u - v) <= 1e-12


def test_linear_filter_tracks_constant_velocity(linear_model):
    trace = _linear_trace(1000)
    est, filt = run_filter(linear_model, trace, [0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], kind="lkf")
    assert filt.updates_skipped == 0
    # converged estimate is close to the true terminal state
    x, v = est[-1]
    tx, tv = trace.truth[-1]
    assert abs(x - tx) < 0.2
    assert abs(v - tv) < 0.2


def test_lkf_rejects_nonlinear_model(pendulum_model):
    with pytest.raises(ValueError, match="linear filter cannot run a nonlinear model"):
        ReferenceFilter(pendulum_model, kind="lkf")


def test_unknown_kind_rejected(pendulum_model):
    with pytest.raises(ValueError, match="unknown filter kind"):
        ReferenceFilter(pendulum_model, kind="ukf")


def test_init_validates_dimensions(pendulum_model):
    filt = ReferenceFilter(pendulum_model)
    with pytest.raises(ValueError, match="initial state/covariance"):
        filt.init([0.0], [[1.0]])
    with pytest.raises(ValueError, match="initial state/covariance"):
        filt.init([0.0, 0.0], [[1.0, 0.0]])


def test_update_validates_measurement_size(pendulum_model):
    filt = ReferenceFilter(pendulum_model)
    filt.init([0.3, 0.0], [[0.1, 0.0], [0.0, 0.1]])
    with pytest.raises(ValueError, match="measurement has 2 components"):
        filt.update([0.0, 0.0], {"dt": 0.01, "L": 1.0})


def test_predict_validates_mode(pendulum_model):
    filt = ReferenceFilter(pendulum_model)
    filt.init([0.3, 0.0], [[0.1, 0.0], [0.0, 0.1]])
    with pytest.raises(ValueError, match="mode 3 out of range"):
        filt.predict({"dt": 0.01, "L": 1.0}, mode=3)


def test_covariance_stays_symmetric(pendulum_model):
    filt = ReferenceFilter(pendulum_model)
    filt.init([0.3, 0.0], [[0.5, 0.0], [0.0, 0.5]])
    tr = simulate_pendulum(
        theta0=0.3, dt=0.01, steps=200, gravity=9.80665, measurement_variance=0.5, seed=2
    )
    for i in range(len(tr)):
        extras = dict(zip(tr.extra_names, tr.extras[i]))
        filt.predict(extras)
        filt.update(tr.measurements[i], extras)
        p = filt.covariance
        for r in range(2):
            for c in range(2):
                assert p[r][c] == p[c][r]


def test_singular_innovation_skips_update(linear_model):
    # Forcing a zero covariance and zero measurement noise makes the
    # innovation covariance singular; the update must be skipped and
    # counted rather than crashing.
    filt = ReferenceFilter(linear_model, kind="lkf")
    filt.init([0.0, 0.0], [[0.0, 0.0], [0.0, 0.0]])
    filt.model.measurement_noise[0][0] = 0.0
    try:
        before = [list(r) for r in filt.covariance]
        state_before = list(filt.state)
        filt.update([1.0], {"dt": 0.1})
        assert filt.last_update_skipped
        assert filt.updates_skipped == 1
        assert filt.state == state_before
        assert filt.covariance == before
    finally:
        filt.model.measurement_noise[0][0] = 0.1


def test_gauss_jordan_inverts_and_detects_singularity():
    inv = gauss_jordan_invert([[2.0, 1.0], [1.0, 3.0]])
    assert inv is not None
    # A @ inv == I
    ident = [
        [sum([[2.0, 1.0], [1.0, 3.0]][i][k] * inv[k][j] for k in range(2)) for j in range(2)]
        for i in range(2)
    ]
    for i in range(2):
        for j in range(2):
            assert math.isclose(ident[i][j], 1.0 if i == j else 0.0, abs_tol=1e-12)
    assert gauss_jordan_invert([[1.0, 2.0], [2.0, 4.0]]) is None
    assert gauss_jordan_invert([[0.0]]) is None


def test_run_filter_checks_extras_names(linear_model):
    tr = _linear_trace(3)
    tr.extra_names = ["wrong"]
    with pytest.raises(ValueError):
        run_filter(linear_model, tr, [0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], kind="lkf")


def test_ekf_converges_from_wrong_init(pendulum_model):
    tr = simulate_pendulum(
        theta0=math.radians(30),
        dt=0.01,
        steps=2000,
        length=0.3,
        gravity=9.80665,
        process_variance=0.005,
        measurement_variance=0.8,
        seed=4,
    )
    est, _ = run_filter(
        pendulum_model,
        tr,
        [math.radians(60), 0.0],
        [[0.5, 0.0], [0.0, 0.5]],
        kind="ekf",
    )
    late_err = [abs(e[0] - t[0]) for e, t in zip(est[1000:], tr.truth[1000:])]
    assert sum(late_err) / len(late_err) < 0.12
