"""State-space model assembly: roles, ordering, noise, and diagnostics."""

import numpy as np
import pytest

from fusegen.diagnostics import SourceError
from fusegen.model import build_model
from fusegen.reference import ReferenceFilter
from fusegen.signals import IncludeResolver, load_description_text

RESOLVER = IncludeResolver(["corpus"])


def _build(source, process=None, measure=None, **kw):
    desc, diags = load_description_text(source, "t.nt", RESOLVER)
    assert not [d for d in diags if d.severity == "error"]
    return build_model(desc, process=process, measure=measure, **kw)


def _errors(source, process=None, measure=None):
    with pytest.raises(SourceError) as exc:
        _build(source, process=process, measure=measure)
    return [d.message for d in exc.value.diagnostics]


BASE = """include "NewtonBaseSignals.nt"
g : constant = 9.80665 ajf;

proc : invariant( theta : angle = Gaussian(0.0, 1e-6),
                  dtheta : angularRate = Gaussian(0.0, 0.005),
                  dt : time,
                  L : distance ) =
{
  theta ~ theta + dtheta * dt,
  dtheta ~ dtheta - g/L * sin(theta) * dt
}

meas : invariant( dtheta : angularRate,
                  gyro_z : angularRate = Gaussian(0.0, 0.5) ) =
{
  gyro_z ~ dtheta
}
"""

UNUSED = (
    BASE
    + """
extra_one : invariant( theta : angle, dt : time ) =
{
  theta ~ theta + dt * 0.0
}
"""
)


def test_two_invariants_are_auto_classified():
    model = _build(BASE)
    assert model.variables.state == ["theta", "dtheta"]
    assert model.variables.extras == ["dt", "L"]
    assert model.variables.measurement == ["gyro_z"]
    assert not model.linear
    assert len(model.modes) == 1
    assert model.warnings == []


def test_pendulum_corpus_classification(pendulum_model):
    assert pendulum_model.variables.state == ["theta", "dtheta"]
    assert pendulum_model.variables.extras == ["dt", "L"]
    assert pendulum_model.state_dim == 2
    assert pendulum_model.measurement_dim == 1


def test_diffdrive_multi_mode(diffdrive_model):
    assert diffdrive_model.variables.state == ["x", "y", "theta"]
    assert diffdrive_model.variables.extras == ["v", "dt", "l"]
    assert len(diffdrive_model.modes) == 2
    assert [m.name for m in diffdrive_model.modes] == ["drive_straight", "drive_turn"]
    assert not diffdrive_model.linear


def test_linear_model_has_affine_matrices(linear_model):
    assert linear_model.linear
    assert linear_model.measurement_matrix is not None
    assert linear_model.measurement_offset is not None
    for mode in linear_model.modes:
        assert mode.matrix is not None
        assert mode.offset is not None


def test_noise_matrices_come_from_annotations():
    model = _build(BASE)
    assert np.allclose(model.process_noise, np.diag([1e-6, 0.005]))
    assert np.allclose(model.measurement_noise, [[0.5]])


def test_three_invariants_need_explicit_roles():
    msgs = _errors(UNUSED)
    assert msgs == [
        "cannot infer invariant roles from 3 invariants; name the process and "
        "measurement invariants (available: proc, meas, extra_one)"
    ]


def test_partial_role_naming_rejected():
    msgs = _errors(UNUSED, process=["proc"])
    assert msgs == ["both the process and measurement invariants must be named"]


def test_unknown_invariant_name():
    msgs = _errors(UNUSED, process=["nope"], measure="meas")
    assert msgs == ["no invariant named 'nope' (available: proc, meas, extra_one)"]


def test_invariant_cannot_play_both_roles():
    msgs = _errors(UNUSED, process=["proc"], measure="proc")
    assert msgs == ["invariant 'proc' cannot be both process and measurement"]


def test_unused_invariant_warns():
    model = _build(UNUSED, process=["proc"], measure="meas")
    assert [w.message for w in model.warnings] == [
        "invariant 'extra_one' is not used by this configuration"
    ]


def test_process_modes_must_share_state():
    source = """include "NewtonBaseSignals.nt"
m0 : invariant( x : distance, v : speed, dt : time ) =
{
  x ~ x + v * dt,
  v ~ v
}
m1 : invariant( x : distance, dt : time ) =
{
  x ~ x
}
zz : invariant( x : distance, pos : distance = Gaussian(0.0, 0.04) ) =
{
  pos ~ x
}
"""
    msgs = _errors(source, process=["m0", "m1"], measure="zz")
    assert msgs == [
        "process invariant 'm1' constrains [x] but 'm0' constrains [x, v]; "
        "all process invariants must constrain the same state variables in the same order"
    ]


def test_variable_in_both_roles_is_ambiguous():
    source = """include "NewtonBaseSignals.nt"
p : invariant( x : distance, v : speed, dt : time ) =
{
  x ~ x + v * dt,
  v ~ v
}
q : invariant( x : distance, v : speed ) =
{
  v ~ v * 1.0
}
"""
    msgs = _errors(source, process=["p"], measure="q")
    assert msgs == [
        "'v' is constrained by both a process and the measurement invariant; "
        "its role is ambiguous"
    ]


def test_sampling_interval_cannot_be_constrained():
    source = """include "NewtonBaseSignals.nt"
p : invariant( dt : time ) =
{
  dt ~ dt
}
q : invariant( dt : time, z : time = Gaussian(0.0, 0.1) ) =
{
  z ~ dt
}
"""
    msgs = _errors(source, process=["p"], measure="q")
    assert "'dt' is the sampling interval and cannot be a constrained variable" in msgs


def test_parameter_signals_must_agree_across_invariants():
    source = """include "NewtonBaseSignals.nt"
p : invariant( x : distance, v : speed, dt : time ) =
{
  x ~ x + v * dt,
  v ~ v
}
q : invariant( x : speed, pos : speed = Gaussian(0.0, 0.04) ) =
{
  pos ~ x
}
"""
    msgs = _errors(source, process=["p"], measure="q")
    assert msgs == ["parameter 'x' is 'speed' in invariant 'q' but 'distance' in 'p'"]


def test_noise_defaults_and_mean_warning():
    source = """include "NewtonBaseSignals.nt"
p : invariant( x : distance = Gaussian(0.5, 0.0001), v : speed, dt : time ) =
{
  x ~ x + v * dt,
  v ~ v
}
q : invariant( x : distance, pos : distance ) =
{
  pos ~ x
}
"""
    model = _build(source, process=["p"], measure="q")
    messages = [w.message for w in model.warnings]
    assert messages == [
        "nonzero Gaussian mean on 'x' is ignored; noise is modeled as zero-mean",
        "no uncertainty annotation on process variable 'v'; defaulting its variance to 1e-06",
        "no uncertainty annotation on measurement variable 'pos'; defaulting its variance to 0.001",
    ]
    assert np.allclose(model.process_noise, np.diag([1e-4, 1e-6]))
    assert np.allclose(model.measurement_noise, [[0.001]])


def test_zero_interval_predict_only_adds_process_noise(pendulum_model):
    # With dt = 0 the transition is the identity map, so a predict step
    # must leave the state alone and grow the covariance by exactly Q.
    filt = ReferenceFilter(pendulum_model)
    p0 = [[0.2, 0.01], [0.01, 0.3]]
    filt.init([0.4, -0.2], p0)
    filt.predict({"dt": 0.0, "L": 0.5})
    assert filt.state == [0.4, -0.2]
    q = pendulum_model.process_noise
    for i in range(2):
        for j in range(2):
            assert filt.covariance[i][j] == pytest.approx(p0[i][j] + q[i][j], abs=1e-15)


def test_constants_propagate_into_model():
    model = _build(BASE)
    assert model.constants["g"] == 9.80665
