import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from nncontrol.action_sets import ActionSet, planar_trine
from nncontrol.controller import unity_law
from nncontrol.exceptions import NonFiniteState
from nncontrol.presets import example1
from nncontrol.simulator import (
    SimConfig,
    Trajectory,
    batch_sweep,
    convergence_metrics,
    simulate,
    simulate_batch,
)
from nncontrol.systems import linear_system, sigma_ex

LINE = ActionSet(np.array([[0.0], [1.0], [-1.0]]))


def decay():
    return linear_system([[-1.0]], [[1.0]], [[1.0]], [[1.0]])


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(dt=0.0)
    with pytest.raises(ValueError):
        SimConfig(dt=0.1, t_final=0.01)
    with pytest.raises(ValueError):
        SimConfig(hold_steps=0)
    h = SimConfig(dt=0.3, t_final=1.0).step_sizes()
    assert_allclose(h.sum(), 1.0) and len(h) == 4


def test_rk4_against_exponential():
    # |y| < 1/2 keeps the base action, so x(t) = x0 exp(-t)
    traj = simulate(decay(), unity_law(LINE), [0.4], SimConfig(dt=1e-2, t_final=2.0))
    assert_allclose(traj.states[:, 0], 0.4 * np.exp(-traj.times), rtol=1e-9)
    assert traj.times[-1] == 2.0
    assert np.all(traj.actions == 0.0)


def test_switching_then_base():
    # starts in the cell of -1, drives down until |y| < 1/2, then decays
    traj = simulate(decay(), unity_law(LINE), [2.0], SimConfig(dt=1e-3, t_final=5.0))
    assert traj.actions[0, 0] == -1.0 and traj.actions[-1, 0] == 0.0
    rep = convergence_metrics(traj, 0.5, [0.0], [0.0])
    assert rep.converged and rep.tail_action_constant
    assert rep.h_max_increase == 0.0


def test_blowup_reports_time():
    sys = linear_system([[5.0]], [[1.0]], [[1.0]])
    with pytest.raises(NonFiniteState) as exc:
        simulate(sys, unity_law(LINE), [1e7], SimConfig(dt=1e-2, t_final=10.0))
    assert 0 < exc.value.time < 10.0


def test_batch_isolates_blowup_and_keeps_order():
    sys = linear_system([[1.0]], [[1.0]], [[1.0]])
    res = simulate_batch(sys, unity_law(LINE), [[0.1], [1e8], [0.2]], SimConfig(dt=1e-2, t_final=5.0))
    assert isinstance(res[1], NonFiniteState)
    assert res[0].states[0, 0] == 0.1 and res[2].states[0, 0] == 0.2


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000))
def test_batch_equals_individual_runs(seed):
    sys, H, _ = sigma_ex()
    law = unity_law(planar_trine(0.0, 0.1))
    cfg = SimConfig(dt=1e-2, t_final=3.0, record_stride=7)
    X0 = np.random.default_rng(seed).uniform(-3, 3, size=(4, 3))
    batch = simulate_batch(sys, law, X0, cfg)
    for x0, tr in zip(X0, batch):
        single = simulate(sys, law, x0, cfg)
        assert np.array_equal(tr.states, single.states)
        assert np.array_equal(tr.actions, single.actions)


def test_storage_nonincreasing_short_run():
    sys, H, _ = sigma_ex()
    traj = simulate(sys, unity_law(planar_trine(0.0, 0.1)), [2.0, 2.0, 1.5], SimConfig(t_final=10.0))
    assert np.max(np.diff(traj.storage)) <= 1e-10


def test_csv_round_trip():
    sys, H, _ = sigma_ex()
    traj = simulate(sys, unity_law(planar_trine(0.0, 0.1)), [1.0, 0.0, 0.0],
                    SimConfig(dt=1e-2, t_final=0.5))
    text = traj.to_csv()
    assert text.splitlines()[0] == "t,x1,x2,x3,y1,y2,u1,u2,H"
    back = Trajectory.from_csv(io.StringIO(text))
    assert np.array_equal(back.states, traj.states)
    assert np.array_equal(back.storage, traj.storage)
    plain = Trajectory(traj.times, traj.states, traj.outputs, traj.actions)
    assert plain.to_csv().splitlines()[0].endswith("u2")


def test_convergence_metrics_synthetic():
    t = np.linspace(0, 10, 11)
    x = np.maximum(5 - t, 0.2)[:, None]
    u = np.where(t >= 6, 0.0, 1.0)[:, None]
    tr = Trajectory(t, x, x, u, storage=x[:, 0] ** 2)
    r = convergence_metrics(tr, 1.0, [0.0], [0.0])
    assert r.entry_time == 4.0 and r.settle_time == 6.0
    assert r.tail_action_constant and r.tail_after_entry is False
    assert r.h_max_increase == 0.0
    never = convergence_metrics(tr, 0.1, [0.0], [0.0])
    assert never.entry_time is None and not never.converged


def test_batch_sweep():
    assert batch_sweep(decay(), unity_law(LINE), np.empty((0, 1)), SimConfig(), 0.5, [0.0], [0.0]) == []
    reps = batch_sweep(decay(), unity_law(LINE), [[2.0], [-3.0]], SimConfig(t_final=6.0), 0.5, [0.0], [0.0])
    assert all(r.converged for r in reps)


def test_example1_preset_wiring():
    p = example1()
    assert p.epsilon == 1.0 and p.config.dt == 1e-3
    assert_allclose(p.action_set.actions[1], [0.0, 0.1], atol=1e-17)
    assert math.isclose(p.gain(0.125), 1.0)
