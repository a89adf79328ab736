import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from nncontrol.exceptions import DegenerateEquilibrium, NotSteadyState
from nncontrol.systems import (
    SteadyStatePair,
    bregman_storage,
    gamma_bar_ex,
    gamma_ex,
    get_gain,
    get_system,
    incremental_system,
    linear_system,
    observability_gramian,
    passivity_audit,
    sigma_ex,
)


def test_sigma_ex_structure():
    sys, H, gain = sigma_ex()
    x = np.array([1.0, 2.0, -0.5])
    assert_allclose(sys.f(x), [-2.0 - 0.125, 1.0, -1.0])
    assert_allclose(sys.h(x), [1.0, -0.125])
    assert_allclose(H(x), 0.5 + 2.0 + 0.015625)
    assert_allclose(sys.rhs(x, [1.0, 2.0]), sys.f(x) + sys.g(x) @ [1.0, 2.0])


def test_sigma_ex_is_lossless_passive():
    sys, H, _ = sigma_ex()
    rep = passivity_audit(sys, H, 2000)
    assert rep.passed()
    assert rep.drift_violation < 1e-12 and rep.output_violation < 1e-12


def test_audit_flags_wrong_storage():
    sys, H, _ = sigma_ex()
    from nncontrol.systems import StorageFunction
    bad = StorageFunction(lambda x: np.sum(x**2, axis=-1), lambda x: 2 * x)
    assert not passivity_audit(sys, bad, 200).passed()


def test_gains():
    assert gamma_ex(0.125) == 1.0
    assert_allclose(gamma_ex(0.1), 0.4 + 0.1 ** (1 / 3))
    assert_allclose(gamma_bar_ex(0.1, -1.0), 0.4 + 0.04 / 3)
    with pytest.raises(DegenerateEquilibrium):
        gamma_bar_ex(0.1, 0.0)
    assert get_gain("sigma_ex").is_monotone()
    assert_allclose(get_gain("sigma_ex_incremental:-1")(0.1), 0.4 + 0.04 / 3)
    with pytest.raises(KeyError):
        get_gain("nope")


def test_gramian_rotation():
    W = observability_gramian([[0.0, -1.0], [1.0, 0.0]], [[1.0, 0.0]], math.pi)
    assert_allclose(W, math.pi / 2 * np.eye(2), atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0.1, 5.0))
def test_gramian_scalar_closed_form(a, tau):
    W = observability_gramian([[-a]], [[2.0]], tau)
    assert_allclose(W[0, 0], 4 * (1 - math.exp(-2 * a * tau)) / (2 * a), rtol=1e-9)


def test_gramian_is_symmetric_psd():
    rng = np.random.default_rng(1)
    W = observability_gramian(rng.normal(size=(4, 4)), rng.normal(size=(2, 4)), 1.0)
    assert_allclose(W, W.T)
    assert np.linalg.eigvalsh(W).min() > -1e-12


def test_steady_state_pair_and_incremental_system():
    sys, H, _ = sigma_ex()
    pair = SteadyStatePair.of(sys, [0.0, 0.0, -1.0], [1.0, 0.0])
    assert pair.residual == 0.0
    inc = incremental_system(sys, pair)
    assert_allclose(inc.f(np.zeros(3)), 0.0)
    assert_allclose(inc.h(np.zeros(3)), 0.0)
    assert passivity_audit(inc, inc.storage, 1000, box=2.0).passed(tol=1e-9)
    with pytest.raises(NotSteadyState):
        incremental_system(sys, SteadyStatePair.of(sys, [0.0, 0.0, -1.0], [0.0, 0.0]))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(-2, 2))
def test_shifted_storage_is_nonnegative(x, x3s):
    _, H, _ = sigma_ex()
    x_star = np.array([0.0, 0.0, x3s])
    B = bregman_storage(H, x_star)
    assert B(x_star) == pytest.approx(0.0, abs=1e-15)
    assert B(np.array(x)) >= -1e-12


def test_linear_registry(tmp_path):
    d = {"A": [[0.0, 1.0], [-1.0, 0.0]], "B": [[0.0], [1.0]], "C": [[0.0, 1.0]], "P": [[1.0, 0.0], [0.0, 1.0]]}
    s = get_system("linear:" + json.dumps(d))
    assert (s.n, s.m) == (2, 1)
    p = tmp_path / "lin.json"
    p.write_text(json.dumps(d))
    s2 = get_system(f"linear:{p}")
    x = np.array([0.3, -0.2])
    assert_allclose(s2.rhs(x, [0.5]), [-0.2, -0.3 + 0.5])
    assert passivity_audit(s2, s2.storage, 100).passed()
    with pytest.raises(KeyError):
        get_system("missing")
    with pytest.raises(ValueError):
        linear_system(np.eye(2), np.ones((2, 1)), np.ones((2, 2)))
