import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy.stats import special_ortho_group

from nncontrol import geometry
from nncontrol.action_sets import (
    ActionSet,
    Variant,
    centered_regular_simplex,
    check_orthogonal,
    design_minimal_set,
    grid_set,
    lemma4_delta,
    planar_trine,
    regular_simplex,
    simplex_barycenter,
    simplex_delta,
    simplex_vertices,
    validate,
)
from nncontrol.exceptions import DuplicatePoints, NotOrthogonal, TooManyActions


# -- constructors -------------------------------------------------------------

@pytest.mark.parametrize("m", range(1, 7))
def test_simplex_is_regular(m):
    S = simplex_vertices(m, 2.0)
    d = np.linalg.norm(S[:, None] - S[None], axis=-1)
    off = d[~np.eye(m + 1, dtype=bool)]
    assert_allclose(off, 2.0 * math.sqrt(2), rtol=1e-12)
    assert_allclose(S.mean(axis=0), simplex_barycenter(m, 2.0), atol=1e-14)


def test_centered_simplex_barycenter_at_origin():
    U = centered_regular_simplex(4, 1.5)
    assert_allclose(U.non_base.mean(axis=0), 0.0, atol=1e-14)
    assert U.base_index == 0 and len(U) == 6


def test_trine_layout():
    U = planar_trine(0.0, 0.1)
    # theta = 0 puts the first direction on the second axis
    assert_allclose(U.actions[1], [0.0, 0.1], atol=1e-17)
    assert_allclose(np.linalg.norm(U.non_base, axis=1), 0.1)


def test_grid_size_and_base():
    U = grid_set(2, 3, 0.5)
    assert len(U) == 49
    assert_allclose(U.base, 0.0)
    with pytest.raises(TooManyActions):
        grid_set(6, 5)


def test_actionset_is_immutable_and_distinct():
    U = regular_simplex(2)
    with pytest.raises(ValueError):
        U.actions[0, 0] = 1.0
    with pytest.raises(DuplicatePoints):
        ActionSet(np.array([[0.0], [1.0], [1.0]]))
    with pytest.raises(IndexError):
        ActionSet(np.eye(2), base_index=2)


def test_json_round_trip_and_unknown_fields():
    U = planar_trine(np.pi / 7, 0.3).translated([1.0, -2.0])
    V = ActionSet.from_json(U.to_json())
    assert np.array_equal(U.actions, V.actions) and V.base_index == U.base_index
    d = U.to_dict()
    d["extra"] = 1
    with pytest.raises(ValueError):
        ActionSet.from_dict(d)
    d = U.to_dict()
    d["dim"] = 3
    with pytest.raises(ValueError):
        ActionSet.from_dict(d)


# -- closed forms -------------------------------------------------------------

def test_centered_radius_frozen_values():
    # lam * m/2 * sqrt(m/(m+1)) evaluated independently
    assert_allclose(lemma4_delta(2, 1.0), 0.816496580927726, rtol=1e-14)
    assert_allclose(lemma4_delta(3, 0.1), 0.12990381056766578, rtol=1e-14)


@pytest.mark.parametrize("m", range(1, 6))
def test_exact_simplex_radius(m):
    assert_allclose(geometry.covering_radius(regular_simplex(m, 1.0)), simplex_delta(m, 1.0), atol=1e-9)
    assert_allclose(geometry.covering_radius(centered_regular_simplex(m, 1.0)), lemma4_delta(m, 1.0), atol=1e-9)


# -- design -------------------------------------------------------------------

@pytest.mark.parametrize("variant", list(Variant))
@pytest.mark.parametrize("m", range(1, 6))
def test_design_hits_target_radius(m, variant):
    U = design_minimal_set(m, 0.3, variant=variant)
    assert len(U) == m + 2
    assert_allclose(geometry.covering_radius(U), 0.3, rtol=1e-9)
    assert validate(U).minimal


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.floats(0.01, 5.0), st.integers(0, 10_000),
       st.sampled_from(list(Variant)))
def test_design_round_trip(m, delta, seed, variant):
    rng = np.random.default_rng(seed)
    R = special_ortho_group.rvs(m, random_state=seed) if m > 1 else np.eye(1)
    u_star = rng.normal(size=m)
    U = design_minimal_set(m, delta, R, u_star, variant)
    assert_allclose(U.base, u_star)
    report = validate(U)
    assert report.assumption_ok
    assert_allclose(report.delta, delta, rtol=1e-8)


def test_design_shifted_base_example():
    U = design_minimal_set(2, 0.1, u_star=[1.0, 0.0], variant="centered")
    assert len(U) == 4
    assert_allclose(U.base, [1.0, 0.0])
    assert_allclose(geometry.covering_radius(U), 0.1, rtol=1e-9)


def test_design_rejects_bad_inputs():
    with pytest.raises(ValueError):
        design_minimal_set(2, 0.0)
    with pytest.raises(NotOrthogonal):
        design_minimal_set(2, 0.1, rotation=[[1.0, 0.1], [0.0, 1.0]])
    with pytest.raises(NotOrthogonal):
        design_minimal_set(2, 0.1, rotation=np.eye(3))
    with pytest.raises(NotOrthogonal):
        check_orthogonal(np.ones((2, 3)))


# -- validation ---------------------------------------------------------------

def test_validate_reports_failures():
    r = validate(ActionSet(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])))
    assert not r.assumption_ok
    assert r.witness.startswith("base not in interior")
    r = validate(ActionSet(np.array([[0.0, 0.0], [1.0, 0.0]])))
    assert not r.assumption_ok


def test_validate_grid_not_minimal_with_mu():
    r = validate(grid_set(2, 1, 1.0), want_mu=True)
    assert r.assumption_ok and not r.minimal
    assert_allclose(r.delta, math.sqrt(2) / 2, rtol=1e-12)
    assert_allclose(r.mu_min1, 1 / math.sqrt(2), atol=1e-9)
    json.dumps(r.to_dict())
