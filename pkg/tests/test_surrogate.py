import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_instance
from mpsca.problem import ProblemInstance, regularized_objective
from mpsca.surrogate import linearize, surrogate_value, weighted_penalty, with_lambda


def scalar_instance(power=1.0):
    return ProblemInstance([[1.0]], [1.0], power)


def test_scalar_linearization():
    model = linearize(scalar_instance(), np.array([1.0, 0.0]), 2.0)
    np.testing.assert_array_equal(model.A, [[-2.0, 0.0]])
    np.testing.assert_array_equal(model.b, [1.0])
    assert model.lipschitz == 2.0


def test_zero_expansion_point():
    model = linearize(scalar_instance(), np.zeros(2), 0.7)
    assert not model.A.any() and not model.b.any()
    assert model.lipschitz == 0.7


def test_negative_lambda_rejected():
    with pytest.raises(ValueError):
        linearize(scalar_instance(), np.zeros(2), -0.1)


def test_single_user_no_penalty_is_affine(rng):
    inst = random_instance(rng, 3, 1)
    w_n, w = rng.standard_normal(6), rng.standard_normal(6)
    model = linearize(inst, w_n, 0.0)
    assert surrogate_value(model, w) == pytest.approx(model.A[0] @ w + model.b[0], rel=1e-14)


def test_weights_scale_identity_block(rng):
    inst = random_instance(rng, 3, 2)
    weights = np.array([1.0, 2.0, 0.5])
    model = with_lambda(linearize(inst, rng.standard_normal(6), 0.0), 0.3, weights)
    np.testing.assert_allclose(model.coord_lam, 0.3 * np.tile(weights, 2))
    w = rng.standard_normal(6)
    assert surrogate_value(model, w) == pytest.approx(
        np.max(model.A @ w + model.b) + 0.3 * weighted_penalty(w, weights))
    assert model.lipschitz == max(np.linalg.norm(model.A, axis=1).max(), 0.6)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 5), st.floats(0, 3))
def test_tight_at_expansion_point(seed, n, m, lam):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n, m)
    w_n = rng.standard_normal(2 * n)
    model = linearize(inst, w_n, lam)
    np.testing.assert_allclose(model.A @ w_n + model.b, np.einsum("i,mij,j->m", w_n, inst.q_tilde, w_n),
                               rtol=1e-12, atol=1e-12)
    ref = regularized_objective(inst, w_n, lam)
    assert surrogate_value(model, w_n) == pytest.approx(ref, rel=1e-9, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 5), st.floats(0, 3))
def test_majorizes_objective(seed, n, m, lam):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n, m)
    model = linearize(inst, rng.standard_normal(2 * n), lam)
    for w in rng.standard_normal((20, 2 * n)):
        assert surrogate_value(model, w) >= regularized_objective(inst, w, lam) - 1e-9
