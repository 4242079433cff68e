import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpsdapprox.exceptions import RetryExhaustedError
from cpsdapprox.jl import PointSet, gaussian_project, jl_dimension, jl_project, verify_jl


def pairwise_oracle(x, y, eps):
    """Loop check of the contract over every ordered pair, diagonal included."""
    m = x.shape[0]
    for i in range(m):
        for j in range(m):
            lhs = abs(float(x[i] @ x[j]) - float(y[i] @ y[j]))
            rhs = eps * (float(x[i] @ x[i]) + float(x[j] @ x[j]) - float(x[i] @ x[j]))
            if lhs > rhs:
                return False
    return True


def unit_points(rng, m, d):
    x = rng.standard_normal((m, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


@pytest.mark.parametrize("m, eps, expected", [(1, 0.999999, 6), (100, 0.3, 411), (50, 0.4, 197), (1, 0.5, 23)])
def test_jl_dimension(m, eps, expected):
    assert jl_dimension(m, eps) == expected
    assert expected == math.ceil(8 * math.log(m + 1) / eps**2 - 1e-9)


def test_jl_dimension_monotone():
    dims = [jl_dimension(m, 0.3) for m in range(1, 200)]
    assert dims == sorted(dims)
    dims = [jl_dimension(40, e) for e in np.linspace(0.05, 0.95, 50)]
    assert dims == sorted(dims, reverse=True)


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.2, 1.5])
def test_jl_dimension_rejects_eps(eps):
    with pytest.raises(ValueError):
        jl_dimension(10, eps)


def test_pointset_validation():
    with pytest.raises(ValueError):
        PointSet(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        PointSet(np.zeros(3))
    assert PointSet(np.ones((2, 4))).norms == pytest.approx([2.0, 2.0])


def test_identity_when_dimension_fits(rng):
    x = rng.standard_normal((20, 30))
    res = jl_project(x, 0.5)
    assert res.identity and res.target_dim == jl_dimension(20, 0.5)
    np.testing.assert_array_equal(res.projected, x)
    assert verify_jl(x, res, 0.5)[0]


def test_zero_points_are_fixed(rng):
    x = np.zeros((5, 400))
    res = jl_project(x, 0.4, rng_seed=1)
    assert not res.identity
    assert not res.projected.any()
    assert verify_jl(x, res, 0.4)[0]


def test_unit_vectors_project_and_verify(rng):
    x = unit_points(rng, 50, 300)
    res = jl_project(x, 0.4, rng_seed=8)
    assert not res.identity
    assert res.projected.shape == (50, 197)
    assert verify_jl(x, res, 0.4)[0]
    assert pairwise_oracle(x, res.projected, 0.4)
    assert res.max_violation_ratio <= 1.0


def test_verify_flags_a_bad_map(rng):
    x = unit_points(rng, 10, 20)
    ok, (i, j, lhs, rhs) = verify_jl(x, 2 * x, 0.5)
    assert not ok and not pairwise_oracle(x, 2 * x, 0.5)
    # the diagonal is the worst pair for a uniform scaling: |1 - 4| vs 0.5
    assert i == j and lhs == pytest.approx(3.0) and rhs == pytest.approx(0.5)


def test_verify_shape_mismatch(rng):
    with pytest.raises(ValueError):
        verify_jl(np.ones((3, 2)), np.ones((4, 2)), 0.5)


def test_seed_determinism(rng):
    x = rng.standard_normal((30, 500))
    a = jl_project(x, 0.5, rng_seed=123)
    b = jl_project(x, 0.5, rng_seed=123)
    np.testing.assert_array_equal(a.projected, b.projected)


def test_chunked_generation_matches_scale(rng):
    # r above one chunk; squared norms are preserved on average
    x = np.eye(3, 50)
    y = gaussian_project(x, 2500, np.random.default_rng(0))
    assert y.shape == (3, 2500)
    np.testing.assert_allclose(np.sum(y**2, axis=1), 1.0, atol=0.1)


def test_retry_exhaustion(rng):
    x = unit_points(rng, 50, 400)
    with pytest.raises(RetryExhaustedError) as info:
        jl_project(x, 0.4, retry_budget=0)
    assert info.value.best is None


def test_map_fails_a_stricter_distortion(rng):
    x = unit_points(rng, 50, 400)
    res = jl_project(x, 0.4, rng_seed=3)
    assert verify_jl(x, res, 0.4)[0]
    assert not verify_jl(x, res, 0.01)[0]


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.integers(1, 400), st.sampled_from([0.3, 0.5, 0.8]), st.integers(0, 2**31))
def test_contract(m, d, eps, seed):
    x = np.random.default_rng(seed).standard_normal((m, d))
    res = jl_project(x, eps, rng_seed=seed)
    assert res.projected.shape == (m, d if res.identity else jl_dimension(m, eps))
    assert pairwise_oracle(x, res.projected, eps)
