import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from rapflow.errors import EigenZeroViolation, SylvesterSingularError
from rapflow.linalg import (
    SylvesterOperator,
    expm,
    expm_batch,
    left_null_vector,
    spectral_abscissa,
    sylvester_solve,
)
from reference_models import random_stable

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_expm_zero_time_is_identity(rng):
    A = rng.normal(size=(3, 3))
    assert np.array_equal(expm(A, 0.0), np.eye(3))


def test_expm_diagonal():
    E = expm(np.diag([-1.0, -2.0]), 1.0)
    assert np.allclose(E, np.diag([np.exp(-1), np.exp(-2)]), rtol=1e-14, atol=0)


def test_expm_semigroup_doubling(rng):
    A = random_stable(rng, 4)
    t = 0.7
    assert np.max(np.abs(expm(A, 2 * t) - expm(A, t) @ expm(A, t))) <= 1e-10


def test_expm_rejects_bad_input():
    with pytest.raises(ValueError):
        expm(np.ones((2, 3)))
    with pytest.raises(ValueError):
        expm(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        expm(np.eye(2), -1.0)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 6),
       t=st.floats(0, 5), s=st.floats(0, 5))
def test_expm_semigroup_property(seed, n, t, s):
    A = random_stable(np.random.default_rng(seed), n)
    lhs = expm(A, t) @ expm(A, s)
    assert np.max(np.abs(lhs - expm(A, t + s))) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=seeds, n=st.integers(2, 6))
def test_expm_batch_matches_scipy(seed, n):
    r = np.random.default_rng(seed)
    A = random_stable(r, n)
    ts = np.concatenate([[0.0], r.uniform(0, 30, size=5)])
    B = expm_batch(A, ts)
    for t, E in zip(ts, B):
        ref = scipy.linalg.expm(A * t)
        assert np.max(np.abs(E - ref)) <= 1e-11 * max(1.0, np.max(np.abs(ref)))


def test_sylvester_scalar_examples():
    assert sylvester_solve([[-1.0]], [[-1.0]], [[-1.0]])[0, 0] == pytest.approx(0.5, abs=1e-15)
    assert sylvester_solve([[-2.0]], [[-1.0]], [[-2.0]])[0, 0] == pytest.approx(2 / 3, abs=1e-15)


def test_sylvester_matches_scipy(rng):
    A, B = random_stable(rng, 3), random_stable(rng, 2)
    Q = rng.normal(size=(3, 2))
    X = sylvester_solve(A, B, Q)
    assert np.allclose(X, scipy.linalg.solve_sylvester(A, B, Q), atol=1e-12)


def test_sylvester_singular():
    with pytest.raises(SylvesterSingularError):
        sylvester_solve([[1.0]], [[-1.0]], [[1.0]])


def test_sylvester_operator_reuse(rng):
    A, B = random_stable(rng, 4), random_stable(rng, 3)
    op = SylvesterOperator(A, B)
    for _ in range(3):
        Q = rng.normal(size=(4, 3))
        X = op.solve(Q)
        assert np.max(np.abs(A @ X + X @ B - Q)) <= 1e-10 * max(1, np.abs(Q).sum(1).max())
        assert np.allclose(op.apply(X), Q, atol=1e-10)


def test_sylvester_residual_many_instances():
    r = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        m, n = r.integers(1, 9, size=2)
        A, B = random_stable(r, m), random_stable(r, n)
        Q = r.normal(size=(m, n))
        X = sylvester_solve(A, B, Q)
        res = np.abs(A @ X + X @ B - Q).sum(axis=1).max()
        worst = max(worst, res / max(1.0, np.abs(Q).sum(axis=1).max()))
    assert worst <= 1e-10


@pytest.mark.parametrize("A, expected", [
    (np.diag([-1.0, -3.0]), -1.0),
    (np.array([[0.0, 1.0], [-1.0, 0.0]]), 0.0),
    (np.array([[-2.0, 2.0], [1.0, -1.0]]), 0.0),
])
def test_spectral_abscissa(A, expected):
    assert spectral_abscissa(A) == pytest.approx(expected, abs=1e-9)


def test_left_null_vector_examples():
    assert np.allclose(left_null_vector(np.array([[0.0]]), 1e-9), [1.0])
    v = left_null_vector(np.array([[-1.0, 1.0], [2.0, -2.0]]), 1e-9)
    assert np.allclose(v, [2 / 3, 1 / 3], atol=1e-14)


def test_left_null_vector_requires_zero():
    with pytest.raises(EigenZeroViolation):
        left_null_vector(np.diag([-1.0, -2.0]), 1e-9)


def test_left_null_vector_rejects_double_zero():
    with pytest.raises(EigenZeroViolation):
        left_null_vector(np.zeros((2, 2)), 1e-9)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 7))
def test_left_null_vector_property(seed, n):
    from reference_models import random_generator
    M = random_generator(np.random.default_rng(seed), n) if n > 1 else np.zeros((1, 1))
    tol = 1e-9
    v = left_null_vector(M, tol)
    assert np.max(np.abs(v @ M)) <= tol * max(1.0, np.abs(M).sum(axis=1).max())
    assert v.sum() == pytest.approx(1.0, abs=1e-14)
