import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fixpoint.errors import NonSquare, UsageError
from fixpoint.numkernel import (
    inner,
    least_squares_min_norm,
    null_space_basis,
    spectral_norm,
)

ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])
finite = st.floats(-1e3, 1e3, allow_nan=False)


@pytest.mark.parametrize(
    "u, v, expected",
    [((1, 0), (0, 1), 0.0), ((1, 1), (1, 1), 2.0), ((1, 2), (3, 4), 11.0)],
)
def test_inner_examples(u, v, expected):
    assert inner(u, v) == expected


def test_inner_dimension_mismatch():
    with pytest.raises(UsageError):
        inner([1, 2], [1, 2, 3])


def test_inner_rejects_nonfinite():
    with pytest.raises(UsageError):
        inner([1, np.nan], [1, 2])


@given(arrays(float, 5, elements=finite), arrays(float, 5, elements=finite))
def test_cauchy_schwarz_and_symmetry(u, v):
    assert abs(inner(u, v)) <= np.linalg.norm(u) * np.linalg.norm(v) * (1 + 1e-12) + 1e-12
    assert inner(u, v) == inner(v, u)


@pytest.mark.parametrize(
    "M, expected", [(np.eye(2), 1.0), (np.diag([0.7, 0.2]), 0.7), (ROT90, 1.0)]
)
def test_spectral_norm_examples(M, expected):
    assert spectral_norm(M) == pytest.approx(expected, rel=1e-12)


def test_spectral_norm_against_sampling(rng):
    for _ in range(20):
        d = rng.integers(2, 11)
        M = rng.standard_normal((d, d))
        X = rng.standard_normal((1000, d))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        sampled = np.linalg.norm(X @ M.T, axis=1)
        s = spectral_norm(M)
        assert np.all(sampled <= s + 1e-8)
        # 1000 samples in d <= 10 get within 1% only for small d; compare loosely in general
        if d <= 3:
            assert sampled.max() >= 0.99 * s


def test_spectral_norm_rectangular():
    assert spectral_norm(np.array([[3.0, 0.0, 0.0], [0.0, 4.0, 0.0]])) == pytest.approx(4.0)


def test_null_space_examples():
    B = null_space_basis(np.diag([0.0, 0.5]))
    assert len(B) == 1
    np.testing.assert_allclose(np.abs(B.vectors[0]), [1.0, 0.0], atol=1e-15)

    assert null_space_basis(np.eye(2) - np.diag([0.7, 0.2])).is_empty

    B = null_space_basis(np.eye(2) - np.full((2, 2), 0.5))
    assert len(B) == 1
    np.testing.assert_allclose(np.abs(B.vectors[0]), [2**-0.5, 2**-0.5], atol=1e-14)


def test_null_space_requires_square():
    with pytest.raises(NonSquare):
        null_space_basis(np.ones((2, 3)))


def test_null_space_invariants(rng):
    tau = 1e-10
    for _ in range(30):
        d = rng.integers(2, 8)
        k = rng.integers(0, d)
        A = rng.standard_normal((d, d - k)) @ rng.standard_normal((d - k, d))
        B = null_space_basis(A, tau)
        assert len(B) == k
        G = B.vectors @ B.vectors.T
        np.testing.assert_allclose(G, np.eye(k), atol=1e-10)
        nM = np.linalg.norm(A, 2)
        for v in B.vectors:
            assert np.linalg.norm(A @ v) <= 10 * tau * (1 + nM)
        # vectors orthogonal to the kernel are not annihilated
        W = rng.standard_normal((100, d))
        W -= W @ B.vectors.T @ B.vectors
        assert np.all(np.linalg.norm(W @ A.T, axis=1) > tau * np.linalg.norm(W, axis=1))


def test_complement_basis(rng):
    B = null_space_basis(np.diag([0.0, 0.0, 1.0]))
    C = B.complement()
    assert len(C) == 1
    np.testing.assert_allclose(np.abs(C.vectors[0]), [0, 0, 1], atol=1e-15)
    assert len(B.complement().complement()) == 2


@pytest.mark.parametrize(
    "M, b, sol, res",
    [
        (np.diag([0.5, 0.5]), [1, 0], [2, 0], 0.0),
        (np.diag([0.0, 0.5]), [1, 0], [0, 0], 1.0),
        (np.diag([0.0, 0.5]), [0, 1], [0, 2], 0.0),
    ],
)
def test_least_squares_examples(M, b, sol, res):
    x, r = least_squares_min_norm(M, b)
    np.testing.assert_allclose(x, sol, atol=1e-14)
    assert r == pytest.approx(res, abs=1e-14)


def test_least_squares_beats_perturbations(rng):
    for _ in range(10):
        M = rng.standard_normal((4, 3))
        b = rng.standard_normal(4)
        x, r = least_squares_min_norm(M, b)
        for _ in range(100):
            y = x + 1e-3 * rng.standard_normal(3)
            assert r <= np.linalg.norm(M @ y - b) + 1e-15


def test_least_squares_deterministic(rng):
    M = rng.standard_normal((3, 3))
    b = rng.standard_normal(3)
    a1, r1 = least_squares_min_norm(M, b)
    a2, r2 = least_squares_min_norm(M, b)
    assert np.array_equal(a1, a2) and r1 == r2


@settings(max_examples=30)
@given(arrays(float, (3, 3), elements=st.floats(-10, 10)))
def test_least_squares_minimum_norm_property(M):
    b = np.ones(3)
    x, _ = least_squares_min_norm(M, b)
    # minimum norm: no component along the numerical kernel
    K = null_space_basis(M, 1e-10)
    if not K.is_empty:
        assert np.linalg.norm(K.vectors @ x) <= 1e-6 * (1 + np.linalg.norm(x))
