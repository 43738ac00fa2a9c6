import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmadapt.adaptcov import CovarianceTracker, batch_covariance, regularized_A
from rmadapt.numerics import RngStream, cholesky


def printed_recursion(xs):
    """Mean/covariance recursion exactly as usually written, for comparison."""
    xs = np.asarray(xs, float)
    mean = xs[0].copy()
    S = np.zeros((xs.shape[1],) * 2)
    for i in range(2, len(xs) + 1):
        x = xs[i - 1]
        prev = mean
        mean = ((i - 1) * prev + x) / i
        S = ((i - 2) / (i - 1)) * S + np.outer(prev, prev) - (i / (i - 1)) * np.outer(mean, mean) \
            + np.outer(x, x) / (i - 1)
    return mean, S


def test_two_points():
    tr = CovarianceTracker(1, warmup_threshold=1)
    tr.update([0.0]).update([2.0])
    assert tr.mean[0] == 1.0
    assert tr.cov[0, 0] == 2.0


def test_warmup_identity():
    tr = CovarianceTracker(3)
    xs = RngStream(1).normal((100, 3)) * 5
    for x in xs:
        tr.update(x)
    np.testing.assert_array_equal(tr.cov, np.eye(3))
    assert tr.in_warmup
    np.testing.assert_allclose(tr.mean, xs.mean(axis=0), rtol=1e-12)
    tr.update(xs[0])
    assert not tr.in_warmup
    np.testing.assert_allclose(tr.cov, batch_covariance(np.vstack([xs, xs[:1]])), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10), st.integers(2, 1000), st.integers(0, 2**31), st.floats(0.01, 100))
def test_recursion_matches_batch(m, n, seed, scale):
    xs = RngStream(seed).normal((n, m)) * scale + 3.0
    tr = CovarianceTracker(m, warmup_threshold=0)
    checkpoints = {2, n // 2, n}
    for k, x in enumerate(xs, start=1):
        tr.update(x)
        if k in checkpoints and k >= 2:
            ref = batch_covariance(xs[:k])
            assert np.max(np.abs(tr.cov - ref)) <= 1e-10 * max(1.0, np.max(np.abs(ref)))
    np.testing.assert_array_equal(tr.cov, tr.cov.T)


def test_printed_recursion_agrees():
    xs = RngStream(4).normal((500, 4)) @ np.diag([1, 2, 3, 4]) + 1.0
    tr = CovarianceTracker(4, warmup_threshold=0)
    for x in xs:
        tr.update(x)
    mean, S = printed_recursion(xs)
    np.testing.assert_allclose(tr.mean, mean, atol=1e-12)
    np.testing.assert_allclose(tr.cov, S, atol=1e-10)


def test_repeated_states_enter_the_estimate():
    tr = CovarianceTracker(1, warmup_threshold=0)
    for v in (0.0, 0.0, 0.0, 4.0):
        tr.update([v])
    assert tr.cov[0, 0] == pytest.approx(batch_covariance([[0], [0], [0], [4]])[0, 0])


def test_regularized_examples():
    tr = CovarianceTracker(2, warmup_threshold=0)
    for _ in range(4):
        tr.update([1.0, 1.0])
    np.testing.assert_allclose(regularized_A(tr, 1.0, 4), 0.25 * np.eye(2))
    warm = CovarianceTracker(2)
    warm.update([0.0, 0.0])
    np.testing.assert_allclose(regularized_A(warm, 2.0, 100), 1.04 * np.eye(2))
    with pytest.raises(ValueError):
        regularized_A(warm, 0.0, 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31), st.floats(1e-3, 10), st.integers(1, 10**5))
def test_ridge_lower_bound(m, seed, sigma, i):
    xs = RngStream(seed).normal((max(3, m // 2), m))  # often rank deficient
    tr = CovarianceTracker(m, warmup_threshold=0)
    for x in xs:
        tr.update(x)
    A = regularized_A(tr, sigma, i)
    assert np.linalg.eigvalsh(A).min() >= sigma ** 2 / i * (1 - 1e-9)
    cholesky(A)


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        CovarianceTracker(2).update([np.nan, 0.0])
