"""Running mean and covariance of chain states for the adaptive proposal."""
from __future__ import annotations

import numpy as np

__all__ = ["CovarianceTracker", "batch_covariance", "cov_update", "regularized_A"]


class CovarianceTracker:
    """Running sample mean and covariance with O(m^2) updates.

    ``cov`` is pinned to the identity while ``count <= warmup_threshold``;
    afterwards it is the unbiased sample covariance of every state seen so
    far (repeats from rejected proposals included).  The underlying sample
    covariance is tracked from the first state so the switch-over is exact.
    """

    def __init__(self, dim: int, warmup_threshold: int = 100):
        self.dim = int(dim)
        self.warmup_threshold = int(warmup_threshold)
        self.count = 0
        self.mean = np.zeros(self.dim)
        self._scov = np.zeros((self.dim, self.dim))

    def update(self, x) -> "CovarianceTracker":
        x = np.asarray(x, dtype=float).reshape(self.dim)
        if not np.all(np.isfinite(x)):
            raise ValueError("state must be finite")
        self.count += 1
        i = self.count
        delta = x - self.mean
        self.mean = self.mean + delta / i
        if i >= 2:
            # Same quantity as ((i-2)/(i-1)) S + xbar_{i-1} xbar_{i-1}' - i/(i-1) xbar_i xbar_i'
            # + x x'/(i-1), written in the cancellation-free form.
            s = self._scov
            s *= (i - 2) / (i - 1)
            s += np.outer(delta, delta) / i
            self._scov = 0.5 * (s + s.T)
        return self

    @property
    def sample_covariance(self) -> np.ndarray:
        return self._scov.copy()

    @property
    def cov(self) -> np.ndarray:
        if self.count <= self.warmup_threshold:
            return np.eye(self.dim)
        return self._scov.copy()

    @property
    def in_warmup(self) -> bool:
        return self.count <= self.warmup_threshold


def cov_update(tracker: CovarianceTracker, x) -> CovarianceTracker:
    return tracker.update(x)


def regularized_A(tracker: CovarianceTracker, sigma: float, i: int) -> np.ndarray:
    """``cov + (sigma^2 / i) I``: positive definite for any PSD ``cov``."""
    if sigma <= 0 or i < 1:
        raise ValueError("need sigma > 0 and i >= 1")
    A = tracker.cov
    A[np.diag_indices(tracker.dim)] += sigma * sigma / i
    return A


def batch_covariance(xs) -> np.ndarray:
    """Direct ``1/(n-1) sum (x_j - xbar)(x_j - xbar)'``; reference for tests."""
    xs = np.asarray(xs, dtype=float)
    d = xs - xs.mean(axis=0)
    return d.T @ d / (len(xs) - 1)
