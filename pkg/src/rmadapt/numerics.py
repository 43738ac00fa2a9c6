"""Special functions and the random-number contract shared by every module.

Random streams are addressed by ``(seed, stream_id)`` and backed by numpy's
PCG64 seeded through a ``SeedSequence`` spawn key, so a replicate's draws
depend only on its own address and never on how replicates are scheduled.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtri

__all__ = [
    "DecompositionError",
    "RngStream",
    "cholesky",
    "draw_exponential",
    "draw_std_normal",
    "exponential_from_uniform",
    "std_normal_cdf",
    "std_normal_quantile",
]

_SQRT2 = math.sqrt(2.0)


class DecompositionError(ArithmeticError):
    """Raised when a matrix is not numerically positive definite."""


class RngStream:
    """An index-addressable random stream.

    Two streams built from the same ``(seed, stream_id, path)`` produce
    identical draws; different addresses give statistically independent
    streams.  ``child(k)`` derives a sub-stream keyed by ``k`` without
    consuming anything from the parent.
    """

    def __init__(self, seed: int, stream_id: int = 0, path: tuple[int, ...] = ()):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.path = tuple(int(p) for p in path)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def child(self, k: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + (int(k),))

    def fresh(self) -> "RngStream":
        """The same stream rewound to its first draw."""
        return RngStream(self.seed, self.stream_id, self.path)

    def normal(self, size=None):
        return self.generator.standard_normal(size)

    def uniform(self, size=None):
        return self.generator.random(size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, path={self.path})"


def std_normal_cdf(z: float) -> float:
    """Standard normal cdf via ``erfc``; accurate to well below 1e-12 absolute."""
    if math.isnan(z):
        raise ValueError("z must not be NaN")
    return 0.5 * math.erfc(-z / _SQRT2)


def std_normal_quantile(p: float) -> float:
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile requires 0 < p < 1, got {p!r}")
    return float(ndtri(p))


def draw_std_normal(rng: RngStream, size=None):
    return rng.normal(size)


def exponential_from_uniform(u, mean: float = 1.0):
    """Inverse-cdf transform of uniform ``u`` in [0, 1) to an exponential."""
    if mean <= 0:
        raise ValueError("exponential mean must be positive")
    return -mean * np.log1p(-np.asarray(u)) if np.ndim(u) else -mean * math.log1p(-u)


def draw_exponential(rng: RngStream, mean: float = 1.0, size=None):
    if mean <= 0:
        raise ValueError("exponential mean must be positive")
    return exponential_from_uniform(rng.uniform(size), mean)


def cholesky(matrix) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    Raises :class:`DecompositionError` when a pivot is not positive.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError("matrix is not positive definite") from exc
