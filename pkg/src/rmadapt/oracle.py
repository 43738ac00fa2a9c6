"""Monte Carlo evaluation of the overall acceptance probability and its slope.

``p(sigma)`` is the expectation of ``min(f(y)/f(x), 1)`` with ``x`` drawn
exactly from the target and ``y ~ N(x, sigma^2 A)``.  Writing
``y = x + sigma L z`` with ``L L' = A`` makes the derivative of the proposal
density with respect to ``sigma`` equal to ``g * (z'z - m) / sigma``, so

    dp/dsigma = E[w (z'z - m)] / sigma = -m p / sigma + phi,
    phi       = E[w z'z] / sigma >= 0.

All estimators draw ``(x, z)`` afresh from ``rng`` in fixed shards, so
repeated calls with the same stream see common random numbers and the
estimates are smooth, deterministic functions of ``sigma``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dists import TargetModel
from .numerics import RngStream, cholesky, std_normal_cdf
from .rm import alpha

__all__ = [
    "BracketError",
    "CrnSample",
    "CurvePoint",
    "IdentityCheck",
    "OracleEstimate",
    "estimate_dp_dsigma",
    "estimate_p",
    "closed_form_ratio",
    "ratio_curve",
    "solve_sigma_star",
    "verify_halfspace_identity",
]

SHARD = 200_000


class BracketError(ValueError):
    """The acceptance estimate does not straddle the target on the search interval."""


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    std_error: float
    n_samples: int


@dataclass(frozen=True)
class CurvePoint:
    p_star: float
    ratio: float
    sigma_star: float
    se_ratio: float = float("nan")
    n: int = 0


class CrnSample:
    """Fixed draws ``x ~ f`` and ``z ~ N(0, I)`` reused across every ``sigma``."""

    def __init__(self, target: TargetModel, A, n: int, rng: RngStream):
        if target.sampler is None:
            raise ValueError(f"target {target.name!r} has no exact sampler")
        if n < 1:
            raise ValueError("n must be >= 1")
        m = target.dim
        A = np.eye(m) if A is None else np.atleast_2d(np.asarray(A, dtype=float))
        L = cholesky(A)
        self.target, self.n, self.m = target, int(n), m
        self.shards = []
        for k, start in enumerate(range(0, n, SHARD)):
            size = min(SHARD, n - start)
            sub = rng.child(k)
            x = target.sample(sub, size)
            z = sub.normal((size, m))
            self.shards.append((x, z @ L.T, np.sum(z * z, axis=1), target.log_density(x)))

    def weights(self, sigma: float) -> list:
        out = []
        for x, step, zz, lx in self.shards:
            with np.errstate(invalid="ignore", over="ignore"):
                d = self.target.log_density(x + sigma * step) - lx
                out.append(np.exp(np.minimum(d, 0.0)))
        return out

    def p(self, sigma: float) -> OracleEstimate:
        w = np.concatenate(self.weights(sigma))
        return _mean_se(w)

    def dp(self, sigma: float) -> tuple[OracleEstimate, OracleEstimate]:
        """``(dp/dsigma, phi)`` at ``sigma``."""
        w = self.weights(sigma)
        zz = np.concatenate([s[2] for s in self.shards])
        w = np.concatenate(w)
        return _mean_se(w * (zz - self.m) / sigma), _mean_se(w * zz / sigma)


def _mean_se(v: np.ndarray) -> OracleEstimate:
    n = len(v)
    se = float(np.std(v, ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return OracleEstimate(float(np.mean(v)), se, n)


def estimate_p(target: TargetModel, sigma: float, A, n: int, rng: RngStream) -> OracleEstimate:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return CrnSample(target, A, n, rng).p(sigma)


def estimate_dp_dsigma(target: TargetModel, sigma: float, A, n: int, rng: RngStream) -> OracleEstimate:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return CrnSample(target, A, n, rng).dp(sigma)[0]


def estimate_phi(target: TargetModel, sigma: float, A, n: int, rng: RngStream) -> OracleEstimate:
    return CrnSample(target, A, n, rng).dp(sigma)[1]


def solve_sigma_star(
    target: TargetModel,
    p_star: float,
    A,
    n: int,
    rng: RngStream,
    *,
    bracket: tuple[float, float] | None = None,
    rtol: float = 1e-7,
    sample: CrnSample | None = None,
) -> float:
    """Bisection for ``p(sigma) = p_star`` on common random numbers.

    The default bracket is ``[1e-3, 100]`` times the target's largest
    marginal sd (1 when the variance is infinite).
    """
    if not 0.0 < p_star < 1.0:
        raise ValueError("p_star must lie in (0, 1)")
    crn = sample if sample is not None else CrnSample(target, A, n, rng)
    if bracket is None:
        h = target.scale_hint()
        bracket = (1e-3 * h, 100.0 * h)
    lo, hi = bracket
    p_lo, p_hi = crn.p(lo).value, crn.p(hi).value
    if not p_lo > p_star > p_hi:
        raise BracketError(
            f"p({lo:.4g})={p_lo:.4f}, p({hi:.4g})={p_hi:.4f} do not straddle {p_star}")
    # Bisect in log(sigma): the bracket spans five decades.
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if crn.p(mid).value > p_star:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def ratio_curve(
    target: TargetModel,
    p_star_grid,
    A,
    n: int,
    rng: RngStream,
) -> list[CurvePoint]:
    """Monte Carlo ``c*/sigma* = -1 / (sigma* p'(sigma*))`` along a grid of targets."""
    crn = CrnSample(target, A, n, rng)
    out = []
    for p in p_star_grid:
        if not 0.05 <= p <= 0.95:
            raise ValueError("p_star grid must lie within [0.05, 0.95]")
        s = solve_sigma_star(target, p, A, n, rng, sample=crn)
        dp, _ = crn.dp(s)
        ratio = -1.0 / (s * dp.value)
        se = ratio * ratio * s * dp.std_error
        out.append(CurvePoint(p_star=float(p), ratio=ratio, sigma_star=s, se_ratio=se, n=n))
    return out


def closed_form_ratio(p_star: float) -> float:
    """Closed-form ``c*/sigma*`` when ``p(sigma) = 2 Phi(-beta sigma)``."""
    a = alpha(p_star)
    return math.sqrt(2.0 * math.pi) * math.exp(0.5 * a * a) / (2.0 * a)


def closed_form_p(sigma: float, beta: float = 1.0) -> float:
    return 2.0 * std_normal_cdf(-beta * sigma)


@dataclass(frozen=True)
class IdentityCheck:
    lhs: float
    rhs: float
    se_lhs: float
    se_rhs: float
    se_diff: float
    z_score: float
    passed: bool


def verify_halfspace_identity(lam, x, A, sigma: float, n: int, rng: RngStream, n_se: float = 4.0) -> IdentityCheck:
    """Check the half-space identity for the Gaussian proposal by Monte Carlo.

    Over ``R = {y : lam'(y - x) <= 0}``,
    ``int_R lam'(y-x) dg/dsigma dy = (1/sigma) int_R lam'(y-x) g dy``.
    With ``y = x + sigma L z`` the integrands become ``1_R (lam'Lz)(z'z - m)``
    and ``1_R (lam'Lz)``; both sides share draws, so agreement is judged on
    the paired difference.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if not np.any(lam):
        raise ValueError("lambda must be nonzero")
    m = len(lam)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    L = cholesky(A)
    g = rng.fresh().generator
    lhs_parts, rhs_parts = [], []
    for start in range(0, n, SHARD):
        size = min(SHARD, n - start)
        z = g.standard_normal((size, m))
        proj = (z @ L.T) @ lam  # lam'(y - x) / sigma
        inside = proj <= 0.0
        rhs_parts.append(np.where(inside, proj, 0.0))
        lhs_parts.append(np.where(inside, proj * (np.sum(z * z, axis=1) - m), 0.0))
    # lam'(y-x) = sigma * proj; the sigma factors cancel against 1/sigma on both sides.
    lhs_v, rhs_v = np.concatenate(lhs_parts), np.concatenate(rhs_parts)
    lhs, rhs, diff = _mean_se(lhs_v), _mean_se(rhs_v), _mean_se(lhs_v - rhs_v)
    zs = abs(diff.value) / diff.std_error if diff.std_error > 0 else 0.0
    return IdentityCheck(lhs.value, rhs.value, lhs.std_error, rhs.std_error, diff.std_error,
                      zs, zs <= n_se)
