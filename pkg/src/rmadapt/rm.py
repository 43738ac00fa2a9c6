"""Robbins-Monro search for the proposal scale.

The search nudges ``sigma`` up after an accepted proposal and down after a
rejection, with a steplength constant proportional to the current ``sigma``
and a ``1/i`` (or slowed ``1/max(200, i/m)``) schedule.  Poor starting
values are handled by restarting when ``sigma`` moves by a factor of 3.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

from .numerics import std_normal_quantile

__all__ = [
    "RmConfig",
    "RmSearchState",
    "alpha",
    "efficiency",
    "init_state",
    "interpolated_ratio",
    "n0",
    "restart_check",
    "rm_step",
    "steplength",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def n0(p_star: float) -> int:
    """Starting step index: the integer closest to 5 / (p*(1-p*))."""
    if not 0.0 < p_star < 1.0:
        raise ValueError("p_star must lie in (0, 1)")
    return max(1, int(math.floor(5.0 / (p_star * (1.0 - p_star)) + 0.5)))


def alpha(p_star: float) -> float:
    """``-Phi^{-1}(p*/2)``."""
    if not 0.0 < p_star < 1.0:
        raise ValueError("p_star must lie in (0, 1)")
    return -std_normal_quantile(0.5 * p_star)


def interpolated_ratio(p_star: float, m_star: float) -> float:
    """Approximate optimal ``c/sigma`` for target acceptance ``p_star``.

    Linear in ``1/m_star`` between the univariate value ``1/(p*(1-p*))`` at
    ``m_star = 1`` and the infinite-dimensional limit
    ``sqrt(2 pi) exp(a^2/2) / (2a)`` with ``a = alpha(p_star)``.
    """
    if m_star < 1:
        raise ValueError("m_star must be >= 1")
    a = alpha(p_star)
    limit = _SQRT_2PI * math.exp(0.5 * a * a) / (2.0 * a)
    return (1.0 - 1.0 / m_star) * limit + 1.0 / (m_star * p_star * (1.0 - p_star))


def efficiency(c: float, c_star: float) -> float:
    """Asymptotic variance ratio of a search run with steplength ``c``."""
    if c <= 0.5 * c_star:
        raise ValueError("efficiency is defined only for c > c*/2")
    # (2c - c*) c* / c^2 written as r (2 - r), r = c*/c; exact at c = 2c*
    r = c_star / c
    return r * (2.0 - r)


@dataclass(frozen=True)
class RmConfig:
    p_star: float = 0.44
    m_star: float = 1
    n0_override: int | None = None
    schedule: str = "standard"  # or "slowed"
    dim: int = 1
    restart_factor: float = 3.0
    max_restarts_per_direction: int = 5
    no_restart_after_steps: int = 100
    # derived, filled in __post_init__
    ratio: float = field(init=False, repr=False, compare=False)
    start_index: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 < self.p_star < 1.0:
            raise ValueError("p_star must lie in (0, 1)")
        if self.m_star < 1:
            raise ValueError("m_star must be >= 1")
        if self.restart_factor <= 1.0:
            raise ValueError("restart_factor must exceed 1")
        if self.schedule not in ("standard", "slowed"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        object.__setattr__(self, "ratio", interpolated_ratio(self.p_star, self.m_star))
        start = self.n0_override if self.n0_override is not None else n0(self.p_star)
        if start < 1:
            raise ValueError("n0 must be >= 1")
        object.__setattr__(self, "start_index", int(start))


@dataclass
class RmSearchState:
    sigma: float
    i: int
    sigma_at_restart: float
    steps_since_restart: int = 0
    restarts_up: int = 0
    restarts_down: int = 0
    restarts_frozen: bool = False
    # +1 / -1 when the most recent step triggered a restart, else 0
    last_restart: int = 0

    def copy(self) -> "RmSearchState":
        return copy.copy(self)


def init_state(sigma1: float, cfg: RmConfig) -> RmSearchState:
    if not sigma1 > 0:
        raise ValueError("initial sigma must be positive")
    return RmSearchState(sigma=float(sigma1), i=cfg.start_index, sigma_at_restart=float(sigma1))


def steplength(sigma: float, cfg: RmConfig) -> float:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return sigma * cfg.ratio


def _denominator(i: int, cfg: RmConfig) -> float:
    if cfg.schedule == "slowed" and i > 200:
        return max(200.0, i / cfg.dim)
    return float(i)


def _restart_inplace(s: RmSearchState, cfg: RmConfig) -> None:
    s.last_restart = 0
    if s.restarts_frozen or s.steps_since_restart > cfg.no_restart_after_steps:
        return
    ratio = s.sigma / s.sigma_at_restart
    cap = cfg.max_restarts_per_direction
    if ratio >= cfg.restart_factor and s.restarts_up < cap:
        s.restarts_up += 1
        s.last_restart = 1
    elif ratio <= 1.0 / cfg.restart_factor and s.restarts_down < cap:
        s.restarts_down += 1
        s.last_restart = -1
    else:
        return
    s.i = cfg.start_index
    s.sigma_at_restart = s.sigma
    s.steps_since_restart = 0
    if s.restarts_up >= cap and s.restarts_down >= cap:
        s.restarts_frozen = True


def _step_inplace(s: RmSearchState, accepted: bool, cfg: RmConfig) -> None:
    c = s.sigma * cfg.ratio
    d = _denominator(s.i, cfg)
    if accepted:
        new = s.sigma + c * (1.0 - cfg.p_star) / d
    else:
        new = s.sigma - c * cfg.p_star / d
    s.sigma = new if new > 0.0 else 0.5 * s.sigma
    s.i += 1
    s.steps_since_restart += 1
    _restart_inplace(s, cfg)


def rm_step(state: RmSearchState, accepted: bool, cfg: RmConfig, *, inplace: bool = False) -> RmSearchState:
    """One Robbins-Monro update followed by the restart rule.

    Returns a new state unless ``inplace`` is set, in which case ``state`` is
    updated and returned.
    """
    s = state if inplace else state.copy()
    _step_inplace(s, bool(accepted), cfg)
    return s


def restart_check(state: RmSearchState, cfg: RmConfig) -> RmSearchState:
    s = state.copy()
    _restart_inplace(s, cfg)
    return s
