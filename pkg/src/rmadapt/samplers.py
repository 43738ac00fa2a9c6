"""Random-walk Metropolis samplers with Robbins-Monro scale tuning.

Every sampler treats one proposal as one Robbins-Monro trial: propose,
accept or reject, then update ``sigma``.  Random numbers for a chain are
drawn in blocks up front (initial state, then normals, then uniforms) so a
trace depends only on the stream it was given.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .adaptcov import CovarianceTracker, regularized_A
from .dists import TargetModel
from .numerics import RngStream, cholesky, draw_exponential
from .rm import RmConfig, _step_inplace, init_state

__all__ = [
    "Block",
    "ChainTrace",
    "GibbsBlockSpec",
    "METHODS",
    "OPTIMAL_SCALE",
    "initial_state",
    "mh_accept",
    "run_multivariate",
    "run_mwg",
    "run_univariate_tuned",
]

OPTIMAL_SCALE = 2.38
METHODS = ("rm-adaptive", "optimal-fixed", "fixed-scaling")


@dataclass
class ChainTrace:
    states: np.ndarray  # (T, m), state after each iteration
    accepted: np.ndarray  # (T,) bool
    sigma_path: np.ndarray  # (T,), scale used for the iteration's proposal
    x0: np.ndarray
    final_sigma: float
    restart_events: list = field(default_factory=list)  # (step, +1 | -1)
    meta: dict = field(default_factory=dict)
    # Metropolis-within-Gibbs only: one column per tuned block
    block_accepted: Optional[np.ndarray] = None
    block_sigma: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.accepted)

    @property
    def dim(self) -> int:
        return len(self.x0)


def _accept(delta: float, u: float) -> bool:
    # u is uniform on [0, 1); delta = -inf always rejects.
    return delta >= 0.0 or u < math.exp(delta)


def mh_accept(logf_current: float, logf_proposal: float, rng: RngStream) -> bool:
    """Metropolis acceptance for a symmetric proposal."""
    if logf_current == -math.inf:
        raise ValueError("current state lies outside the support")
    return _accept(logf_proposal - logf_current, float(rng.uniform()))


def initial_state(target: TargetModel, rng: RngStream, use_sampler: bool = True) -> np.ndarray:
    """Exact draw when possible, otherwise the origin moved into the support.

    A target may also name its own starting point in ``meta["initial_state"]``.
    """
    if "initial_state" in target.meta:
        return np.array(target.meta["initial_state"], dtype=float)
    if use_sampler and target.sampler is not None:
        return np.asarray(target.sample(rng, 1), dtype=float).reshape(target.dim)
    x = np.zeros(target.dim)
    if target.lower is not None and target.upper is not None:
        x = 0.5 * (target.lower + target.upper)
    elif target.lower is not None:
        x = target.lower + 1.0
    return np.asarray(x, dtype=float)


def run_univariate_tuned(
    target: TargetModel,
    iters: int,
    sigma1: float | None,
    p_star: float,
    rng: RngStream,
    *,
    n0_override: int | None = None,
    x0: float | None = None,
) -> ChainTrace:
    """Scalar random-walk sampler whose scale follows a Robbins-Monro search.

    ``sigma1=None`` draws the starting scale from Exp(1) before anything else.
    """
    if target.dim != 1:
        raise ValueError("run_univariate_tuned needs a one-dimensional target")
    if iters < 0:
        raise ValueError("iters must be >= 0")
    if sigma1 is None:
        sigma1 = float(draw_exponential(rng, 1.0))
    cfg = RmConfig(p_star=p_star, m_star=1, n0_override=n0_override)
    st = init_state(sigma1, cfg)
    start = float(initial_state(target, rng)[0]) if x0 is None else float(x0)
    z = rng.normal(iters)
    u = rng.uniform(iters)
    if target.log_density_1d is not None:
        f = target.log_density_1d
    else:
        f = lambda v: float(target.log_density(np.array([v])))  # noqa: E731
    x = start
    lx = f(x)
    if lx == -math.inf:
        raise ValueError("initial state lies outside the support")

    xs = np.empty(iters)
    acc = np.empty(iters, dtype=bool)
    sig = np.empty(iters)
    events = []
    for t in range(iters):
        s = st.sigma
        y = x + s * z[t]
        ly = f(y)
        ok = _accept(ly - lx, u[t])
        if ok:
            x, lx = y, ly
        xs[t] = x
        acc[t] = ok
        sig[t] = s
        _step_inplace(st, ok, cfg)
        if st.last_restart:
            events.append((t, st.last_restart))
    return ChainTrace(
        states=xs.reshape(iters, 1), accepted=acc, sigma_path=sig, x0=np.array([start]),
        final_sigma=st.sigma, restart_events=events,
        meta={"sampler": "univariate-tuned", "target": target.name, "p_star": p_star,
              "sigma1": float(sigma1), "n0": cfg.start_index, "iters": iters},
    )


def run_multivariate(
    target: TargetModel,
    method: str,
    iters: int,
    p_star: float,
    m_star: float | None,
    rng: RngStream,
    *,
    sigma1: float = 1.0,
    n0_override: int | None = None,
    x0=None,
    warmup_threshold: int = 100,
    refactor_every: int = 1,
    freeze_after: int | None = None,
) -> ChainTrace:
    """Joint random-walk sampler on a multivariate target.

    ``method`` selects the proposal covariance:

    * ``rm-adaptive``: ``sigma_i^2 A_i`` with ``sigma_i`` from a slowed
      Robbins-Monro search and ``A_i`` the ridge-regularized running covariance;
    * ``optimal-fixed``: ``2.38^2 Sigma / m`` using the target's true covariance;
    * ``fixed-scaling``: ``2.38^2 A_i / m``, adaptive shape but fixed scale.

    ``refactor_every=k`` recomputes the Cholesky factor of ``A_i`` only every
    ``k`` iterations, which is cheaper for large ``m`` but lags the shape
    estimate.  ``freeze_after`` stops all adaptation after that many
    iterations.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    m = target.dim
    if m_star is None:
        m_star = m
    if method == "optimal-fixed" and target.covariance is None:
        raise ValueError("optimal-fixed needs a target with a known covariance")
    if iters < 0:
        raise ValueError("iters must be >= 0")

    fixed_scale = OPTIMAL_SCALE / math.sqrt(m)
    cfg = RmConfig(p_star=p_star, m_star=m_star, n0_override=n0_override,
                   schedule="slowed", dim=m)
    st = init_state(sigma1 if method == "rm-adaptive" else fixed_scale, cfg)

    x = initial_state(target, rng) if x0 is None else np.asarray(x0, dtype=float).copy()
    start = x.copy()
    z = rng.normal((iters, m))
    u = rng.uniform(iters)
    lx = float(target.log_density(x))
    if lx == -math.inf:
        raise ValueError("initial state lies outside the support")

    tracker = CovarianceTracker(m, warmup_threshold)
    tracker.update(x)
    L = cholesky(target.covariance) if method == "optimal-fixed" else None
    since_factor = refactor_every

    xs = np.empty((iters, m))
    acc = np.empty(iters, dtype=bool)
    sig = np.empty(iters)
    events = []
    adapting = True
    for t in range(iters):
        if freeze_after is not None and t >= freeze_after:
            adapting = False
        s = st.sigma
        if method != "optimal-fixed" and (adapting or L is None):
            if tracker.in_warmup:
                # A = (1 + s^2/i) I during warmup
                L = math.sqrt(1.0 + s * s / tracker.count)
                since_factor = refactor_every
            elif since_factor >= refactor_every or not isinstance(L, np.ndarray):
                L = cholesky(regularized_A(tracker, s, tracker.count))
                since_factor = 1
            else:
                since_factor += 1
        step = L * z[t] if not isinstance(L, np.ndarray) else L @ z[t]
        y = x + s * step
        ly = float(target.log_density(y))
        ok = _accept(ly - lx, u[t])
        if ok:
            x, lx = y, ly
        xs[t] = x
        acc[t] = ok
        sig[t] = s
        if adapting:
            if method != "optimal-fixed":
                tracker.update(x)
            if method == "rm-adaptive":
                _step_inplace(st, ok, cfg)
                if st.last_restart:
                    events.append((t, st.last_restart))
    return ChainTrace(
        states=xs, accepted=acc, sigma_path=sig, x0=start, final_sigma=st.sigma,
        restart_events=events,
        meta={"sampler": "multivariate", "method": method, "target": target.name,
              "p_star": p_star, "m_star": m_star, "n0": cfg.start_index, "iters": iters,
              "sigma1": float(sigma1) if method == "rm-adaptive" else fixed_scale},
    )


BLOCK_KINDS = ("rwmh-univariate", "rwmh-multivariate", "exact-conditional")


@dataclass
class Block:
    indices: tuple
    update: str
    # exact-conditional: conditional(x, generator) -> new values for indices
    conditional: Optional[Callable] = None
    p_star: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        self.indices = tuple(int(i) for i in self.indices)
        if self.update not in BLOCK_KINDS:
            raise ValueError(f"unknown block update {self.update!r}")
        if self.update == "exact-conditional" and self.conditional is None:
            raise ValueError("exact-conditional block needs a conditional sampler")
        if self.update == "rwmh-univariate" and len(self.indices) != 1:
            raise ValueError("rwmh-univariate blocks hold exactly one coordinate")
        if self.p_star is None and self.update != "exact-conditional":
            self.p_star = 0.44 if self.update == "rwmh-univariate" else 0.234

    @property
    def tuned(self) -> bool:
        return self.update != "exact-conditional"


@dataclass
class GibbsBlockSpec:
    blocks: Sequence[Block]

    def validate(self, dim: int) -> None:
        seen = [i for b in self.blocks for i in b.indices]
        if sorted(seen) != list(range(dim)):
            raise ValueError("blocks must partition the coordinates 0..dim-1 without overlap")

    @property
    def tuned_blocks(self) -> list:
        return [b for b in self.blocks if b.tuned]


class _BlockSearch:
    """Per-block Robbins-Monro search plus (for vector blocks) a covariance tracker."""

    def __init__(self, block: Block, sigma1: float, warmup_threshold: int):
        self.idx = np.array(block.indices)
        k = len(block.indices)
        if block.update == "rwmh-univariate":
            self.cfg = RmConfig(p_star=block.p_star, m_star=1)
            self.tracker = None
        else:
            self.cfg = RmConfig(p_star=block.p_star, m_star=k, schedule="slowed", dim=k)
            self.tracker = CovarianceTracker(k, warmup_threshold)
        self.state = init_state(sigma1, self.cfg)

    def proposal_step(self, z: np.ndarray) -> np.ndarray:
        s = self.state.sigma
        if self.tracker is None:
            return s * z
        tr = self.tracker
        if tr.in_warmup:
            return s * math.sqrt(1.0 + s * s / tr.count) * z
        return s * (cholesky(regularized_A(tr, s, tr.count)) @ z)


def run_mwg(
    target: TargetModel,
    blocks: GibbsBlockSpec,
    iters: int,
    rng: RngStream,
    *,
    x0=None,
    sigma1: float = 1.0,
    warmup_threshold: int = 100,
) -> ChainTrace:
    """Metropolis-within-Gibbs: one sequential sweep over ``blocks`` per iteration.

    Each tuned block owns an independent Robbins-Monro search; conditionals
    are evaluated through the joint log-density with the other blocks fixed.
    Exact-conditional blocks draw from a separate child stream.
    """
    m = target.dim
    blocks.validate(m)
    x = initial_state(target, rng) if x0 is None else np.asarray(x0, dtype=float).copy()
    start = x.copy()
    tuned = blocks.tuned_blocks
    searches = {id(b): _BlockSearch(b, sigma1, warmup_threshold) for b in tuned}
    for b in tuned:
        if searches[id(b)].tracker is not None:
            searches[id(b)].tracker.update(x[list(b.indices)])
    widths = [len(b.indices) for b in tuned]
    offsets = np.concatenate([[0], np.cumsum(widths)]).astype(int)
    z = rng.normal((iters, int(offsets[-1])))
    u = rng.uniform((iters, len(tuned)))
    gibbs_gen = rng.child(1).generator

    lx = float(target.log_density(x))
    if lx == -math.inf:
        raise ValueError("initial state lies outside the support")
    xs = np.empty((iters, m))
    acc_any = np.empty(iters, dtype=bool)
    b_acc = np.empty((iters, len(tuned)), dtype=bool)
    b_sig = np.empty((iters, len(tuned)))
    events = []
    for t in range(iters):
        moved = False
        k = 0
        for b in blocks.blocks:
            if not b.tuned:
                idx = list(b.indices)
                new = np.asarray(b.conditional(x, gibbs_gen), dtype=float)
                if not np.array_equal(new, x[idx]):
                    moved = True
                x[idx] = new
                lx = float(target.log_density(x))
                continue
            srch = searches[id(b)]
            s = srch.state.sigma
            y = x.copy()
            y[srch.idx] += srch.proposal_step(z[t, offsets[k]:offsets[k + 1]])
            ly = float(target.log_density(y))
            ok = _accept(ly - lx, u[t, k])
            if ok:
                x, lx = y, ly
                moved = True
            b_acc[t, k] = ok
            b_sig[t, k] = s
            if srch.tracker is not None:
                srch.tracker.update(x[srch.idx])
            _step_inplace(srch.state, ok, srch.cfg)
            if srch.state.last_restart:
                events.append((t, srch.state.last_restart, k))
            k += 1
        xs[t] = x
        acc_any[t] = moved
    return ChainTrace(
        states=xs, accepted=acc_any,
        sigma_path=b_sig[:, 0].copy() if tuned else np.zeros(iters),
        x0=start, final_sigma=searches[id(tuned[0])].state.sigma if tuned else float("nan"),
        restart_events=events,
        meta={"sampler": "mwg", "target": target.name, "iters": iters,
              "blocks": [{"name": b.name, "update": b.update, "dim": len(b.indices),
                          "p_star": b.p_star} for b in blocks.blocks],
              "final_block_sigma": [searches[id(b)].state.sigma for b in tuned]},
        block_accepted=b_acc, block_sigma=b_sig,
    )
