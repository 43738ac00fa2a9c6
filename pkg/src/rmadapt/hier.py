"""Synthetic Gaussian hierarchical model for Metropolis-within-Gibbs runs.

    y_gj = X_gj' beta + Z_gj' u + b_g + eps_gj,   eps ~ N(0, noise_var)
    b_g ~ N(0, s2b),  u_k ~ N(0, s2u),  beta ~ N(0, coef_prior_var I)
    s2b ~ IG(a_b, s_b),  s2u ~ IG(a_u, s_u)

State layout: ``[b (n_groups) | beta (coef_dim) | u (knot_dim) | s2b | s2u]``.
Both variances have conjugate inverse-gamma conditionals and are drawn
exactly; everything else is updated by tuned random-walk blocks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dists import TargetModel
from .numerics import RngStream
from .samplers import Block, GibbsBlockSpec

__all__ = ["HierTargetSpec", "HierModel", "make_hier_target"]


@dataclass(frozen=True)
class HierTargetSpec:
    n_groups: int = 20
    coef_block_dim: int = 3
    knot_block_dim: int = 5
    obs_per_group: int = 5
    shape_b: float = 1.0
    scale_b: float = 1.0
    shape_u: float = 1.0
    scale_u: float = 1.0
    noise_var: float = 1.0
    coef_prior_var: float = 100.0
    true_s2b: float = 1.0
    true_s2u: float = 0.5

    def validate(self) -> None:
        for name in ("n_groups", "coef_block_dim", "knot_block_dim", "obs_per_group"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("shape_b", "scale_b", "shape_u", "scale_u", "noise_var",
                     "coef_prior_var", "true_s2b", "true_s2u"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


class HierModel:
    """Data plus log-density and conjugate conditionals for one synthetic instance."""

    def __init__(self, spec: HierTargetSpec, seed: int):
        spec.validate()
        self.spec = spec
        G, p, K, n = spec.n_groups, spec.coef_block_dim, spec.knot_block_dim, spec.obs_per_group
        self.G, self.p, self.K = G, p, K
        self.dim = G + p + K + 2
        self.sl_b = slice(0, G)
        self.sl_beta = slice(G, G + p)
        self.sl_u = slice(G + p, G + p + K)
        self.i_s2b = G + p + K
        self.i_s2u = G + p + K + 1

        g = RngStream(seed, 0).generator
        self.group = np.repeat(np.arange(G), n)
        nobs = G * n
        self.X = g.standard_normal((nobs, p))
        self.Z = g.standard_normal((nobs, K))
        self.true_beta = g.standard_normal(p)
        self.true_u = np.sqrt(spec.true_s2u) * g.standard_normal(K)
        self.true_b = np.sqrt(spec.true_s2b) * g.standard_normal(G)
        mean = self.X @ self.true_beta + self.Z @ self.true_u + self.true_b[self.group]
        self.y = mean + np.sqrt(spec.noise_var) * g.standard_normal(nobs)

    # -- log-density -------------------------------------------------------
    def loglik(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        fit = (x[..., self.sl_beta] @ self.X.T + x[..., self.sl_u] @ self.Z.T
               + x[..., self.sl_b][..., self.group])
        r = self.y - fit
        return -0.5 * np.sum(r * r, axis=-1) / self.spec.noise_var

    def log_prior(self, x) -> np.ndarray:
        s = self.spec
        x = np.asarray(x, dtype=float)
        s2b, s2u = x[..., self.i_s2b], x[..., self.i_s2u]
        ok = (s2b > 0) & (s2u > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            s2b_ = np.where(ok, s2b, 1.0)
            s2u_ = np.where(ok, s2u, 1.0)
            b, beta, u = x[..., self.sl_b], x[..., self.sl_beta], x[..., self.sl_u]
            lp = (-0.5 * np.sum(b * b, axis=-1) / s2b_ - 0.5 * self.G * np.log(s2b_)
                  - 0.5 * np.sum(u * u, axis=-1) / s2u_ - 0.5 * self.K * np.log(s2u_)
                  - 0.5 * np.sum(beta * beta, axis=-1) / s.coef_prior_var
                  - (s.shape_b + 1.0) * np.log(s2b_) - s.scale_b / s2b_
                  - (s.shape_u + 1.0) * np.log(s2u_) - s.scale_u / s2u_)
        return np.where(ok, lp, -np.inf)

    def log_density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self._log_density_single(x)
        lp = self.log_prior(x)
        return np.where(np.isfinite(lp), lp + self.loglik(x), -np.inf)

    def _log_density_single(self, x: np.ndarray) -> float:
        # Same value as the batched path; plain floats are much cheaper per call.
        s = self.spec
        s2b, s2u = float(x[self.i_s2b]), float(x[self.i_s2u])
        if not (s2b > 0.0 and s2u > 0.0):
            return -math.inf
        b, beta, u = x[self.sl_b], x[self.sl_beta], x[self.sl_u]
        r = self.y - self.X @ beta - self.Z @ u - b[self.group]
        lb, ls = math.log(s2b), math.log(s2u)
        return (-0.5 * float(r @ r) / s.noise_var
                - 0.5 * float(b @ b) / s2b - (0.5 * self.G + s.shape_b + 1.0) * lb - s.scale_b / s2b
                - 0.5 * float(u @ u) / s2u - (0.5 * self.K + s.shape_u + 1.0) * ls - s.scale_u / s2u
                - 0.5 * float(beta @ beta) / s.coef_prior_var)

    # -- conjugate conditionals ---------------------------------------------
    def s2b_conditional(self, x) -> tuple[float, float]:
        """Inverse-gamma ``(shape, scale)`` of ``s2b`` given the group effects."""
        b = np.asarray(x)[self.sl_b]
        return self.spec.shape_b + 0.5 * self.G, self.spec.scale_b + 0.5 * float(b @ b)

    def s2u_conditional(self, x) -> tuple[float, float]:
        u = np.asarray(x)[self.sl_u]
        return self.spec.shape_u + 0.5 * self.K, self.spec.scale_u + 0.5 * float(u @ u)

    def draw_s2b(self, x, gen) -> np.ndarray:
        a, s = self.s2b_conditional(x)
        return np.array([s / gen.gamma(a)])

    def draw_s2u(self, x, gen) -> np.ndarray:
        a, s = self.s2u_conditional(x)
        return np.array([s / gen.gamma(a)])

    # -- collapsed posterior of the variances (test oracle) ------------------
    def log_marginal_variances(self, s2b, s2u) -> np.ndarray:
        """Log posterior of ``(s2b, s2u)`` up to a constant, with b, beta, u integrated out.

        ``y ~ N(0, noise I + s2b H H' + v_beta X X' + s2u Z Z')`` with ``H`` the
        group-indicator matrix; evaluated by brute-force determinants, so only
        meant for small instances.
        """
        s = self.spec
        s2b, s2u = np.broadcast_arrays(np.asarray(s2b, float), np.asarray(s2u, float))
        n = len(self.y)
        H = np.zeros((n, self.G))
        H[np.arange(n), self.group] = 1.0
        base = s.noise_var * np.eye(n) + s.coef_prior_var * self.X @ self.X.T
        HH, ZZ = H @ H.T, self.Z @ self.Z.T
        V = base + s2b[..., None, None] * HH + s2u[..., None, None] * ZZ
        sign, logdet = np.linalg.slogdet(V)
        sol = np.linalg.solve(V, np.broadcast_to(self.y, V.shape[:-1])[..., None])[..., 0]
        quad = sol @ self.y
        lprior = (-(s.shape_b + 1) * np.log(s2b) - s.scale_b / s2b
                  - (s.shape_u + 1) * np.log(s2u) - s.scale_u / s2u)
        return -0.5 * logdet - 0.5 * quad + lprior

    # -- assembly ------------------------------------------------------------
    def initial_state(self) -> np.ndarray:
        x = np.zeros(self.dim)
        x[self.i_s2b] = 1.0
        x[self.i_s2u] = 1.0
        return x

    def target(self) -> TargetModel:
        return TargetModel(
            name=f"hier-{self.G}-{self.p}-{self.K}", dim=self.dim, log_density=self.log_density,
            support="half-line", meta={"kind": "hierarchical", "model": self,
                  "initial_state": self.initial_state()},
        )

    def blocks(self, scheme: str = "block") -> GibbsBlockSpec:
        """``block``: scalar group effects plus two vector blocks; ``full``: all scalar."""
        out = [Block((j,), "rwmh-univariate", name=f"b{j}") for j in range(self.G)]
        if scheme == "block":
            out.append(Block(tuple(range(self.sl_beta.start, self.sl_beta.stop)),
                             "rwmh-multivariate", name="beta"))
            out.append(Block(tuple(range(self.sl_u.start, self.sl_u.stop)),
                             "rwmh-multivariate", name="u"))
        elif scheme == "full":
            out += [Block((j,), "rwmh-univariate", name=f"beta{j - self.G}")
                    for j in range(self.sl_beta.start, self.sl_beta.stop)]
            out += [Block((j,), "rwmh-univariate", name=f"u{j - self.sl_u.start}")
                    for j in range(self.sl_u.start, self.sl_u.stop)]
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        out.append(Block((self.i_s2b,), "exact-conditional", conditional=self.draw_s2b, name="s2b"))
        out.append(Block((self.i_s2u,), "exact-conditional", conditional=self.draw_s2u, name="s2u"))
        return GibbsBlockSpec(out)


def make_hier_target(spec: HierTargetSpec, seed: int = 0, scheme: str = "block"):
    """``(TargetModel, GibbsBlockSpec)`` for a synthetic instance drawn at ``seed``."""
    model = HierModel(spec, seed)
    return model.target(), model.blocks(scheme)
