import numpy as np
import pytest
from scipy import stats

from _oracles import grid_cdf
from rmadapt.hier import HierModel, HierTargetSpec, make_hier_target
from rmadapt.numerics import RngStream

SMALL = HierTargetSpec(n_groups=3, coef_block_dim=1, knot_block_dim=2, obs_per_group=4)


def random_state(model, seed):
    x = RngStream(seed).normal(model.dim)
    x[model.i_s2b] = 0.7
    x[model.i_s2u] = 1.6
    return x


def test_block_counts():
    target, blocks = make_hier_target(HierTargetSpec(), seed=0, scheme="full")
    assert target.dim == 30
    assert len(blocks.tuned_blocks) == 28
    assert sum(not b.tuned for b in blocks.blocks) == 2
    _, blocks = make_hier_target(HierTargetSpec(), seed=0, scheme="block")
    kinds = [b.update for b in blocks.blocks]
    assert kinds.count("rwmh-univariate") == 20
    assert kinds.count("rwmh-multivariate") == 2
    assert kinds.count("exact-conditional") == 2
    assert {b.p_star for b in blocks.tuned_blocks} == {0.44, 0.234}
    blocks.validate(target.dim)


def test_spec_validation():
    with pytest.raises(ValueError):
        HierModel(HierTargetSpec(n_groups=0), 0)
    with pytest.raises(ValueError):
        HierModel(HierTargetSpec(shape_b=0.0), 0)
    with pytest.raises(ValueError):
        HierModel(HierTargetSpec(), 0).blocks("mixed")


def test_single_and_batched_paths_agree():
    model = HierModel(HierTargetSpec(), 1)
    xs = np.stack([random_state(model, k) for k in range(5)])
    batched = model.log_density(xs)
    for x, v in zip(xs, batched):
        assert model.log_density(x) == pytest.approx(v, rel=1e-12)
    bad = xs[0].copy()
    bad[model.i_s2u] = -1.0
    assert model.log_density(bad) == -np.inf
    assert model.log_density(bad[None])[0] == -np.inf


def test_initial_state_is_valid():
    model = HierModel(HierTargetSpec(), 2)
    target = model.target()
    assert np.isfinite(target.log_density(target.meta["initial_state"]))


def test_density_decomposes_across_non_interacting_blocks():
    # mixed second differences vanish for coordinates that share no term
    model = HierModel(HierTargetSpec(), 3)
    f = model.log_density
    rng = RngStream(4).generator
    pairs = []
    for j in range(model.G):
        pairs.append((j, model.i_s2u))
    for j in range(model.sl_beta.start, model.sl_beta.stop):
        pairs += [(j, model.i_s2b), (j, model.i_s2u)]
    for j in range(model.sl_u.start, model.sl_u.stop):
        pairs.append((j, model.i_s2b))
    pairs.append((0, 1))  # two group effects share no term
    for i, j in pairs:
        x = random_state(model, int(rng.integers(1 << 30)))
        di, dj = rng.uniform(0.1, 0.5, 2)
        ei, ej = np.zeros(model.dim), np.zeros(model.dim)
        ei[i], ej[j] = di, dj
        mixed = f(x + ei + ej) - f(x + ei) - f(x + ej) + f(x)
        assert abs(mixed) < 1e-9 * max(1.0, abs(f(x)))
    # sanity: interacting pair (b_0, s2b) does not decompose
    x = random_state(model, 5)
    ei, ej = np.zeros(model.dim), np.zeros(model.dim)
    ei[0], ej[model.i_s2b] = 0.3, 0.2
    assert abs(f(x + ei + ej) - f(x + ei) - f(x + ej) + f(x)) > 1e-6


@pytest.mark.parametrize("which", ["s2b", "s2u"])
def test_conjugate_draws_match_grid_conditional(which):
    model = HierModel(SMALL, 6)
    x = random_state(model, 7)
    idx = model.i_s2b if which == "s2b" else model.i_s2u

    def log_cond(v):
        y = x.copy()
        y[idx] = v
        return model.log_density(y)

    cdf = grid_cdf(log_cond)
    draw = model.draw_s2b if which == "s2b" else model.draw_s2u
    g = RngStream(8).generator
    draws = np.array([draw(x, g)[0] for _ in range(10_000)])
    assert stats.kstest(draws, cdf).pvalue > 0.01


def test_conjugate_parameters():
    model = HierModel(HierTargetSpec(n_groups=4, shape_b=2.0, scale_b=3.0), 0)
    x = np.zeros(model.dim)
    x[:4] = [1.0, -1.0, 2.0, 0.0]
    assert model.s2b_conditional(x) == (2.0 + 2.0, 3.0 + 3.0)


def test_collapsed_posterior_matches_laplace_integral():
    # given the variances the joint is Gaussian in (b, beta, u), so integrating
    # it out exactly is a Laplace computation with a finite-difference Hessian
    model = HierModel(SMALL, 9)
    k = model.i_s2b

    def integrated(s2b, s2u):
        def f(theta):
            x = np.concatenate([theta, [s2b, s2u]])
            return model.log_density(x)
        H = np.empty((k, k))
        h = 1e-3
        e = np.eye(k) * h
        z = np.zeros(k)
        for i in range(k):
            for j in range(k):
                H[i, j] = (f(z + e[i] + e[j]) - f(z + e[i] - e[j]) - f(z - e[i] + e[j])
                           + f(z - e[i] - e[j])) / (4 * h * h)
        g = np.array([(f(z + e[i]) - f(z - e[i])) / (2 * h) for i in range(k)])
        mode = np.linalg.solve(-H, g)
        return f(mode) - 0.5 * np.linalg.slogdet(-H)[1]

    pts = [(0.5, 0.8), (2.0, 0.3), (1.0, 4.0)]
    lap = np.array([integrated(a, b) for a, b in pts])
    exact = np.array([model.log_marginal_variances(a, b) for a, b in pts])
    np.testing.assert_allclose(lap - lap[0], exact - exact[0], atol=1e-5)
