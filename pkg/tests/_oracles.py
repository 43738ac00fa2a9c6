"""Grid-integration oracles shared by the hierarchical-model tests."""
import numpy as np
from scipy.integrate import cumulative_trapezoid


def grid_cdf(log_weight, lo=1e-3, hi=1e4, n=1000):
    """CDF of a positive scalar from an unnormalized log density, on a log grid."""
    lg = np.linspace(np.log(lo), np.log(hi), n)
    lw = np.array([log_weight(np.exp(v)) for v in lg]) + lg  # change of variables to log scale
    w = np.exp(lw - lw.max())
    cdf = cumulative_trapezoid(w, lg, initial=0.0)
    cdf /= cdf[-1]
    return lambda v: np.interp(np.log(v), lg, cdf)


def variance_marginal_cdfs(model, lo=1e-3, hi=1e4, n=1000):
    """Marginal CDFs of (s2b, s2u) from the collapsed posterior on a 2-D log grid."""
    lg = np.linspace(np.log(lo), np.log(hi), n)
    B, U = np.meshgrid(np.exp(lg), np.exp(lg), indexing="ij")
    lp = model.log_marginal_variances(B, U) + np.log(B) + np.log(U)
    w = np.exp(lp - lp.max())
    out = []
    for marg in (w.sum(axis=1), w.sum(axis=0)):
        cdf = cumulative_trapezoid(marg, lg, initial=0.0)
        cdf /= cdf[-1]
        out.append(lambda v, c=cdf: np.interp(np.log(v), lg, c))
    return out
