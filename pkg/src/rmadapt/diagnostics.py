"""Trace summaries: acceptance rates, ACT, ASD and replicate quantiles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .samplers import ChainTrace

__all__ = [
    "DegenerateSeriesError",
    "TraceSummary",
    "acceptance_rate",
    "act",
    "asd",
    "autocorrelation",
    "replicate_quantiles",
    "running_acceptance",
    "summarize",
]


class DegenerateSeriesError(ValueError):
    pass


def acceptance_rate(trace_or_flags, window: tuple[int, int] | None = None) -> float:
    """Fraction of accepted proposals over ``window = (start, end)`` (Python slice bounds)."""
    flags = trace_or_flags.accepted if isinstance(trace_or_flags, ChainTrace) else trace_or_flags
    flags = np.asarray(flags, dtype=bool)
    if window is not None:
        start, end = window
        if start < 0 or end > len(flags) or start > end:
            raise ValueError(f"window {window} outside a trace of length {len(flags)}")
        flags = flags[start:end]
    if len(flags) == 0:
        raise ValueError("empty acceptance window")
    return float(np.mean(flags))


def running_acceptance(flags, window: int = 500) -> np.ndarray:
    """Acceptance rate over the previous ``window`` iterations, for every t >= window."""
    flags = np.asarray(flags, dtype=float)
    if len(flags) < window:
        return np.empty(0)
    c = np.concatenate([[0.0], np.cumsum(flags)])
    return (c[window:] - c[:-window]) / window


def autocorrelation(x) -> np.ndarray:
    """Normalized sample autocorrelation at all lags (biased estimator, via FFT)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    d = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(d, size)
    acov = np.fft.irfft(f * np.conjugate(f), size)[:n]
    if acov[0] <= 0:
        raise DegenerateSeriesError("series has zero variance")
    return acov / acov[0]


def act(series) -> float:
    """Integrated autocorrelation time ``1 + 2 sum_k rho_k``.

    Truncated with Geyer's initial positive sequence: autocorrelations are
    summed in adjacent pairs ``rho_2k + rho_2k+1`` until a pair turns
    negative.
    """
    x = np.asarray(series, dtype=float)
    if len(x) < 10:
        raise ValueError("act needs at least 10 values")
    if np.ptp(x) == 0:
        raise DegenerateSeriesError("series has zero variance")
    rho = autocorrelation(x)
    npairs = len(rho) // 2
    pairs = rho[: 2 * npairs].reshape(npairs, 2).sum(axis=1)
    neg = np.flatnonzero(pairs < 0)
    k = neg[0] if len(neg) else npairs
    return float(-1.0 + 2.0 * pairs[:k].sum())


def asd(states, coordinate: int = 0) -> float:
    """Mean squared one-step move of a coordinate."""
    s = np.asarray(states, dtype=float)
    col = s[:, coordinate] if s.ndim == 2 else s
    if len(col) < 2:
        raise ValueError("asd needs at least two states")
    return float(np.mean(np.diff(col) ** 2))


def replicate_quantiles(values, probs) -> np.ndarray:
    """Empirical quantiles with linear interpolation of order statistics (type 7)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no values")
    p = np.asarray(probs, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("probabilities must lie in (0, 1)")
    return np.quantile(v, p, method="linear")


@dataclass(frozen=True)
class TraceSummary:
    oap_overall: float
    oap_last_window: float
    act: tuple
    asd: tuple
    mean: tuple
    sd: tuple
    final_sigma: float
    sigma2_mean: float


def summarize(trace: ChainTrace, coords=(0,), last_window: int = 1000) -> TraceSummary:
    """Table-style summary.

    ACT and ASD use the whole chain (with the starting state prepended);
    OAP, posterior mean/sd and the mean of ``sigma^2`` use the second half.
    """
    T = len(trace)
    if T < 2:
        raise ValueError("trace too short to summarize")
    half = T // 2
    full = np.vstack([trace.x0[None, :], trace.states])
    tail = trace.states[half:]
    w = min(last_window, T)
    return TraceSummary(
        oap_overall=acceptance_rate(trace, (half, T)),
        oap_last_window=acceptance_rate(trace, (T - w, T)),
        act=tuple(act(full[:, c]) for c in coords),
        asd=tuple(asd(full, c) for c in coords),
        mean=tuple(float(np.mean(tail[:, c])) for c in coords),
        sd=tuple(float(np.std(tail[:, c], ddof=1)) for c in coords),
        final_sigma=float(trace.final_sigma),
        sigma2_mean=_sigma2_mean(trace.sigma_path[half:]),
    )


def _sigma2_mean(path: np.ndarray) -> float:
    # A fixed-scale chain reports its sigma^2 without averaging round-off.
    if len(path) and np.all(path == path[0]):
        return float(path[0]) ** 2
    return float(np.mean(path ** 2))
