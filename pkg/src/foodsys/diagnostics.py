"""Convergence diagnostics and posterior interval summaries."""

from __future__ import annotations

import numpy as np

from .errors import DomainError

__all__ = ["rhat", "ess", "hdi"]


def rhat(chains: np.ndarray) -> float:
    """Split Gelman-Rubin statistic for one scalar quantity.

    ``chains`` has shape (n_chains, n_draws) with at least 2 chains of at
    least 4 draws. Each chain is halved, and the ratio of between-half to
    within-half variance is folded into the usual scale-reduction estimate.
    Returns +inf when the within variance is zero (all chains constant).
    """
    chains = np.asarray(chains, dtype=np.float64)
    if chains.ndim != 2 or chains.shape[0] < 2 or chains.shape[1] < 4:
        raise DomainError("rhat needs >= 2 chains with >= 4 draws each")
    half = chains.shape[1] // 2
    halves = np.concatenate([chains[:, :half], chains[:, half: 2 * half]], axis=0)
    w = float(np.mean(np.var(halves, axis=1, ddof=1)))
    b = half * float(np.var(np.mean(halves, axis=1), ddof=1))
    if w == 0.0:
        return float("inf")
    var_plus = (half - 1) / half * w + b / half
    return float(np.sqrt(var_plus / w))


def _geyer_ess(x: np.ndarray) -> float:
    """Effective sample size of a single sequence via the initial positive
    sequence of paired autocorrelations (monotone-enforced)."""
    n = x.size
    x = x - x.mean()
    var0 = float(np.dot(x, x)) / n
    if var0 == 0.0:
        return 0.0
    # Autocovariance via FFT; biased (1/n) normalisation.
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n].real / n
    rho = acov / var0

    # tau = 1 + 2*sum(rho_t) = 2*sum of positive, monotone even-odd pair
    # sums (rho_0 + rho_1), (rho_2 + rho_3), ... minus one.
    tau = -1.0
    prev = np.inf
    t = 0
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair <= 0.0:
            break
        pair = min(pair, prev)
        tau += 2.0 * pair
        prev = pair
        t += 2
    tau = max(tau, 1.0 / n)
    return n / tau


def ess(draws: np.ndarray) -> float:
    """Autocorrelation-adjusted effective sample size.

    A 1-d array is treated as a single chain; a 2-d array as
    (n_chains, n_draws), with per-chain estimates summed. Needs at least
    8 draws per chain. A constant chain contributes 0.
    """
    draws = np.asarray(draws, dtype=np.float64)
    if draws.ndim == 1:
        draws = draws[None, :]
    if draws.ndim != 2 or draws.shape[1] < 8:
        raise DomainError("ess needs >= 8 draws per chain")
    return float(sum(_geyer_ess(row) for row in draws))


def hdi(samples: np.ndarray, mass: float = 0.95) -> tuple[float, float]:
    """Shortest contiguous interval holding ``ceil(mass * n)`` sorted samples.

    Ties are broken toward the lowest start. Needs at least 20 samples.
    """
    samples = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    n = samples.size
    if n < 20:
        raise DomainError(f"hdi needs >= 20 samples, got {n}")
    if not 0.0 < mass < 1.0:
        raise DomainError(f"mass must be in (0, 1), got {mass!r}")
    window = int(np.ceil(mass * n))
    if window >= n:
        return float(samples[0]), float(samples[-1])
    widths = samples[window - 1:] - samples[: n - window + 1]
    start = int(np.argmin(widths))
    return float(samples[start]), float(samples[start + window - 1])
