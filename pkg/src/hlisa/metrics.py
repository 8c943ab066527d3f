"""Achievable-rate and diagnostic computations on finished solutions."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["RateReport", "GainProfile", "SwitchoffCDF", "sum_rate_general",
           "sum_rate_zf", "equivalent_gains", "normalized_gain_profile",
           "switchoff_cdf", "zf_residual", "kolmogorov_distance_uniform"]


@dataclass
class RateReport:
    per_user: np.ndarray            # (K,)
    per_subcarrier: np.ndarray      # (K, L)
    sum_rate: float


@dataclass
class GainProfile:
    gains: np.ndarray               # (n_streams, L), lambda
    powers: np.ndarray              # (n_streams, L), gamma^2

    @property
    def n_subcarriers(self):
        return self.gains.shape[1]


@dataclass
class SwitchoffCDF:
    counts: np.ndarray              # switched-off slots per subcarrier index
    cdf: np.ndarray
    empty: bool

    @property
    def total(self):
        return int(self.counts.sum())


def sum_rate_general(channels, precoders, combiners, noise_var):
    """Sum rate with Gaussian signaling, inter-user interference as noise.

    Parameters
    ----------
    channels : np.ndarray
        ``(K, L, R, N)`` channel tensor.
    precoders, combiners : nested sequences
        ``precoders[k][l]`` is the ``N x n_k[l]`` effective precoder of user
        ``k`` (analog times baseband) and ``combiners[k][l]`` the matching
        ``R x n_k[l]`` effective combiner. Users beyond the given lists, or
        with zero columns, get rate 0. Noise is colored by the combiner, so
        passing ``G_A @ G_D`` is equivalent to the separate factors.

    Returns
    -------
    RateReport

    Raises
    ------
    np.linalg.LinAlgError
        If an interference-plus-noise matrix is singular.
    """
    K, L = channels.shape[:2]
    per = np.zeros((K, L))
    for ell in range(L):
        for k in range(min(K, len(precoders))):
            W = combiners[k][ell]
            if W is None or W.shape[1] == 0:
                continue
            Hk = channels[k, ell]
            X = noise_var * (W.conj().T @ W)
            for i in range(len(precoders)):
                if i == k or precoders[i][ell] is None:
                    continue
                Y = W.conj().T @ Hk @ precoders[i][ell]
                X = X + Y @ Y.conj().T
            Y = W.conj().T @ Hk @ precoders[k][ell]
            M = np.eye(W.shape[1]) + np.linalg.solve(X, Y @ Y.conj().T)
            sign, logdet = np.linalg.slogdet(M)
            per[k, ell] = max(np.real(logdet) / np.log(2.0), 0.0)
    per_user = per.sum(axis=1) / L
    return RateReport(per_user, per, float(per_user.sum()))


def sum_rate_zf(profile, noise_var):
    """``sum_j (1/L) sum_l log2(1 + lambda^2 gamma^2 / sigma^2)``."""
    g2p = profile.gains ** 2 * profile.powers
    return float(np.sum(np.log2(1.0 + g2p / noise_var)) / profile.n_subcarriers)


def equivalent_gains(solution, channels):
    """Recompute ``lambda_j[l]`` from the raw channels and final filters.

    Uses the unit-norm precoding directions so that zero-power slots that
    are structurally active still report their gain. Inactive slots get 0.
    """
    n, L = solution.n_streams, solution.n_subcarriers
    gains = np.zeros((n, L))
    for ell, act in enumerate(solution.active):
        C = solution.directions[ell]
        for c, j in enumerate(act):
            s = solution.streams[j]
            v = C[:, c]
            gains[j, ell] = abs(s.g.conj() @ channels[s.user, ell] @ v) \
                / np.linalg.norm(v)
    return GainProfile(gains, solution.powers.copy())


def zf_residual(solution, channels):
    """Worst ``|g_j^H H_j[l] p_i[l]| / ||p_i[l]||`` over ``i != j`` active on ``l``."""
    worst = 0.0
    for ell, act in enumerate(solution.active):
        C = solution.directions[ell]
        for a, j in enumerate(act):
            s = solution.streams[j]
            row = s.g.conj() @ channels[s.user, ell]
            for b in range(len(act)):
                if a == b:
                    continue
                v = C[:, b]
                worst = max(worst, abs(row @ v) / np.linalg.norm(v))
    return worst


def normalized_gain_profile(profile):
    """Per-subcarrier mean of ``lambda^2`` over streams, scaled to max 1."""
    if profile.gains.shape[0] == 0:
        return np.zeros(profile.n_subcarriers)
    prof = np.mean(profile.gains ** 2, axis=0)
    peak = prof.max()
    return prof / peak if peak > 0 else prof


def switchoff_cdf(solutions, n_subcarriers: Optional[int] = None):
    """Empirical CDF over subcarrier index of switched-off slots.

    A slot is switched off when an allocated stream has ``beta = 0`` there.
    """
    counts = None
    for sol in solutions:
        if counts is None:
            counts = np.zeros(n_subcarriers or sol.n_subcarriers, dtype=int)
        if sol.n_streams:
            counts += (~sol.beta()).sum(axis=0)
    if counts is None:
        counts = np.zeros(n_subcarriers or 0, dtype=int)
    total = counts.sum()
    if total == 0:
        return SwitchoffCDF(counts, np.zeros(counts.size), True)
    return SwitchoffCDF(counts, np.cumsum(counts) / total, False)


def kolmogorov_distance_uniform(cdf):
    """Sup distance between a CDF on ``1..L`` and the discrete uniform CDF."""
    cdf = np.asarray(cdf, dtype=float)
    L = cdf.size
    return float(np.max(np.abs(cdf - np.arange(1, L + 1) / L)))
