"""Mapping of digital precoders/combiners onto phase-shifter hardware.

The analog stage only changes phases, so every analog coefficient has unit
modulus. The frequency-selective baseband stage then removes whatever
inter-stream interference the projection introduced.
"""

import numpy as np

from .numerics import waterfilling
from .state import Solution

__all__ = ["CombinerCollapseError", "phase_project", "quantize_phases",
           "hybrid_combiner", "hybrid_finalize", "zf_directions",
           "rate_from_gains"]


class CombinerCollapseError(ValueError):
    """The projected analog combiner has no component left in the user's subspace."""


def phase_project(M):
    """Replace every entry by its unit-modulus phase factor (zeros map to 1)."""
    M = np.asarray(M, dtype=complex)
    mag = np.abs(M)
    out = np.ones_like(M)
    nz = mag > 0
    out[nz] = M[nz] / mag[nz]
    return out


def quantize_phases(M, bits):
    """Snap each phase to the nearest point of the ``2**bits`` uniform grid.

    Ties go to the smaller grid index. Magnitudes are discarded, i.e. the
    result is unit modulus.
    """
    if bits < 1:
        raise ValueError("bits must be >= 1")
    n = 2 ** int(bits)
    step = 2 * np.pi / n
    phase = np.mod(np.angle(np.asarray(M, dtype=complex)), 2 * np.pi)
    # ceil(x - 1/2) rounds half down, i.e. ties to the smaller index
    idx = np.ceil(phase / step - 0.5).astype(int) % n
    return np.exp(1j * step * idx)


def hybrid_combiner(g, S, beta=1, bits=None, tol=1e-10):
    """Feasible combiner ``S g_A / ||S g_A||`` with ``g_A`` the phase projection of ``g``.

    Returns
    -------
    (combiner, g_A) : (np.ndarray, np.ndarray)
        ``combiner`` is multiplied by ``beta``; ``g_A`` is the unit-modulus
        analog vector (quantized when ``bits`` is given).

    Raises
    ------
    CombinerCollapseError
        If ``||S g_A|| < tol``.
    """
    g_a = phase_project(g) if bits is None else quantize_phases(g, bits)
    v = S @ g_a
    nrm = np.linalg.norm(v)
    if nrm < tol:
        raise CombinerCollapseError("analog combiner collapsed in projected subspace")
    return beta * v / nrm, g_a


def rate_from_gains(gains, powers, noise_var, n_subcarriers):
    """``(1/L) sum log2(1 + gains**2 powers / noise)`` over all slots."""
    gains = np.asarray(gains, dtype=float)
    powers = np.asarray(powers, dtype=float)
    return float(np.sum(np.log2(1.0 + gains ** 2 * powers / noise_var))
                 / n_subcarriers)


def zf_directions(rows, analog_cols, rcond=1e-12):
    """Baseband ZF matrix with unit-norm effective columns.

    Returns ``(psi, gains)`` such that ``analog_cols @ psi`` has unit-norm
    columns and ``rows @ analog_cols @ psi = diag(gains)``. Raises
    ``np.linalg.LinAlgError`` when ``rows @ analog_cols`` is singular
    relative to ``rcond``.
    """
    M = rows @ analog_cols
    s = np.linalg.svd(M, compute_uv=False)
    if s.size and (s[0] == 0 or s[-1] <= rcond * s[0]):
        raise np.linalg.LinAlgError("singular effective channel")
    inv = np.linalg.inv(M)
    nrm = np.linalg.norm(analog_cols @ inv, axis=0)
    return inv / nrm, 1.0 / nrm


def hybrid_finalize(state, P_A, channels, p_tx, noise_var):
    """Rebuild baseband precoders on top of a fixed analog precoder.

    For every subcarrier the composite rows are multiplied with the analog
    columns of the active streams, the resulting square matrix is inverted
    to remove residual interference, columns are renormalized and power is
    re-allocated by waterfilling over all active slots.

    Parameters
    ----------
    state : LisaState
        Committed state of a finished run.
    P_A : np.ndarray
        ``N x n_streams`` analog precoder (normally the phase projection of
        the auxiliary precoders; any matrix is accepted).
    channels : np.ndarray
        ``(K, L, R, N)`` channel tensor (used only for shape checks here).

    Returns
    -------
    Solution
    """
    n = len(state.streams)
    P_A = np.asarray(P_A, dtype=complex)
    if P_A.shape != (channels.shape[-1], n):
        raise ValueError(f"analog precoder has shape {P_A.shape}, "
                         f"expected {(channels.shape[-1], n)}")
    active, psis, gains_l, dropped = [], [], [], []
    for ell, fac in enumerate(state.factors):
        act = list(fac.active)
        rows = fac.rows
        while act:
            try:
                psi, lam = zf_directions(rows, P_A[:, act])
                break
            except np.linalg.LinAlgError:
                M = rows @ P_A[:, act]
                weakest = int(np.argmin(np.abs(np.diag(M))))
                dropped.append((act[weakest], ell))
                del act[weakest]
                rows = np.delete(rows, weakest, axis=0)
        else:
            psi, lam = np.zeros((0, 0), dtype=complex), np.zeros(0)
        active.append(act)
        psis.append(psi)
        gains_l.append(lam)
    flat = np.concatenate(gains_l) if gains_l else np.zeros(0)
    if flat.size and np.any(flat > 0):
        powers_flat = waterfilling(flat, noise_var, p_tx).powers
    else:
        powers_flat = np.zeros_like(flat)
    return _assemble(state, "hybrid", P_A, active, psis, gains_l,
                     powers_flat, noise_var, dropped)


def _assemble(state, mode, analog, active, psis, gains_l, powers_flat,
              noise_var, dropped=()):
    """Pack per-subcarrier baseband matrices, gains and powers into a Solution."""
    L = len(active)
    n = len(state.streams)
    gains = np.zeros((n, L))
    powers = np.zeros((n, L))
    digital, directions = [], []
    off = 0
    for ell in range(L):
        act = active[ell]
        d = len(act)
        p = powers_flat[off:off + d]
        off += d
        gains[act, ell] = gains_l[ell]
        powers[act, ell] = p
        D = np.zeros((n, d), dtype=complex)
        D[act, :] = psis[ell]
        directions.append(analog @ D)
        digital.append(D * np.sqrt(p)[None, :])
    rate = rate_from_gains(gains, powers, noise_var, L)
    return Solution(mode=mode, streams=list(state.streams), analog=analog,
                    digital=digital, directions=directions, active=active,
                    gains=gains, powers=powers, sum_rate=rate,
                    noise_var=noise_var, dropped=list(dropped), state=state)
