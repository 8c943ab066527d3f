"""Wideband linear successive allocation (greedy scheduling + ZF precoding).

Each iteration adds one data stream. The first stage picks a user together
with frequency-flat combiner ``g`` and auxiliary precoder ``q`` from the
bilinearly projected channels of all (or a few representative) subcarriers.
The second stage appends the new stream to the per-subcarrier composite
channel, removes the remaining interference by inverting the lower-triangular
product ``H_red @ Q_red`` and waterfills the power budget over every active
(stream, subcarrier) slot. Slots that receive no power are switched off for
the new stream. The projectors ``T`` (transmit side) and ``S_k`` (receive
side) are then shrunk so that later streams cannot interfere with the ones
already allocated.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .hybrid import (CombinerCollapseError, _assemble, hybrid_combiner,
                     hybrid_finalize, phase_project, quantize_phases,
                     rate_from_gains)
from .numerics import (DegenerateGainError, EmptySubspaceError,
                       dominant_singular_triplet, lower_triangular_inverse,
                       orthonormal_range, waterfilling)
from .state import (IterationRecord, LisaState, ProjectorState, Stream,
                    SubcarrierFactor)

__all__ = ["LisaOptions", "Candidate", "StageResult", "initial_state",
           "candidate_for_user", "select_user", "second_stage",
           "update_projectors", "subband_indices", "run_lisa",
           "FEASIBILITY_FLOOR"]

FEASIBILITY_FLOOR = 1e-10
# strict upper part below this (relative) counts as triangular
_TRIANGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class LisaOptions:
    """Run options.

    mode : ``"digital"`` (unconstrained precoders) or ``"hybrid"``.
    nu : projector relaxation threshold; 0 gives exact zero forcing in the
        first stage.
    n_subbands : number of representative subcarriers used for candidate
        selection (``None`` uses every subcarrier).
    ps_bits : phase-shifter resolution in hybrid mode (``None`` = ideal).
    norm_p : norm used to rank candidates.
    """
    mode: str = "digital"
    nu: float = 0.0
    n_subbands: Optional[int] = None
    ps_bits: Optional[int] = None
    norm_p: float = 1

    def __post_init__(self):
        if self.mode not in ("digital", "hybrid"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0.0 <= self.nu <= 1.0:
            raise ValueError("nu must lie in [0, 1]")
        if self.ps_bits is not None and self.ps_bits < 1:
            raise ValueError("ps_bits must be >= 1")


@dataclass
class Candidate:
    user: int
    g: np.ndarray
    q: np.ndarray
    mu: np.ndarray
    feasible: bool = True

    def score(self, p=1):
        return float(np.linalg.norm(self.mu, ord=p)) if self.feasible else -1.0


@dataclass
class StageResult:
    """Tentative outcome of the second stage for one candidate."""
    factors: list
    powers: list
    beta: np.ndarray
    sum_rate: float


def initial_state(n_tx, n_rx, n_users, n_subcarriers):
    return LisaState(
        projectors=ProjectorState.identity(n_tx, n_rx, n_users),
        factors=[SubcarrierFactor.empty(n_tx) for _ in range(n_subcarriers)],
        powers=[np.zeros(0) for _ in range(n_subcarriers)])


def subband_indices(L, L_s):
    """1-based representative subcarriers ``L/(2 L_s) + (n-1) L/L_s``.

    Non-integer positions are rounded half-up and clamped to ``[1, L]``.
    """
    if not 1 <= L_s <= L:
        raise ValueError(f"need 1 <= L_s <= L, got L_s={L_s}, L={L}")
    out = []
    for n in range(1, L_s + 1):
        x = Fraction(L, 2 * L_s) + (n - 1) * Fraction(L, L_s)
        out.append(min(max(math.floor(x + Fraction(1, 2)), 1), L))
    return out


def candidate_for_user(k, state, channels, ells):
    """Dominant combiner/precoder pair of user ``k`` on the subcarriers ``ells``.

    ``ells`` are 0-based subcarrier positions. The candidate is infeasible
    when the projected channel vanishes.
    """
    T = state.projectors.T
    S = state.projectors.S[k]
    Hp = S @ channels[k, ells] @ T                     # (|ells|, R, N)
    n_ells = len(ells)
    try:
        # [S H[l1] T, ..., S H[ln] T]  (R x n N)
        g = dominant_singular_triplet(
            Hp.transpose(1, 0, 2).reshape(Hp.shape[1], -1)).left
        rows = np.einsum("r,lrn->ln", g.conj(), Hp)    # T-block, (n, N)
        q = dominant_singular_triplet(rows).right
    except EmptySubspaceError:
        R, N = channels.shape[2:]
        return Candidate(k, np.zeros(R, complex), np.zeros(N, complex),
                         np.zeros(n_ells), feasible=False)
    mu = rows @ q
    feasible = np.sum(np.abs(mu)) >= FEASIBILITY_FLOOR * math.sqrt(
        channels.shape[1])
    return Candidate(k, g, q, mu, bool(feasible))


def select_user(candidates, p=1, exclude=()):
    """Index (into ``candidates``) of the best feasible candidate, or ``None``.

    Ties go to the lowest user index.
    """
    best, best_score = None, -1.0
    for idx, c in enumerate(candidates):
        if not c.feasible or c.user in exclude:
            continue
        s = c.score(p)
        if s > best_score:
            best, best_score = idx, s
    return best


def _zf_factor(rows, cols):
    """Factor, inverse and ZF gains of ``rows @ cols`` (``(f, inv, gains)``)."""
    F = rows @ cols
    scale = np.linalg.norm(F)
    if np.linalg.norm(np.triu(F, 1)) <= _TRIANGULAR_RTOL * scale:
        inv = lower_triangular_inverse(np.tril(F))
    else:
        s = np.linalg.svd(F, compute_uv=False)
        if s[0] == 0 or s[-1] <= 1e-12 * s[0]:
            raise DegenerateGainError("composite channel is singular")
        inv = np.linalg.inv(F)
    nrm = np.linalg.norm(cols @ inv, axis=0)
    return F, inv, 1.0 / nrm


def _extend_factor(fac, stream_idx, row, q):
    rows = np.vstack([fac.rows, row[None, :]])
    cols = np.column_stack([fac.cols, q])
    F, inv, lam = _zf_factor(rows, cols)
    return SubcarrierFactor(fac.active + [stream_idx], rows, cols, F, inv, lam)


def _waterfill_factors(factors, p_tx, noise_var):
    gains = np.concatenate([f.gains for f in factors])
    if gains.size == 0 or not np.any(gains > 0):
        return [np.zeros(f.size) for f in factors]
    flat = waterfilling(gains, noise_var, p_tx).powers
    out, off = [], 0
    for f in factors:
        out.append(flat[off:off + f.size])
        off += f.size
    return out


def second_stage(state, user, g, q, channels, p_tx, noise_var):
    """Tentatively add stream ``(user, g, q)`` on every subcarrier.

    Returns the extended factors, the waterfilled powers of all slots, the
    activity pattern of the new stream (``power > 0``) and the sum rate.
    Subcarriers where the new stream has a vanishing ZF gain keep their old
    factor and the new slot counts as zero gain.
    """
    L = channels.shape[1]
    idx = len(state.streams)
    rows = np.einsum("r,lrn->ln", g.conj(), channels[user])
    factors, added = [], np.zeros(L, dtype=bool)
    for ell, fac in enumerate(state.factors):
        try:
            factors.append(_extend_factor(fac, idx, rows[ell], q))
            added[ell] = True
        except DegenerateGainError:
            factors.append(fac)
    powers = _waterfill_factors(factors, p_tx, noise_var)
    beta = np.array([added[ell] and powers[ell][-1] > 0 for ell in range(L)])
    rate = rate_from_gains(np.concatenate([f.gains for f in factors]),
                           np.concatenate(powers), noise_var, L)
    return StageResult(factors, powers, beta, rate)


def update_projectors(projectors, user, g, channels, beta, nu=0.0):
    """Shrink ``T`` by the span of ``T H_user[l]^H g`` over active ``l``; remove ``g`` from ``S_user``.

    Returns ``(new_projectors, rank_of_removed_subspace)``.
    """
    T = projectors.T
    active = np.flatnonzero(beta)
    S = projectors.S.copy()
    S[user] = S[user] - np.outer(g, g.conj())
    S[user] = 0.5 * (S[user] + S[user].conj().T)
    if active.size == 0:
        return ProjectorState(T.copy(), S), 0
    cols = T @ np.einsum("lrn,r->nl", channels[user, active].conj(), g)
    U = _within_range(T, orthonormal_range(cols, nu))
    T_new = T - U @ U.conj().T
    T_new = 0.5 * (T_new + T_new.conj().T)
    return ProjectorState(T_new, S), U.shape[1]


def _within_range(T, U, keep=0.5):
    """Re-project ``U`` onto ``range(T)`` and re-orthonormalize.

    Numerical-rank directions near the noise floor are not exactly inside
    ``range(T)``; left alone they break idempotency of the update. Columns
    keeping less than ``keep`` of their norm under ``T`` are dropped.
    """
    for _ in range(2):
        V = T @ U
        norms = np.linalg.norm(V, axis=0)
        V = V[:, norms >= keep]
        if V.shape[1] == 0:
            return V
        U, R = np.linalg.qr(V)
        U = U[:, np.abs(np.diag(R)) >= keep * 1e-3]
    return U


def _rank(P):
    return int(round(np.real(np.trace(P))))


def run_lisa(channels, config, options=None, analog_override=None):
    """Greedy wideband allocation on a ``(K, L, R, N)`` channel tensor.

    ``config`` supplies ``rf_tx``, ``rf_rx``, ``p_tx`` and ``noise_var``;
    the subcarrier count is taken from ``channels``. ``analog_override``
    replaces the final analog precoder in hybrid mode (test hook).

    Returns
    -------
    Solution
        With the committed :class:`LisaState` attached as ``.state``.
    """
    options = options or LisaOptions()
    channels = np.asarray(channels)
    K, L, R, N = channels.shape
    state = initial_state(N, R, K, L)
    if options.n_subbands is None:
        ells = list(range(L))
    else:
        ells = [e - 1 for e in subband_indices(L, options.n_subbands)]
    hybrid = options.mode == "hybrid"

    while len(state.streams) < config.rf_tx and np.any(channels):
        state.iteration += 1
        full = {s.user for s in state.streams
                if state.streams_of(s.user) >= config.rf_rx}
        cands = [candidate_for_user(k, state, channels, ells)
                 if k not in full else None for k in range(K)]
        cands = [c for c in cands if c is not None]
        rank_t = _rank(state.projectors.T)
        chosen, g, g_a = None, None, None
        excluded = set()
        while True:
            pick = select_user(cands, options.norm_p, excluded)
            if pick is None:
                break
            c = cands[pick]
            if not hybrid:
                chosen, g = c, c.g
                break
            try:
                g, g_a = hybrid_combiner(c.g, state.projectors.S[c.user],
                                         bits=options.ps_bits)
                chosen = c
                break
            except CombinerCollapseError:
                excluded.add(c.user)
        if chosen is None:
            break

        stage = second_stage(state, chosen.user, g, chosen.q, channels,
                             config.p_tx, config.noise_var)
        factors, powers, rate = _commit_structure(
            state, stage, config.p_tx, config.noise_var)
        accepted = (stage.sum_rate > state.sum_rate
                    and rate > state.sum_rate and stage.beta.any())
        rec = IterationRecord(state.iteration, chosen.user, accepted,
                              rate if accepted else stage.sum_rate, rank_t)
        state.history.append(rec)
        if not accepted:
            break
        state.streams.append(Stream(chosen.user, chosen.q, g,
                                    stage.beta.copy(), g_a))
        state.factors, state.powers, state.sum_rate = factors, powers, rate
        state.projectors, rec.rank_pi = update_projectors(
            state.projectors, chosen.user, g, channels, stage.beta,
            options.nu)
        rec.T = state.projectors.T.copy()
        rec.S = state.projectors.S.copy()

    if hybrid and state.streams:
        if analog_override is not None:
            P_A = analog_override
        elif options.ps_bits is not None:
            P_A = quantize_phases(state.q_matrix(), options.ps_bits)
        else:
            P_A = phase_project(state.q_matrix())
        return hybrid_finalize(state, P_A, channels, config.p_tx,
                               config.noise_var)
    return digital_solution(state, config.noise_var)


def _commit_structure(state, stage, p_tx, noise_var):
    """Final factors/powers once the new stream's activity pattern is fixed.

    Subcarriers where the new stream is switched off fall back to their
    previous factor, which changes the ZF gains of the older streams there,
    so the budget is waterfilled again over the committed structure.
    """
    factors = [new if on else old for new, old, on in
               zip(stage.factors, state.factors, stage.beta)]
    if np.array_equal(stage.beta, [f.size > o.size for f, o in
                                   zip(stage.factors, state.factors)]):
        powers = stage.powers
    else:
        powers = _waterfill_factors(factors, p_tx, noise_var)
    rate = rate_from_gains(np.concatenate([f.gains for f in factors]),
                           np.concatenate(powers), noise_var, len(factors))
    return factors, powers, rate


def digital_solution(state, noise_var):
    """Solution with the unconstrained precoders ``Q_red L^-1 Lambda Gamma``."""
    Q = state.q_matrix()
    psis = [f.inverse * f.gains[None, :] for f in state.factors]
    gains_l = [f.gains for f in state.factors]
    flat = (np.concatenate(state.powers) if state.powers else np.zeros(0))
    return _assemble(state, "digital", Q, [list(f.active) for f in
                                           state.factors],
                     psis, gains_l, flat, noise_var)
