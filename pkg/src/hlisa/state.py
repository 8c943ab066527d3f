"""Containers passed between the allocation stages."""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

__all__ = ["Stream", "ProjectorState", "SubcarrierFactor", "LisaState",
           "IterationRecord", "Solution"]


@dataclass
class Stream:
    """One allocated data stream.

    ``g`` is the combiner actually used (phase-projected in hybrid mode);
    ``g_analog`` is its unit-modulus analog part, ``None`` in digital mode.
    """
    user: int
    q: np.ndarray
    g: np.ndarray
    beta: np.ndarray
    g_analog: Optional[np.ndarray] = None


@dataclass
class ProjectorState:
    T: np.ndarray
    S: np.ndarray  # (K, R, R)

    @classmethod
    def identity(cls, n_tx, n_rx, n_users):
        return cls(np.eye(n_tx, dtype=complex),
                   np.tile(np.eye(n_rx, dtype=complex), (n_users, 1, 1)))

    def copy(self):
        return ProjectorState(self.T.copy(), self.S.copy())


@dataclass
class SubcarrierFactor:
    """Reduced composite channel and ZF factor of one subcarrier.

    ``active`` lists the stream indices present on the subcarrier in
    allocation order; ``rows`` is ``H_red`` (d x N), ``cols`` is ``Q_red``
    (N x d), ``factor = rows @ cols`` and ``inverse`` its inverse.
    """
    active: List[int]
    rows: np.ndarray
    cols: np.ndarray
    factor: np.ndarray
    inverse: np.ndarray
    gains: np.ndarray

    @classmethod
    def empty(cls, n_tx):
        z = np.zeros((0, 0), dtype=complex)
        return cls([], np.zeros((0, n_tx), dtype=complex),
                   np.zeros((n_tx, 0), dtype=complex), z, z.copy(),
                   np.zeros(0))

    @property
    def size(self):
        return len(self.active)


@dataclass
class IterationRecord:
    iteration: int
    user: int
    accepted: bool
    sum_rate: float
    rank_t_before: int
    rank_pi: int = 0
    T: Optional[np.ndarray] = None
    S: Optional[np.ndarray] = None


@dataclass
class LisaState:
    projectors: ProjectorState
    factors: List[SubcarrierFactor]
    powers: List[np.ndarray]
    streams: List[Stream] = field(default_factory=list)
    sum_rate: float = 0.0
    iteration: int = 0
    history: List[IterationRecord] = field(default_factory=list)

    @property
    def n_subcarriers(self):
        return len(self.factors)

    def streams_of(self, user):
        return sum(1 for s in self.streams if s.user == user)

    def stream_counts(self):
        """``d[l]``: number of active streams per subcarrier."""
        return np.array([f.size for f in self.factors])

    def q_matrix(self):
        """Frequency-flat auxiliary precoders ``[q_1, ..., q_i]``."""
        n_tx = self.projectors.T.shape[0]
        if not self.streams:
            return np.zeros((n_tx, 0), dtype=complex)
        return np.column_stack([s.q for s in self.streams])


@dataclass
class Solution:
    """Final per-subcarrier precoders and combiners.

    The precoder of subcarrier ``l`` is ``analog @ digital[l]`` with
    ``analog`` frequency flat (``N x n_streams``) and ``digital[l]`` of size
    ``n_streams x d[l]``; column ``c`` serves stream ``active[l][c]``.
    ``directions[l]`` holds the same matrix before power scaling (unit-norm
    columns), so gains stay defined on zero-power slots.
    """
    mode: str
    streams: List[Stream]
    analog: np.ndarray
    digital: List[np.ndarray]
    directions: List[np.ndarray]
    active: List[List[int]]
    gains: np.ndarray
    powers: np.ndarray
    sum_rate: float
    noise_var: float
    dropped: List[tuple] = field(default_factory=list)
    state: Optional[LisaState] = field(default=None, repr=False)

    @property
    def n_streams(self):
        return len(self.streams)

    @property
    def n_subcarriers(self):
        return len(self.digital)

    def precoder(self, ell):
        """Effective ``N x d[l]`` precoder of 0-based subcarrier ``ell``."""
        return self.analog @ self.digital[ell]

    def beta(self):
        """``(n_streams, L)`` activity flags as used by the final precoders."""
        out = np.zeros((self.n_streams, self.n_subcarriers), dtype=bool)
        for ell, act in enumerate(self.active):
            out[act, ell] = True
        return out

    def filters(self, n_users=None):
        """Per-user effective precoders and combiners.

        Returns ``(P, W)`` where ``P[k][l]`` is ``N x n_k[l]`` and ``W[k][l]``
        is ``R x n_k[l]``, covering the streams of user ``k`` active on
        subcarrier ``l``.
        """
        if n_users is None:
            n_users = 1 + max((s.user for s in self.streams), default=-1)
        P = [[None] * self.n_subcarriers for _ in range(n_users)]
        W = [[None] * self.n_subcarriers for _ in range(n_users)]
        n_tx = self.analog.shape[0]
        n_rx = self.streams[0].g.shape[0] if self.streams else 0
        for ell, act in enumerate(self.active):
            prec = self.precoder(ell)
            for k in range(n_users):
                cols = [c for c, j in enumerate(act)
                        if self.streams[j].user == k]
                if cols:
                    P[k][ell] = prec[:, cols]
                    W[k][ell] = np.column_stack(
                        [self.streams[act[c]].g for c in cols])
                else:
                    P[k][ell] = np.zeros((n_tx, 0), dtype=complex)
                    W[k][ell] = np.zeros((n_rx, 0), dtype=complex)
        return P, W

    def subcarriers_off(self):
        """Number of (stream, subcarrier) slots switched off."""
        return int(self.n_streams * self.n_subcarriers - self.beta().sum())
