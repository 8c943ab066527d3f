"""Dense linear-algebra kernels shared by the allocation stages."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "EmptySubspaceError", "DegenerateGainError", "SingularTriplet",
    "PowerAllocation", "dominant_singular_triplet", "orthonormal_range",
    "waterfilling", "lower_triangular_inverse", "fix_phase",
]


class EmptySubspaceError(ValueError):
    """The matrix handed to an SVD-based step has no nonzero direction."""


class DegenerateGainError(ValueError):
    """A triangular factor has a (numerically) vanishing diagonal entry."""


@dataclass(frozen=True)
class SingularTriplet:
    sigma: float
    left: np.ndarray
    right: np.ndarray


@dataclass(frozen=True)
class PowerAllocation:
    powers: np.ndarray
    water_level: float


def fix_phase(vec, rtol=1e-8):
    """Unit phasor that makes the first non-negligible entry of ``vec`` real-positive."""
    mag = np.abs(vec)
    idx = int(np.argmax(mag > rtol * mag.max()))
    return np.conj(vec[idx]) / mag[idx]


def dominant_singular_triplet(M):
    """Largest singular value with its left/right singular vectors.

    The common phase of the pair is fixed so that the first non-negligible
    entry of the left vector is real and positive, which makes repeated
    calls and different LAPACK builds agree.

    Raises
    ------
    EmptySubspaceError
        If ``M`` is identically zero.
    """
    M = np.asarray(M)
    if M.size == 0 or not np.any(M):
        raise EmptySubspaceError("matrix has no nonzero entry")
    # work on the smaller Gram side when the matrix is very wide or tall
    m, n = M.shape
    if n > 4 * m:
        w, V = np.linalg.eigh(M @ M.conj().T)
        u = V[:, -1]
        v = M.conj().T @ u
        sigma = np.linalg.norm(v)
        v = v / sigma
    elif m > 4 * n:
        w, V = np.linalg.eigh(M.conj().T @ M)
        v = V[:, -1]
        u = M @ v
        sigma = np.linalg.norm(u)
        u = u / sigma
    else:
        U, s, Vh = np.linalg.svd(M, full_matrices=False)
        u, v, sigma = U[:, 0], Vh[0].conj(), s[0]
    if sigma == 0:
        raise EmptySubspaceError("matrix has no nonzero direction")
    ph = fix_phase(u)
    return SingularTriplet(float(sigma), u * ph, v * ph)


def orthonormal_range(columns, nu=0.0):
    """Orthonormal basis for the dominant column space of ``columns``.

    Keeps left singular vectors whose singular value is at least
    ``max(nu, max(shape) * eps) * sigma_max``. ``nu = 0`` gives the ordinary
    numerical-rank basis; ``nu = 1`` keeps only the dominant direction.

    Parameters
    ----------
    columns : array_like
        Either a 2-D array whose columns are the vectors, or a sequence of
        1-D vectors.
    nu : float
        Relative threshold in ``[0, 1]``.

    Returns
    -------
    np.ndarray
        ``n x r`` matrix with orthonormal columns (``r`` may be 0).
    """
    if not 0.0 <= nu <= 1.0:
        raise ValueError(f"nu must lie in [0, 1], got {nu}")
    if isinstance(columns, np.ndarray) and columns.ndim == 2:
        A = columns
    else:
        A = np.column_stack(list(columns))
    if A.size == 0 or not np.any(A):
        return np.zeros((A.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    floor = max(A.shape) * np.finfo(float).eps
    keep = s >= max(nu, floor) * s[0]
    keep[0] = True
    return U[:, keep]


def waterfilling(gains, noise, budget):
    """Sum-rate optimal power split over parallel scalar channels.

    Solves ``max sum log2(1 + gains**2 * p / noise)`` subject to
    ``sum p <= budget`` exactly: inverse levels ``noise / gains**2`` are
    sorted and the largest active set with a consistent water level is
    taken. Zero gains receive zero power.

    Returns
    -------
    PowerAllocation
        ``powers[m] = max(0, mu - noise / gains[m]**2)`` and the level ``mu``.
    """
    gains = np.asarray(gains, dtype=float)
    if budget <= 0:
        raise ValueError("budget must be positive")
    if np.any(gains < 0):
        raise ValueError("gains must be nonnegative")
    with np.errstate(divide="ignore", over="ignore"):
        inv_all = noise / gains ** 2
    # gains so small that the level overflows behave as zero gains
    pos = np.flatnonzero((gains > 0) & np.isfinite(inv_all))
    if pos.size == 0:
        raise ValueError("waterfilling needs at least one positive gain")
    inv = inv_all[pos]
    order = np.argsort(inv, kind="stable")
    # levels relative to the strongest slot avoid cancellation in mu - level
    base = inv[order[0]]
    levels = inv[order] - base
    csum = np.cumsum(levels)
    n = np.arange(1, levels.size + 1)
    mu_all = (budget + csum) / n
    # active set of size n is valid while mu exceeds its weakest level
    n_act = int(np.count_nonzero(mu_all > levels))
    mu = mu_all[n_act - 1]
    powers = np.zeros_like(gains)
    act = pos[order[:n_act]]
    powers[act] = mu - levels[:n_act]
    return PowerAllocation(powers, float(mu + base))


def lower_triangular_inverse(L, rtol=1e-12):
    """Inverse of a lower-triangular matrix by forward substitution.

    Raises
    ------
    DegenerateGainError
        If some ``|L[j, j]| <= rtol * ||L||``.
    """
    L = np.asarray(L)
    scale = np.linalg.norm(L)
    d = np.abs(np.diag(L))
    if L.shape[0] == 0:
        return L.copy()
    if scale == 0 or np.any(d <= rtol * scale):
        raise DegenerateGainError("triangular factor has a vanishing diagonal")
    eye = np.eye(L.shape[0], dtype=np.result_type(L, float))
    return np.tril(solve_triangular(L, eye, lower=True))
