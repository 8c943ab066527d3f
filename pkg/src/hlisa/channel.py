"""Multipath ULA channel with beam squint.

Each user sees ``n_paths`` frequency-flat propagation paths. The steering
vectors are evaluated at the subcarrier frequency ``f_c + xi[l]``, so the
beam direction drifts across a wide band. With ``beam_squint=False`` every
subcarrier uses the carrier-frequency steering vectors instead.

Channel tensors produced here have shape ``(K, L, R, N)``: user, subcarrier,
receive antenna, transmit antenna. Subcarrier indices in the public API are
1-based to match the usual OFDM numbering; array axes are 0-based.
"""

import hashlib
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

__all__ = [
    "SystemConfig", "PathParams", "ChannelRealization", "subcarrier_offset",
    "subcarrier_offsets", "steering_vector", "squint_matrix",
    "generate_realization", "channel_matrix", "channel_tensor",
    "stacked_channel", "effective_rank", "SPEED_OF_LIGHT", "GAIN_MODES",
    "DEFAULT_GAIN_MODE",
]

SPEED_OF_LIGHT = 299_792_458.0

GAIN_MODES = ("flat", "delay-phase")
DEFAULT_GAIN_MODE = "delay-phase"


@dataclass(frozen=True)
class SystemConfig:
    """Scalar parameters of the downlink.

    ``spacing_m`` defaults to half a wavelength at the carrier. SNR is
    ``p_tx / noise_var``.
    """
    n_tx: int = 64
    n_rx: int = 16
    n_users: int = 4
    n_subcarriers: int = 32
    n_paths: int = 4
    rf_tx: int = 4
    rf_rx: int = 2
    carrier_hz: float = 28e9
    bandwidth_hz: float = 800e6
    spacing_m: Optional[float] = None
    p_tx: float = 1.0
    noise_var: float = 1.0
    beam_squint: bool = True

    def __post_init__(self):
        errors = self.violations()
        if errors:
            raise ValueError("invalid SystemConfig: " + "; ".join(errors))
        if self.spacing_m is None:
            object.__setattr__(self, "spacing_m",
                               SPEED_OF_LIGHT / (2.0 * self.carrier_hz))

    def violations(self):
        """Return a list of human-readable invariant violations."""
        out = []
        for name in ("n_tx", "n_rx", "n_users", "n_subcarriers", "n_paths",
                     "rf_tx", "rf_rx"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                out.append(f"{name} must be an integer >= 1 (got {value!r})")
        if self.rf_tx > self.n_tx:
            out.append(f"rf_tx <= n_tx violated ({self.rf_tx} > {self.n_tx})")
        if self.rf_rx > self.n_rx:
            out.append(f"rf_rx <= n_rx violated ({self.rf_rx} > {self.n_rx})")
        if self.bandwidth_hz < 0:
            out.append(f"bandwidth_hz >= 0 violated ({self.bandwidth_hz})")
        if not self.carrier_hz > self.bandwidth_hz / 2:
            out.append("carrier_hz > bandwidth_hz/2 violated "
                       f"({self.carrier_hz} vs {self.bandwidth_hz})")
        if not self.p_tx > 0:
            out.append(f"p_tx > 0 violated ({self.p_tx})")
        if not self.noise_var > 0:
            out.append(f"noise_var > 0 violated ({self.noise_var})")
        if self.spacing_m is not None and not self.spacing_m > 0:
            out.append(f"spacing_m > 0 violated ({self.spacing_m})")
        return out

    @property
    def snr(self):
        return self.p_tx / self.noise_var

    def with_snr_db(self, snr_db):
        """Copy with ``p_tx`` set so that ``p_tx / noise_var`` hits ``snr_db``."""
        return replace(self, p_tx=self.noise_var * 10.0 ** (snr_db / 10.0))


@dataclass(frozen=True)
class PathParams:
    aod: float
    aoa: float
    gain: complex
    delay: float = 0.0


@dataclass(frozen=True)
class ChannelRealization:
    """Per-user path parameters, stored as ``(K, n_paths)`` arrays."""
    config: SystemConfig
    aod: np.ndarray
    aoa: np.ndarray
    gain: np.ndarray
    delay: np.ndarray
    gain_mode: str = DEFAULT_GAIN_MODE
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.gain_mode not in GAIN_MODES:
            raise ValueError(f"unknown gain_mode {self.gain_mode!r}")
        shape = (self.config.n_users, self.config.n_paths)
        for name in ("aod", "aoa", "gain", "delay"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, "
                                 f"expected {shape}")
            arr.setflags(write=False)

    def paths(self, user):
        """Path list of one user (0-based index)."""
        return [PathParams(float(self.aod[user, p]), float(self.aoa[user, p]),
                           complex(self.gain[user, p]),
                           float(self.delay[user, p]))
                for p in range(self.config.n_paths)]

    def fingerprint(self):
        """Short hex digest identifying the realization."""
        h = hashlib.sha1()
        for arr in (self.aod, self.aoa, self.gain, self.delay):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(self.gain_mode.encode())
        return h.hexdigest()[:16]


def subcarrier_offset(ell, L, B):
    """Frequency offset ``(ell - (L+1)/2) * B/L`` of subcarrier ``ell`` (1-based)."""
    if not 1 <= ell <= L:
        raise IndexError(f"subcarrier index {ell} outside 1..{L}")
    return (ell - (L + 1) / 2.0) * B / L


def subcarrier_offsets(L, B):
    """Offsets of all ``L`` subcarriers as an array."""
    return (np.arange(1, L + 1) - (L + 1) / 2.0) * B / L


def steering_vector(n_elems, angle, wavenumber_spacing):
    """Unit-norm ULA response ``exp(j 2 pi kd sin(angle) m) / sqrt(n)``.

    ``wavenumber_spacing`` is the dimensionless product of the wavenumber
    ``f / c`` and the element spacing. Half-wavelength spacing at the
    operating frequency corresponds to ``0.5``.
    """
    m = np.arange(n_elems)
    return np.exp(2j * np.pi * wavenumber_spacing * np.sin(angle) * m) \
        / np.sqrt(n_elems)


def squint_matrix(n_elems, angle, offset_hz, spacing_m):
    """Diagonal phase correction mapping the carrier steering vector to ``f_c + offset``."""
    m = np.arange(n_elems)
    k_off = offset_hz / SPEED_OF_LIGHT
    return np.diag(np.exp(2j * np.pi * k_off * spacing_m * np.sin(angle) * m))


def generate_realization(config, seed, gain_mode=DEFAULT_GAIN_MODE):
    """Draw one channel realization deterministically from ``seed``.

    Angles are i.i.d. uniform on ``(-pi/2, pi/2)``, gains i.i.d.
    CN(0, N R / n_paths) so that ``E ||H_k[l]||_F^2 = N R``. Delays are
    uniform on ``[0, L/B]`` and only used in ``delay-phase`` mode.
    """
    rng = np.random.default_rng(seed)
    shape = (config.n_users, config.n_paths)
    aod = rng.uniform(-np.pi / 2, np.pi / 2, size=shape)
    aoa = rng.uniform(-np.pi / 2, np.pi / 2, size=shape)
    var = config.n_tx * config.n_rx / config.n_paths
    gain = np.sqrt(var / 2) * (rng.standard_normal(shape)
                               + 1j * rng.standard_normal(shape))
    if config.bandwidth_hz > 0:
        delay = rng.uniform(0.0, config.n_subcarriers / config.bandwidth_hz,
                            size=shape)
    else:
        delay = np.zeros(shape)
    return ChannelRealization(config, aod, aoa, gain, delay, gain_mode)


def _user_tensor(real, user):
    cfg = real.config
    L = cfg.n_subcarriers
    if cfg.beam_squint:
        freqs = cfg.carrier_hz + subcarrier_offsets(L, cfg.bandwidth_hz)
    else:
        freqs = np.full(L, cfg.carrier_hz)
    kd = freqs / SPEED_OF_LIGHT * cfg.spacing_m                 # (L,)
    mt = np.arange(cfg.n_tx)
    mr = np.arange(cfg.n_rx)
    # (L, P, N) and (L, P, R)
    a_bs = np.exp(2j * np.pi * kd[:, None, None]
                  * np.sin(real.aod[user])[None, :, None] * mt) \
        / np.sqrt(cfg.n_tx)
    a_ms = np.exp(2j * np.pi * kd[:, None, None]
                  * np.sin(real.aoa[user])[None, :, None] * mr) \
        / np.sqrt(cfg.n_rx)
    gains = np.broadcast_to(real.gain[user], (L, cfg.n_paths))
    if real.gain_mode == "delay-phase":
        xi = subcarrier_offsets(L, cfg.bandwidth_hz)
        gains = gains * np.exp(-2j * np.pi * xi[:, None]
                               * real.delay[user][None, :])
    return np.einsum("lp,lpr,lpn->lrn", gains, a_ms, a_bs.conj())


def channel_tensor(real):
    """All channel matrices as a ``(K, L, R, N)`` array (cached, read-only)."""
    if "tensor" not in real._cache:
        H = np.stack([_user_tensor(real, k)
                      for k in range(real.config.n_users)])
        H.setflags(write=False)
        real._cache["tensor"] = H
    return real._cache["tensor"]


def channel_matrix(real, user, ell):
    """``H_k[l]`` for 0-based ``user`` and 1-based subcarrier ``ell``."""
    cfg = real.config
    if not 0 <= user < cfg.n_users:
        raise IndexError(f"user index {user} outside 0..{cfg.n_users - 1}")
    if not 1 <= ell <= cfg.n_subcarriers:
        raise IndexError(f"subcarrier index {ell} outside "
                         f"1..{cfg.n_subcarriers}")
    return channel_tensor(real)[user, ell - 1]


def stacked_channel(real, user):
    """Vertical stack of ``H_k[1..L]``, shape ``(R L, N)``."""
    H = channel_tensor(real)[user]
    return H.reshape(-1, H.shape[-1])


def effective_rank(M, ratio=1.0 / 50.0):
    """Number of singular values of ``M`` that are at least ``ratio * sigma_max``."""
    s = np.linalg.svd(np.asarray(M), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s >= ratio * s[0]))
