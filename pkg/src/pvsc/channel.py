"""Wireless link simulation: AWGN and Rayleigh block fading with imperfect CSI.

Conventions
-----------
* Noise ``n ~ CN(0, sigma^2)``: ``sigma^2`` is the total complex variance, so the
  real and imaginary parts are each ``N(0, sigma^2 / 2)``.
* ``sigma^2 = E|h|^2 * P / 10^(snr_db / 10)`` with ``E|h|^2 = 1`` for both kinds.
* ``snr_db = inf`` disables the noise entirely (useful for alignment tests).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Tuple, Union

import numpy as np

EPS_ZF = 1e-6

KINDS = ("awgn", "rayleigh_block")


@dataclass(frozen=True)
class ChannelConfig:
    kind: str = "awgn"
    snr_db: float = 10.0
    coherence_len: int = 1
    # None means perfect CSI.
    csi_nmse_db: Optional[float] = None
    power: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"channel.kind must be one of {KINDS}, got {self.kind!r}")
        if int(self.coherence_len) < 1:
            raise ValueError("channel.coherence_len must be >= 1")
        if not self.power > 0:
            raise ValueError("channel.power must be > 0")
        if math.isnan(self.snr_db):
            raise ValueError("channel.snr_db must not be NaN")
        if self.csi_nmse_db is not None and not math.isfinite(self.csi_nmse_db):
            raise ValueError("channel.csi_nmse_db must be finite or 'perfect'")

    @property
    def noise_var(self) -> float:
        """Total complex noise variance for the configured SNR."""
        if self.snr_db == math.inf:
            return 0.0
        return self.power / 10.0 ** (self.snr_db / 10.0)

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelConfig":
        d = dict(d)
        nmse = d.get("csi_nmse_db")
        if isinstance(nmse, str):
            if nmse != "perfect":
                raise ValueError(f"channel.csi_nmse_db: expected number or 'perfect', got {nmse!r}")
            d["csi_nmse_db"] = None
        snr = d.get("snr_db")
        if isinstance(snr, str):
            if snr.lower() not in ("inf", "+inf", "infinity"):
                raise ValueError(f"channel.snr_db: expected number or 'inf', got {snr!r}")
            d["snr_db"] = math.inf
        unknown = set(d) - {"kind", "snr_db", "coherence_len", "csi_nmse_db", "power", "seed"}
        if unknown:
            raise ValueError(f"channel: unknown keys {sorted(unknown)}")
        if "coherence_len" in d:
            d["coherence_len"] = int(d["coherence_len"])
        for key in ("snr_db", "power"):
            if key in d:
                d[key] = float(d[key])
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["csi_nmse_db"] is None:
            d["csi_nmse_db"] = "perfect"
        if d["snr_db"] == math.inf:
            d["snr_db"] = "inf"
        return d


@dataclass
class ChannelRealization:
    h: np.ndarray
    h_est: np.ndarray
    noise: np.ndarray

    @property
    def err(self) -> np.ndarray:
        return self.h_est - self.h


def _as_symbols(s) -> np.ndarray:
    s = np.asarray(s, dtype=np.complex128).reshape(-1)
    if not np.all(np.isfinite(s)):
        raise ValueError("symbol vector contains non-finite values")
    return s


def complex_normal(rng: np.random.Generator, n: int, var: float) -> np.ndarray:
    """Draw ``n`` iid ``CN(0, var)`` samples."""
    scale = math.sqrt(var / 2.0)
    z = rng.standard_normal((n, 2))
    return scale * (z[:, 0] + 1j * z[:, 1])


def fading_gains(n: int, cfg: ChannelConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.kind == "awgn":
        return np.ones(n, dtype=np.complex128)
    n_blocks = -(-n // cfg.coherence_len)
    g = complex_normal(rng, n_blocks, 1.0)
    return np.repeat(g, cfg.coherence_len)[:n]


def corrupt_csi(h, nmse_db: Union[float, str, None], rng: np.random.Generator) -> np.ndarray:
    """Return ``h + e`` with ``e ~ CN(0, 10^(nmse_db/10))`` (unit-power channel)."""
    h = np.asarray(h, dtype=np.complex128)
    if nmse_db is None or nmse_db == "perfect":
        return h.copy()
    var_e = 10.0 ** (float(nmse_db) / 10.0)
    return h + complex_normal(rng, h.size, var_e).reshape(h.shape)


def transmit(s, cfg: ChannelConfig, rng: np.random.Generator) -> Tuple[np.ndarray, ChannelRealization]:
    """Pass symbols through ``h * s + n`` and draw the receiver's channel estimate.

    Draw order is fixed (gains, noise, estimation error) so results depend only
    on ``cfg`` and the generator state.
    """
    s = _as_symbols(s)
    n = s.size
    h = fading_gains(n, cfg, rng)
    var = cfg.noise_var
    noise = complex_normal(rng, n, var) if var > 0 else np.zeros(n, dtype=np.complex128)
    h_est = corrupt_csi(h, cfg.csi_nmse_db, rng)
    received = h * s + noise
    return received, ChannelRealization(h=h, h_est=h_est, noise=noise)


def zf_equalize(received, h_est, eps: float = EPS_ZF) -> Tuple[np.ndarray, int]:
    """Zero-forcing equalization ``conj(h) / |h|^2 * r``.

    Estimates with ``|h| <= eps`` are rescaled to magnitude ``eps`` (phase kept;
    an exact zero becomes ``eps``). Returns the equalized symbols and the number
    of clamped positions.
    """
    r = np.asarray(received, dtype=np.complex128)
    h = np.asarray(h_est, dtype=np.complex128)
    if r.shape != h.shape:
        raise ValueError(f"shape mismatch: received {r.shape} vs h_est {h.shape}")
    mag = np.abs(h)
    deep = mag <= eps
    n_clamped = int(np.count_nonzero(deep))
    if n_clamped:
        h = h.copy()
        nz = deep & (mag > 0)
        h[nz] = h[nz] / mag[nz] * eps
        h[deep & (mag == 0)] = eps
        mag = np.abs(h)
    return np.conj(h) / mag**2 * r, n_clamped


def mmse_equalize(received, h_est, noise_var: float) -> np.ndarray:
    """Scalar MMSE equalization ``conj(h) / (|h|^2 + noise_var) * r``."""
    if noise_var < 0:
        raise ValueError("noise_var must be >= 0")
    r = np.asarray(received, dtype=np.complex128)
    h = np.asarray(h_est, dtype=np.complex128)
    return np.conj(h) / (np.abs(h) ** 2 + noise_var) * r


def measure_snr(s, received, realization: ChannelRealization) -> float:
    """Empirical SNR in dB: ``10 log10(sum|h s|^2 / sum|n|^2)``; ``inf`` without noise."""
    s = np.asarray(s, dtype=np.complex128)
    received = np.asarray(received)
    if not (s.shape == received.shape == realization.h.shape == realization.noise.shape):
        raise ValueError("length mismatch between symbols, received and realization")
    noise_power = float(np.sum(np.abs(realization.noise) ** 2))
    if noise_power == 0.0:
        return math.inf
    signal_power = float(np.sum(np.abs(realization.h * s) ** 2))
    return 10.0 * math.log10(signal_power / noise_power)


def measure_nmse(h, h_est) -> float:
    """Empirical CSI NMSE in dB."""
    h = np.asarray(h)
    e = np.asarray(h_est) - h
    return 10.0 * math.log10(float(np.sum(np.abs(e) ** 2)) / float(np.sum(np.abs(h) ** 2)))
