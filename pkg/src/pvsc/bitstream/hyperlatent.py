"""Factorized-prior coding of the quantized hyper-latent."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from scipy.special import ndtr

from .rangecoder import CdfTables, cross_entropy_bits, pmf_to_cdf, range_decode, range_encode, stack_cdfs

Z_MAX = 64


def discretized_gaussian_pmf(mean: float, scale: float, z_max: int = Z_MAX) -> Tuple[np.ndarray, float]:
    """Bin masses of ``N(mean, scale^2)`` on ``-z_max..z_max`` and the leftover tail mass."""
    v = np.arange(-z_max, z_max + 1, dtype=np.float64)
    upper = ndtr((v + 0.5 - mean) / scale)
    lower = ndtr((v - 0.5 - mean) / scale)
    pmf = upper - lower
    tail = max(0.0, 1.0 - float(pmf.sum()))
    return pmf, tail


@dataclass
class FactorizedPrior:
    """Independent per-channel discretized gaussians, quantized to 16-bit CDFs.

    ``means`` / ``scales`` have one entry per hyper-latent channel. The
    alphabet is ``[-z_max, z_max]``; anything else is escape-coded.
    """

    means: np.ndarray
    scales: np.ndarray
    z_max: int = Z_MAX
    tables: CdfTables = field(init=False, repr=False)

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64).reshape(-1)
        self.scales = np.asarray(self.scales, dtype=np.float64).reshape(-1)
        if self.means.shape != self.scales.shape:
            raise ValueError("means and scales must have the same length")
        if np.any(~(self.scales > 0)):
            raise ValueError("prior scales must be > 0")
        cdfs = []
        cache = {}
        for m, s in zip(self.means, self.scales):
            key = (float(m), float(s))
            if key not in cache:
                pmf, tail = discretized_gaussian_pmf(m, s, self.z_max)
                cache[key] = pmf_to_cdf(pmf, escape_mass=tail)
            cdfs.append(cache[key])
        self.tables = stack_cdfs(cdfs)

    @classmethod
    def uniform_params(cls, channels: int, mean: float = 0.0, scale: float = 1.5,
                       z_max: int = Z_MAX) -> "FactorizedPrior":
        return cls(np.full(channels, mean), np.full(channels, scale), z_max)

    @property
    def channels(self) -> int:
        return int(self.means.size)

    def pmf(self, channel: int) -> np.ndarray:
        """Quantized probabilities of ``-z_max..z_max`` plus the escape, for one channel."""
        row = self.tables.cdf[channel, : self.tables.sizes[channel] + 1]
        return np.diff(row) / 65536.0

    def sample(self, shape: Sequence[int], rng: np.random.Generator) -> np.ndarray:
        """Draw in-alphabet integers from the quantized per-channel PMFs (last axis = channel)."""
        shape = tuple(shape)
        if shape[-1] != self.channels:
            raise ValueError("last axis must equal the number of prior channels")
        out = np.empty(shape, dtype=np.int64)
        values = np.arange(-self.z_max, self.z_max + 1)
        for c in range(self.channels):
            p = self.pmf(c)[:-1]
            out[..., c] = rng.choice(values, size=shape[:-1], p=p / p.sum())
        return out

    def _symbols(self, z) -> Tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z)
        if z.ndim != 3 or z.shape[-1] != self.channels:
            raise ValueError(f"hyper-latent must be (H_z, W_z, {self.channels}), got {z.shape}")
        if not np.all(np.round(z) == z):
            raise ValueError("hyper-latent must be integer-valued")
        flat = z.astype(np.int64).reshape(-1)
        idx = np.tile(np.arange(self.channels, dtype=np.int64), flat.size // self.channels)
        return flat + self.z_max, idx

    def neg_log2_prob(self, z) -> float:
        """Model codelength of ``z`` in bits (escapes at their bypass cost)."""
        sym, idx = self._symbols(z)
        return cross_entropy_bits(sym, self.tables, idx)


def encode_hyperlatent(z, prior: FactorizedPrior) -> bytes:
    sym, idx = prior._symbols(z)
    return range_encode(sym, prior.tables, idx)


def decode_hyperlatent(data: bytes, prior: FactorizedPrior, dims: Tuple[int, int, int]) -> np.ndarray:
    h, w, c = (int(d) for d in dims)
    if c != prior.channels:
        raise ValueError(f"dims declare {c} channels but the prior has {prior.channels}")
    n = h * w * c
    idx = np.tile(np.arange(c, dtype=np.int64), h * w)
    sym = range_decode(data, prior.tables, n, idx)
    return (sym - prior.z_max).reshape(h, w, c)
