"""Gaussian conditional entropy model for the semantic feature.

Feature grids are ``(H_y, W_y, C_y)`` float arrays. Quantization is centred on
the predicted mean in step units::

    ybar = round(y / w - mu)          ytilde = w * (ybar + mu)

and each quantized element costs ``-log2(Phi((ybar + 1/2)/sigma) - Phi((ybar - 1/2)/sigma))``
bits. The spatial partition is a two-colour checkerboard: cells with ``i + j``
even form block 0 (coded first), the rest form block 1.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Tuple

import numpy as np
from scipy.special import erf, erfc

SIGMA_FLOOR = 0.11
BITS_MAX = 32.0

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class EntropyConfig:
    eta: float = 0.2
    sigma_floor: float = SIGMA_FLOOR
    rho: float = 0.5
    beta: float = 1.0

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("entropy.eta must be > 0")
        if not self.sigma_floor > 0:
            raise ValueError("entropy.sigma_floor must be > 0")
        if not self.beta > 0:
            raise ValueError("entropy.beta must be > 0")

    @classmethod
    def from_dict(cls, d: dict) -> "EntropyConfig":
        unknown = set(d) - {"eta", "sigma_floor", "rho", "beta"}
        if unknown:
            raise ValueError(f"entropy: unknown keys {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def to_dict(self) -> dict:
        return asdict(self)


def round_half_away(x):
    """Nearest integer, ties away from zero (``np.round`` rounds ties to even)."""
    x = np.asarray(x, dtype=np.float64)
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def quantize_center(y, w, mu):
    w = np.asarray(w, dtype=np.float64)
    if np.any(~(w > 0)):
        raise ValueError("quantization step must be strictly positive")
    return round_half_away(np.asarray(y, dtype=np.float64) / w - mu)


def dequantize(ybar, w, mu):
    return np.asarray(w, dtype=np.float64) * (np.asarray(ybar, dtype=np.float64) + mu)


def bin_probability(ybar, sigma) -> Tuple[np.ndarray, np.ndarray]:
    """Return ``(p, 1 - p)`` for the unit bin centred at ``ybar`` under ``N(0, sigma^2)``.

    Both are evaluated without cancellation: tails use ``erfc`` differences,
    central bins use ``erf`` differences, and the complement is assembled from
    the two outer tails.
    """
    ybar = np.asarray(ybar, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    a = (ybar - 0.5) / sigma * _INV_SQRT2
    b = (ybar + 0.5) / sigma * _INV_SQRT2
    upper = a >= 0
    lower = b <= 0
    with np.errstate(invalid="ignore"):
        p_upper = 0.5 * (erfc(a) - erfc(b))
        p_lower = 0.5 * (erfc(-b) - erfc(-a))
        p_mid = 0.5 * (erf(b) - erf(a))
    p = np.where(upper, p_upper, np.where(lower, p_lower, p_mid))
    q = 0.5 * erfc(-a) + 0.5 * erfc(b)
    return p, q


def unit_bits(ybar, sigma, sigma_floor: float = SIGMA_FLOOR, bits_max: float = BITS_MAX):
    """Ideal codelength in bits of each quantized element, clamped to ``[0, bits_max]``."""
    sigma = np.maximum(np.asarray(sigma, dtype=np.float64), sigma_floor)
    p, q = bin_probability(ybar, sigma)
    with np.errstate(divide="ignore", invalid="ignore"):
        bits = np.where(p > 0.5, -np.log1p(-q) / _LN2, -np.log2(p))
    bits = np.where(np.isfinite(bits), bits, bits_max)
    return np.clip(bits, 0.0, bits_max)


def symbol_length_factor(ybar_unit, sigma_unit, cfg: EntropyConfig):
    """Raw (pre rate-matching) symbol-length factor: ``eta * sum_k bits``.

    Operates on the last axis, so a whole ``(H_y, W_y, C_y)`` grid yields the
    ``(H_y, W_y)`` map of factors.
    """
    bits = unit_bits(ybar_unit, sigma_unit, cfg.sigma_floor)
    return cfg.eta * np.sum(bits, axis=-1)


# --- checkerboard partition -------------------------------------------------


def checkerboard_mask(h: int, w: int) -> np.ndarray:
    """Boolean ``(h, w)`` mask, True on block-0 cells (``i + j`` even)."""
    i, j = np.indices((h, w))
    return (i + j) % 2 == 0


@dataclass
class CheckerboardBlocks:
    block0: np.ndarray  # (n0, C) cells with i+j even, row-major
    block1: np.ndarray  # (n1, C)
    shape: Tuple[int, ...]


def checkerboard_split(grid) -> CheckerboardBlocks:
    g = np.asarray(grid)
    squeeze = g.ndim == 2
    if squeeze:
        g = g[..., None]
    m = checkerboard_mask(*g.shape[:2])
    return CheckerboardBlocks(block0=g[m], block1=g[~m], shape=np.asarray(grid).shape)


def checkerboard_merge(blocks: CheckerboardBlocks) -> np.ndarray:
    shape = blocks.shape
    full = shape if len(shape) == 3 else (*shape, 1)
    dtype = np.result_type(blocks.block0, blocks.block1)
    out = np.empty(full, dtype=dtype)
    m = checkerboard_mask(*full[:2])
    out[m] = blocks.block0
    out[~m] = blocks.block1
    return out.reshape(shape)


def spatial_prior_predict(ybar0, mu0, sigma0, rho: float = 0.5, beta: float = 1.0,
                          sigma_floor: float = SIGMA_FLOOR):
    """Refine block-1 distribution parameters from the decoded block 0.

    For every block-1 cell, ``mu1 = mu0 + rho * mean(ybar0 + mu0)`` over its
    in-bounds 4-neighbours (all of which belong to block 0), and
    ``sigma1 = max(beta * sigma0, sigma_floor)``. Inputs are full
    ``(H, W, C)`` grids; only their block-0 cells are read. Block-0 cells of
    the returned grids keep ``mu0`` / ``sigma0``.
    """
    ybar0 = np.asarray(ybar0, dtype=np.float64)
    mu0 = np.asarray(mu0, dtype=np.float64)
    sigma0 = np.asarray(sigma0, dtype=np.float64)
    h, w = ybar0.shape[:2]
    m0 = checkerboard_mask(h, w)
    vals = np.where(m0[..., None], ybar0 + mu0, 0.0)
    cnt = m0.astype(np.float64)

    pv = np.pad(vals, ((1, 1), (1, 1), (0, 0)))
    pc = np.pad(cnt, 1)
    nsum = pv[:-2, 1:-1] + pv[2:, 1:-1] + pv[1:-1, :-2] + pv[1:-1, 2:]
    ncnt = pc[:-2, 1:-1] + pc[2:, 1:-1] + pc[1:-1, :-2] + pc[1:-1, 2:]
    nmean = np.divide(nsum, ncnt[..., None], out=np.zeros_like(nsum),
                      where=ncnt[..., None] > 0)

    m1 = ~m0[..., None]
    mu = np.where(m1, mu0 + rho * nmean, mu0)
    sigma = np.where(m1, np.maximum(beta * sigma0, sigma_floor), sigma0)
    return mu, sigma
