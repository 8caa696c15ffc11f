"""Deterministic stand-ins for the neural transforms and the decoding branches.

Shapes: frames are ``(H, W, C)`` in ``[0, 1]``; features are
``(H/s, W/s, C_y)``; the hyper-latent is ``(H/(2s), W/(2s), C_z)``.

* Pixel transform ``A``: pixel-unshuffle by ``s`` then a seeded mixing matrix
  with orthonormal rows (``s*s*C -> C_y``), so ``A^-1 = M^T`` is an exact left
  inverse. Requires ``s*s*C <= C_y``.
* Temporal prediction is a scalar gain: ``y = A(x) / q_G0 - gamma * C_f`` and
  the generator undoes it with ``u = ytilde + gamma * C_f``.
* The buffered feature is a leaky accumulator
  ``F = q_G1 * (u + memory * (1 - gamma) * C_f)``; with ``memory = 0`` it is
  just the reconstruction ``u``. The accumulator makes the prediction error of
  a static scene shrink by roughly ``1 - gamma`` per frame instead of stalling
  after a single step.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from .bitstream.hyperlatent import FactorizedPrior
from .entropy import (
    EntropyConfig, checkerboard_mask, dequantize, quantize_center, round_half_away,
    spatial_prior_predict,
)
from .rate_control import RateSet, UnitProjector, unmap_units

# Scalar generator gain per quality preset; smaller gain -> larger features ->
# more bits and less distortion. Preset 4 is the highest quality.
PRESET_GAINS = (2.0, 1.4, 1.0, 0.7, 0.5)


@dataclass(frozen=True)
class CodecConfig:
    stride: int = 8
    gamma: float = 0.5
    delta: float = 0.3
    memory: float = 0.9
    preset_id: int = 2
    seed: int = 0
    c_y: int = 128
    c_z: int = 128
    w_min: float = 0.05
    w_slope: float = 0.0
    sigma_gain: float = 1.25
    hyper_gain: float = 8.0
    prior_scale: float = 1.5
    rate_embeddings: bool = False

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("codec.stride must be >= 1")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("codec.gamma must lie in [0, 1)")
        if not 0.0 <= self.memory < 1.0:
            raise ValueError("codec.memory must lie in [0, 1)")
        if not 0 <= self.preset_id < len(PRESET_GAINS):
            raise ValueError(f"codec.preset_id must be in 0..{len(PRESET_GAINS) - 1}")
        if not self.w_min > 0 or self.w_slope < 0:
            raise ValueError("codec.w_min must be > 0 and codec.w_slope >= 0")
        if self.c_z < self.c_y:
            raise ValueError("codec.c_z must be >= codec.c_y")

    @classmethod
    def from_dict(cls, d: dict) -> "CodecConfig":
        names = set(cls.__dataclass_fields__)
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"codec: unknown keys {sorted(unknown)}")
        out = {}
        for k, v in d.items():
            t = cls.__dataclass_fields__[k].type
            out[k] = bool(v) if t == "bool" else (int(v) if t == "int" else float(v))
        return cls(**out)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PresetVector:
    q_ext_c: np.ndarray
    q_ext_f: np.ndarray
    q_g0: np.ndarray
    q_g1: np.ndarray
    preset_id: int = -1

    def __post_init__(self):
        for name in ("q_ext_c", "q_ext_f", "q_g0", "q_g1"):
            if np.any(~(np.asarray(getattr(self, name)) > 0)):
                raise ValueError(f"preset vector {name} must be strictly positive")

    @classmethod
    def unit(cls, c_y: int) -> "PresetVector":
        one = np.ones(c_y)
        return cls(one, one, one, one, preset_id=-1)

    @classmethod
    def from_id(cls, preset_id: int, c_y: int) -> "PresetVector":
        one = np.ones(c_y)
        return cls(one, one, np.full(c_y, PRESET_GAINS[preset_id]), one, preset_id=preset_id)


@dataclass
class ContextPair:
    c_e: np.ndarray
    c_f: np.ndarray


@dataclass
class GaussianParams:
    w: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray


@dataclass
class ReferenceBuffer:
    F: np.ndarray
    C_s: np.ndarray
    side: str = "tx"
    frame_index: int = -1

    @classmethod
    def zeros(cls, grid_shape: Tuple[int, int, int], side: str) -> "ReferenceBuffer":
        return cls(np.zeros(grid_shape), np.zeros(grid_shape), side=side)

    def copy(self) -> "ReferenceBuffer":
        return ReferenceBuffer(self.F.copy(), self.C_s.copy(), self.side, self.frame_index)


@dataclass
class Reconstruction:
    x_hat: np.ndarray
    buffer: ReferenceBuffer
    ybar: np.ndarray
    ytilde: np.ndarray


def _semi_orthonormal(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """``(rows, cols)`` matrix with orthonormal rows (``rows <= cols``)."""
    q, r = np.linalg.qr(rng.standard_normal((cols, rows)))
    return (q * np.sign(np.diag(r))).T


def dct_basis(s: int, c: int) -> np.ndarray:
    """Orthonormal 2-D DCT-II basis of an ``(s, s, c)`` patch, rows ordered low to high frequency."""
    n = np.arange(s)
    t = np.sqrt(2.0 / s) * np.cos(np.pi * (2 * n[None, :] + 1) * n[:, None] / (2 * s))
    t[0] /= np.sqrt(2.0)
    keys = sorted(((u + v, u, v, ch) for u in range(s) for v in range(s) for ch in range(c)))
    rows = []
    for _, u, v, ch in keys:
        e = np.zeros((s, s, c))
        e[:, :, ch] = np.outer(t[u], t[v])
        rows.append(e.reshape(-1))
    return np.stack(rows)


def pixel_unshuffle(x: np.ndarray, s: int) -> np.ndarray:
    h, w, c = x.shape
    return x.reshape(h // s, s, w // s, s, c).transpose(0, 2, 1, 3, 4).reshape(h // s, w // s, s * s * c)


def pixel_shuffle(p: np.ndarray, s: int, c: int) -> np.ndarray:
    hy, wy, _ = p.shape
    return p.reshape(hy, wy, s, s, c).transpose(0, 2, 1, 3, 4).reshape(hy * s, wy * s, c)


class Codec:
    """Bundle of the toy transforms for one session geometry.

    ``channels`` is the frame colour count; frame height and width must be
    multiples of ``2 * stride`` (see :func:`pad_frame`).
    """

    def __init__(self, cfg: CodecConfig, entropy: EntropyConfig, rate_set: RateSet,
                 channels: int = 1, preset: Optional[PresetVector] = None):
        self.cfg = cfg
        self.entropy = entropy
        self.rate_set = rate_set
        self.channels = channels
        s = cfg.stride
        self.patch = s * s * channels
        if self.patch > cfg.c_y:
            raise ValueError(
                f"stride {s} with {channels} channel(s) gives {self.patch} coefficients per "
                f"unit, more than C_y={cfg.c_y}; lower the stride or raise C_y")
        rate_set.check_fits(cfg.c_y)
        rng = np.random.default_rng([cfg.seed, 0xA11CE])
        self.mix = _semi_orthonormal(self.patch, cfg.c_y, rng)
        self.hyper_mix = _semi_orthonormal(cfg.c_y, cfg.c_z, rng)
        self.preset = preset if preset is not None else PresetVector.from_id(cfg.preset_id, cfg.c_y)
        basis = self.mix.T @ dct_basis(s, channels).T
        self.projector = UnitProjector(rate_set, cfg.c_y, seed=cfg.seed,
                                       use_embeddings=cfg.rate_embeddings, subspace=basis,
                                       ordered=True)
        self.prior = FactorizedPrior.uniform_params(cfg.c_z, 0.0, cfg.prior_scale)

    # -- geometry --------------------------------------------------------

    def grid_shape(self, frame_shape) -> Tuple[int, int, int]:
        h, w = frame_shape[:2]
        s = self.cfg.stride
        return (h // s, w // s, self.cfg.c_y)

    def hyper_shape(self, frame_shape) -> Tuple[int, int, int]:
        hy, wy, _ = self.grid_shape(frame_shape)
        return (hy // 2, wy // 2, self.cfg.c_z)

    def check_frame(self, x: np.ndarray):
        h, w, c = x.shape
        m = 2 * self.cfg.stride
        if h % m or w % m:
            raise ValueError(f"frame {h}x{w} is not a multiple of {m}; pad it first")
        if c != self.channels:
            raise ValueError(f"frame has {c} channels, codec expects {self.channels}")

    # -- transforms ------------------------------------------------------

    def analysis(self, x: np.ndarray) -> np.ndarray:
        return pixel_unshuffle(np.asarray(x, dtype=np.float64), self.cfg.stride) @ self.mix

    def synthesis(self, y: np.ndarray) -> np.ndarray:
        return pixel_shuffle(y @ self.mix.T, self.cfg.stride, self.channels)

    def context_extract(self, F: np.ndarray, preset: Optional[PresetVector] = None) -> ContextPair:
        p = preset or self.preset
        return ContextPair(c_e=p.q_ext_c * F, c_f=p.q_ext_f * F)

    def feature_extract(self, x: np.ndarray, c_f: np.ndarray,
                        preset: Optional[PresetVector] = None) -> np.ndarray:
        p = preset or self.preset
        self.check_frame(np.asarray(x))
        return self.analysis(x) / p.q_g0 - self.cfg.gamma * c_f

    def hyper_encode(self, y: np.ndarray) -> np.ndarray:
        a = np.abs(y)
        hy, wy, c = a.shape
        pooled = a.reshape(hy // 2, 2, wy // 2, 2, c).mean(axis=(1, 3))
        return self.cfg.hyper_gain * (pooled @ self.hyper_mix)

    @staticmethod
    def hyper_quantize(z: np.ndarray) -> np.ndarray:
        return round_half_away(z)

    def hyper_decode(self, z_hat: np.ndarray, c_e: np.ndarray) -> GaussianParams:
        cfg = self.cfg
        v = np.maximum(z_hat @ self.hyper_mix.T / cfg.hyper_gain, 0.0)
        v = np.repeat(np.repeat(v, 2, axis=0), 2, axis=1)
        w = cfg.w_min + cfg.w_slope * v
        sigma = np.maximum(cfg.sigma_gain * v / w, self.entropy.sigma_floor)
        mu = cfg.delta * c_e
        return GaussianParams(w=w, mu=mu, sigma=sigma)

    def generate(self, ytilde: np.ndarray, c_f: np.ndarray,
                 preset: Optional[PresetVector] = None) -> Tuple[np.ndarray, np.ndarray]:
        p = preset or self.preset
        cfg = self.cfg
        u = ytilde + cfg.gamma * c_f
        x_hat = np.clip(self.synthesis(p.q_g0 * u), 0.0, 1.0)
        F = p.q_g1 * (u + cfg.memory * (1.0 - cfg.gamma) * c_f)
        return x_hat, F

    # -- quantization with the checkerboard prior -------------------------

    def spatial_prior(self, ybar: np.ndarray, params: GaussianParams) -> Tuple[np.ndarray, np.ndarray]:
        e = self.entropy
        return spatial_prior_predict(ybar, params.mu, params.sigma, e.rho, e.beta, e.sigma_floor)

    def quantize(self, y: np.ndarray, params: GaussianParams):
        """Two-pass checkerboard quantization; returns ``(ybar, mu, sigma)`` full grids."""
        m0 = checkerboard_mask(*y.shape[:2])[..., None]
        ybar0 = np.where(m0, quantize_center(y, params.w, params.mu), 0.0)
        mu, sigma = self.spatial_prior(ybar0, params)
        ybar = np.where(m0, ybar0, quantize_center(y, params.w, mu))
        return ybar, mu, sigma

    # -- decoding branches -----------------------------------------------

    def reconstruct(self, symbols: np.ndarray, index_map: np.ndarray, z_hat: np.ndarray,
                    buffer: ReferenceBuffer, frame_index: int = -1) -> Reconstruction:
        """Receiver path shared by the receiver and the transmitter buffer update."""
        ctx = self.context_extract(buffer.F)
        params = self.hyper_decode(z_hat, ctx.c_e)
        ybar = unmap_units(symbols, index_map, self.projector)
        mu, _ = self.spatial_prior(ybar, params)
        ytilde = dequantize(ybar, params.w, mu)
        x_hat, F = self.generate(ytilde, ctx.c_f)
        new = ReferenceBuffer(F=F, C_s=ybar, side=buffer.side, frame_index=frame_index)
        return Reconstruction(x_hat=x_hat, buffer=new, ybar=ybar, ytilde=ytilde)

    def tx_buffer_update(self, symbols_clean: np.ndarray, index_map: np.ndarray, z_hat: np.ndarray,
                         tx_buffer: ReferenceBuffer, frame_index: int = -1) -> Reconstruction:
        """Run the receiver path on the ideal-channel view of the transmitted symbols."""
        return self.reconstruct(symbols_clean, index_map, z_hat, tx_buffer, frame_index)

    def ideal_decode(self, ybar: np.ndarray, params: GaussianParams, mu_all: np.ndarray,
                     c_f: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Decode directly from the quantized feature, bypassing symbol mapping."""
        return self.generate(dequantize(ybar, params.w, mu_all), c_f)


def pad_frame(x: np.ndarray, multiple: int) -> np.ndarray:
    """Edge-replicate pad ``(H, W, C)`` up to multiples of ``multiple``."""
    h, w = x.shape[:2]
    ph = (-h) % multiple
    pw = (-w) % multiple
    if not (ph or pw):
        return x
    return np.pad(x, ((0, ph), (0, pw), (0, 0)), mode="edge")
