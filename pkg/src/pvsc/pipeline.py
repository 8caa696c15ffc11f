"""Per-frame transmission and reception, GOP handling and session state.

Transmitter order: context -> feature -> hyper-latent (quantize, code, decode)
-> checkerboard quantization -> symbol-length factors -> rate matching ->
rate-map PNG -> symbol mapping -> power normalization -> buffer update.

The receiver reverses it after parsing the side information. Both ends keep a
:class:`~pvsc.codec.ReferenceBuffer` and run the same reconstruction code, so
on a noiseless link the two buffers stay bit-identical.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .bitstream import (
    PngError, SideInfoError, SideInfoFrame, decode_hyperlatent, decode_rate_map,
    encode_hyperlatent, encode_rate_map, frame_side_info, parse_side_info,
)
from .channel import ChannelConfig, mmse_equalize, transmit, zf_equalize
from .codec import Codec, CodecConfig, ReferenceBuffer, pad_frame
from .entropy import EntropyConfig, symbol_length_factor
from .metrics import DEFAULT_SIDE_SPECTRAL_EFF, LinkReport, cbr, l1, mse, psnr, rate_loss
from .rate_control import RateSet, map_units, rate_match, symbol_count
from .rng import substream


class ProtocolError(ValueError):
    """Received symbol stream disagrees with the signalled rate map."""


class FrameError(RuntimeError):
    def __init__(self, frame_index: int, exc: BaseException):
        super().__init__(f"frame {frame_index}: {type(exc).__name__}: {exc}")
        self.frame_index = frame_index


@dataclass(frozen=True)
class SessionConfig:
    gop_len: int = 4
    frame_shape: Tuple[int, int, int] = (64, 64, 1)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    entropy: EntropyConfig = field(default_factory=EntropyConfig)
    rate_set: RateSet = field(default_factory=lambda: RateSet.parse("paper_iv_a"))
    codec: CodecConfig = field(default_factory=CodecConfig)
    side_spectral_eff: float = DEFAULT_SIDE_SPECTRAL_EFF
    equalizer: str = "zf"

    def __post_init__(self):
        if self.gop_len < 1:
            raise ValueError("session.gop_len must be >= 1")
        if not self.side_spectral_eff > 0:
            raise ValueError("session.side_spectral_eff must be > 0")
        if self.equalizer not in ("zf", "mmse"):
            raise ValueError("session.equalizer must be 'zf' or 'mmse'")
        if len(self.frame_shape) != 3 or min(self.frame_shape) < 1:
            raise ValueError("session.frame_shape must be (H, W, C) with positive entries")


class Session:
    """A configured codec plus geometry; cheap to share between tx and rx."""

    def __init__(self, cfg: SessionConfig):
        self.cfg = cfg
        self.codec = Codec(cfg.codec, cfg.entropy, cfg.rate_set, channels=cfg.frame_shape[2])
        self.multiple = 2 * cfg.codec.stride
        h, w, c = cfg.frame_shape
        self.padded_shape = (h + (-h) % self.multiple, w + (-w) % self.multiple, c)
        self.grid_shape = self.codec.grid_shape(self.padded_shape)
        self.hyper_shape = self.codec.hyper_shape(self.padded_shape)

    def new_buffer(self, side: str) -> ReferenceBuffer:
        return ReferenceBuffer.zeros(self.grid_shape, side)

    def crop(self, x: np.ndarray) -> np.ndarray:
        h, w, _ = self.cfg.frame_shape
        return x[:h, :w]


@dataclass
class FrameTransmission:
    symbols: np.ndarray
    side: SideInfoFrame
    side_bytes: bytes
    lengths: np.ndarray
    index_map: np.ndarray
    k_map: np.ndarray
    diagnostics: Dict[str, float] = field(default_factory=dict)
    tx_recon: Optional[np.ndarray] = None
    ideal_recon: Optional[np.ndarray] = None


@dataclass
class RxState:
    buffer: ReferenceBuffer
    last_recon: Optional[np.ndarray] = None


def power_normalize(s: np.ndarray, power: float) -> Tuple[np.ndarray, float]:
    """Scale so that the mean per-symbol power is ``power``; returns ``(s * a, a)``."""
    if s.size == 0:
        return s.copy(), 1.0
    p = float(np.mean(s.real ** 2 + s.imag ** 2))
    if p == 0.0:
        return s.copy(), 1.0
    a = math.sqrt(power / p)
    return s * a, a


def encode_frame(x: np.ndarray, tx_buffer: ReferenceBuffer, session: Session,
                 frame_index: int = 0) -> Tuple[FrameTransmission, ReferenceBuffer]:
    codec = session.codec
    cfg = session.cfg
    x = pad_frame(np.asarray(x, dtype=np.float64), session.multiple)

    ctx = codec.context_extract(tx_buffer.F)
    y = codec.feature_extract(x, ctx.c_f)
    z_hat = codec.hyper_quantize(codec.hyper_encode(y))
    payload_z = encode_hyperlatent(z_hat, codec.prior)
    params = codec.hyper_decode(z_hat, ctx.c_e)
    ybar, mu, sigma = codec.quantize(y, params)
    k_raw = symbol_length_factor(ybar, sigma, cfg.entropy)
    k_map, index_map = rate_match(k_raw, cfg.rate_set)
    payload_k = encode_rate_map(index_map)
    clean, lengths = map_units(ybar, index_map, codec.projector)
    tx_symbols, alpha = power_normalize(clean, cfg.channel.power)
    alpha32 = float(np.float32(alpha))
    side_bytes = frame_side_info(frame_index, payload_z, payload_k, alpha32)

    # The receiver divides by the f32 scale; feed the buffer update the same view.
    rec = codec.tx_buffer_update(tx_symbols / alpha32, index_map, z_hat, tx_buffer, frame_index)
    x_ideal, _ = codec.ideal_decode(ybar, params, mu, ctx.c_f)

    hyper_bits = codec.prior.neg_log2_prob(z_hat)
    diag = {
        "n_symbols": int(tx_symbols.size),
        "sum_k": int(k_map.sum()),
        "bits_z": 8 * len(payload_z),
        "bits_k": 8 * len(payload_k),
        "hyper_bits": hyper_bits,
        "rate_loss": rate_loss(k_map, 8 * len(payload_k), hyper_bits, cfg.entropy.eta),
        "power_scale": alpha32,
    }
    ft = FrameTransmission(
        symbols=tx_symbols, side=SideInfoFrame(frame_index, payload_z, payload_k, alpha32),
        side_bytes=side_bytes, lengths=lengths, index_map=index_map, k_map=k_map,
        diagnostics=diag, tx_recon=session.crop(rec.x_hat), ideal_recon=session.crop(x_ideal))
    return ft, rec.buffer


def decode_frame(received: np.ndarray, side_bytes: bytes, rx: RxState,
                 session: Session) -> Tuple[np.ndarray, RxState, bool]:
    """Reconstruct one frame; returns ``(x_hat, rx_state', lost)``.

    Unreadable side information marks the frame lost: buffers are left as they
    were and the previous reconstruction (or mid-grey) is repeated. A symbol
    count that disagrees with the decoded rate map raises :class:`ProtocolError`.
    """
    codec = session.codec
    try:
        side = parse_side_info(side_bytes)
        index_map = decode_rate_map(side.payload_k)
        if index_map.shape != session.grid_shape[:2] or index_map.max() >= len(session.cfg.rate_set):
            raise SideInfoError("payload_k", "rate map does not fit the session geometry")
        z_hat = decode_hyperlatent(side.payload_z, codec.prior, session.hyper_shape)
        if not (math.isfinite(side.power_scale) and side.power_scale > 0):
            raise SideInfoError("power_scale", "must be positive and finite")
    except (SideInfoError, PngError, ValueError):
        prev = rx.last_recon
        if prev is None:
            prev = np.full(session.cfg.frame_shape, 0.5)
        return prev, rx, True

    received = np.asarray(received, dtype=np.complex128).reshape(-1)
    need = int(symbol_count(session.cfg.rate_set.array[index_map]).sum())
    if received.size != need:
        raise ProtocolError(f"rate map requires {need} symbols, received {received.size}")
    rec = codec.reconstruct(received / np.float64(side.power_scale), index_map, z_hat,
                            rx.buffer, side.frame_index)
    x_hat = session.crop(rec.x_hat)
    return x_hat, RxState(buffer=rec.buffer, last_recon=x_hat), False


def equalize(received: np.ndarray, realization, session: Session) -> Tuple[np.ndarray, int]:
    if session.cfg.equalizer == "mmse":
        noise_var = session.cfg.channel.noise_var / session.cfg.channel.power
        return mmse_equalize(received, realization.h_est, noise_var), 0
    return zf_equalize(received, realization.h_est)


def write_capture(directory: str, frame_index: int, symbols: np.ndarray, side_bytes: bytes):
    """Store ``frame_%05d.sym`` (f32 interleaved re/im) and ``frame_%05d.side``."""
    os.makedirs(directory, exist_ok=True)
    inter = np.empty(2 * symbols.size, dtype="<f4")
    inter[0::2] = symbols.real
    inter[1::2] = symbols.imag
    base = os.path.join(directory, f"frame_{frame_index:05d}")
    with open(base + ".sym", "wb") as fh:
        fh.write(inter.tobytes())
    with open(base + ".side", "wb") as fh:
        fh.write(side_bytes)


def read_capture(directory: str, frame_index: int) -> Tuple[np.ndarray, bytes]:
    base = os.path.join(directory, f"frame_{frame_index:05d}")
    with open(base + ".sym", "rb") as fh:
        inter = np.frombuffer(fh.read(), dtype="<f4").astype(np.float64)
    with open(base + ".side", "rb") as fh:
        side = fh.read()
    return inter[0::2] + 1j * inter[1::2], side


@dataclass
class SequenceResult:
    reports: List[LinkReport]
    reconstructions: List[np.ndarray]


def run_sequence(frames: Iterable[np.ndarray], session: Session, seq_id: str = "seq",
                 capture_dir: Optional[str] = None,
                 keep_frames: bool = False) -> SequenceResult:
    """Encode, transmit, equalize and decode every frame; buffers reset per GOP."""
    cfg = session.cfg
    h, w, c = cfg.frame_shape
    reports: List[LinkReport] = []
    recons: List[np.ndarray] = []
    tx_buf = rx = None
    for t, x in enumerate(frames):
        try:
            x = np.asarray(x, dtype=np.float64)
            if x.shape != tuple(cfg.frame_shape):
                raise ValueError(f"frame shape {x.shape} != configured {tuple(cfg.frame_shape)}")
            if t % cfg.gop_len == 0:
                tx_buf = session.new_buffer("tx")
                rx = RxState(session.new_buffer("rx"), rx.last_recon if rx else None)
            ft, tx_buf = encode_frame(x, tx_buf, session, frame_index=t)
            if capture_dir:
                write_capture(capture_dir, t, ft.symbols, ft.side_bytes)
            rng = substream(cfg.channel.seed, t, f"{seq_id}/channel")
            received, real = transmit(ft.symbols, cfg.channel, rng)
            eq, clamps = equalize(received, real, session)
            x_hat, rx, lost = decode_frame(eq, ft.side_bytes, rx, session)
        except Exception as exc:  # attach frame context
            if isinstance(exc, FrameError):
                raise
            raise FrameError(t, exc) from exc

        d = ft.diagnostics
        side_bits = 8 * len(ft.side_bytes)
        diag = {
            "zf_clamps": clamps,
            "lost": int(lost),
            "ideal_psnr": psnr(x, ft.ideal_recon),
            "tx_psnr": psnr(x, ft.tx_recon),
            "buffer_divergence": float(np.sqrt(np.mean((tx_buf.F - rx.buffer.F) ** 2))),
            "bits_z": d["bits_z"],
            "bits_k": d["bits_k"],
        }
        reports.append(LinkReport(
            frame_index=t, l_t=int(d["n_symbols"]), side_bits=side_bits,
            cbr=cbr([d["n_symbols"]], [side_bits], (1, h, w, c), cfg.side_spectral_eff),
            psnr=psnr(x, x_hat), mse=mse(x, x_hat), l1=l1(x, x_hat),
            sum_k=int(d["sum_k"]), rate_loss=float(d["rate_loss"]), diagnostics=diag))
        if keep_frames:
            recons.append(x_hat)
    if not reports:
        raise ValueError("run_sequence needs at least one frame")
    return SequenceResult(reports, recons)
