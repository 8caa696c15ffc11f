"""Synthetic test sequences and planar 8-bit raw video I/O.

Frames are ``(H, W, C)`` float arrays on the 8-bit grid ``{0, 1/255, ..., 1}``.
Raw files store each frame as ``C`` consecutive ``H x W`` uint8 planes.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import List

import numpy as np

from .rng import substream

MOTIONS = ("static", "shift", "noise")


@dataclass(frozen=True)
class SyntheticSpec:
    height: int = 64
    width: int = 64
    channels: int = 1
    frames: int = 12
    motion: str = "static"
    dx: int = 1
    dy: int = 0
    sigma: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if min(self.height, self.width, self.channels, self.frames) < 1:
            raise ValueError("synthetic dims and frame count must be >= 1")
        if self.motion not in MOTIONS:
            raise ValueError(f"motion must be one of {MOTIONS}, got {self.motion!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"synthetic: unknown keys {sorted(unknown)}")
        d = dict(d)
        for key in ("height", "width", "channels", "frames", "dx", "dy", "seed"):
            if key in d:
                d[key] = int(d[key])
        if "sigma" in d:
            d["sigma"] = float(d["sigma"])
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def to_8bit_grid(x: np.ndarray) -> np.ndarray:
    return np.round(np.clip(x, 0.0, 1.0) * 255.0) / 255.0


def base_image(spec: SyntheticSpec) -> np.ndarray:
    """Smooth textured image: a few random plane waves plus a soft blob."""
    rng = substream(spec.seed, 0, "synthetic/base")
    yy, xx = np.mgrid[0 : spec.height, 0 : spec.width].astype(np.float64)
    img = np.zeros((spec.height, spec.width, spec.channels))
    for c in range(spec.channels):
        acc = np.zeros((spec.height, spec.width))
        for _ in range(6):
            fx, fy = rng.uniform(-0.12, 0.12, size=2)
            phase = rng.uniform(0, 2 * np.pi)
            acc += rng.uniform(0.3, 1.0) * np.cos(2 * np.pi * (fx * xx + fy * yy) + phase)
        cy, cx = rng.uniform(0, spec.height), rng.uniform(0, spec.width)
        r2 = ((yy - cy) ** 2 + (xx - cx) ** 2) / (0.1 * spec.height * spec.width + 1.0)
        acc += 2.0 * np.exp(-r2)
        acc -= acc.min()
        img[..., c] = 0.1 + 0.8 * acc / max(acc.max(), 1e-12)
    return to_8bit_grid(img)


def generate(spec: SyntheticSpec) -> List[np.ndarray]:
    if spec.motion == "noise":
        out = []
        for t in range(spec.frames):
            rng = substream(spec.seed, t, "synthetic/noise")
            f = 0.5 + spec.sigma * rng.standard_normal((spec.height, spec.width, spec.channels))
            out.append(to_8bit_grid(f))
        return out
    base = base_image(spec)
    if spec.motion == "static":
        return [base.copy() for _ in range(spec.frames)]
    return [np.roll(base, shift=(t * spec.dy, t * spec.dx), axis=(0, 1)) for t in range(spec.frames)]


def write_raw(path: str, frames: List[np.ndarray]):
    with open(path, "wb") as fh:
        for f in frames:
            planes = np.round(np.clip(f, 0, 1) * 255).astype(np.uint8).transpose(2, 0, 1)
            fh.write(np.ascontiguousarray(planes).tobytes())


def read_raw(path: str, height: int, width: int, channels: int, max_frames: int = 0) -> List[np.ndarray]:
    data = np.fromfile(path, dtype=np.uint8)
    frame_bytes = height * width * channels
    if data.size == 0 or data.size % frame_bytes:
        raise ValueError(f"{path}: size {data.size} is not a multiple of the {height}x{width}x{channels} frame size")
    n = data.size // frame_bytes
    if max_frames:
        n = min(n, max_frames)
    planes = data[: n * frame_bytes].reshape(n, channels, height, width)
    return [p.transpose(1, 2, 0).astype(np.float64) / 255.0 for p in planes]
