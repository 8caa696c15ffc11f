"""Side-link framing of the per-frame side information.

Layout (little-endian)::

    magic "PVSC" (4) | version u8 = 1 | frame_index u32 | power_scale f32
    | len_z u32 | payload_z | len_k u32 | payload_k
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

MAGIC = b"PVSC"
VERSION = 1
HEADER_LEN = 4 + 1 + 4 + 4
EMPTY_FRAME_LEN = HEADER_LEN + 4 + 4


class SideInfoError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class SideInfoFrame:
    frame_index: int
    payload_z: bytes
    payload_k: bytes
    power_scale: float

    def to_bytes(self) -> bytes:
        return frame_side_info(self.frame_index, self.payload_z, self.payload_k, self.power_scale)


def frame_side_info(frame_index: int, payload_z: bytes, payload_k: bytes, power_scale: float) -> bytes:
    if not 0 <= frame_index < 2**32:
        raise ValueError("frame_index must fit in u32")
    for name, p in (("payload_z", payload_z), ("payload_k", payload_k)):
        if len(p) >= 2**32:
            raise ValueError(f"{name} too long")
    return b"".join([
        MAGIC,
        struct.pack("<BIf", VERSION, frame_index, power_scale),
        struct.pack("<I", len(payload_z)), bytes(payload_z),
        struct.pack("<I", len(payload_k)), bytes(payload_k),
    ])


def parse_side_info(data: bytes) -> SideInfoFrame:
    data = bytes(data)
    if len(data) < 4 or data[:4] != MAGIC:
        raise SideInfoError("magic", "bad or missing magic")
    if len(data) < 5:
        raise SideInfoError("version", "truncated")
    if data[4] != VERSION:
        raise SideInfoError("version", f"unsupported version {data[4]}")
    if len(data) < 9:
        raise SideInfoError("frame_index", "truncated")
    if len(data) < HEADER_LEN:
        raise SideInfoError("power_scale", "truncated")
    _, frame_index, power_scale = struct.unpack_from("<BIf", data, 4)
    pos = HEADER_LEN
    payloads = []
    for name in ("z", "k"):
        if pos + 4 > len(data):
            raise SideInfoError(f"len_{name}", "truncated")
        (n,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + n > len(data):
            raise SideInfoError(f"payload_{name}", f"declares {n} bytes, {len(data) - pos} available")
        payloads.append(data[pos : pos + n])
        pos += n
    if pos != len(data):
        raise SideInfoError("payload_k", f"{len(data) - pos} trailing bytes")
    return SideInfoFrame(frame_index, payloads[0], payloads[1], power_scale)
