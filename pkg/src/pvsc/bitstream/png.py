"""Minimal 8-bit grayscale PNG codec for rate maps.

Encoder settings are fixed so that payload sizes are reproducible: colour
type 0, bit depth 8, no interlace, Paeth filter (type 4) on every row, a
single IDAT chunk compressed with zlib level 9 (default window and strategy).
The decoder accepts any non-interlaced 8-bit grayscale PNG and all five
filter types.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

SIGNATURE = b"\x89PNG\r\n\x1a\n"
ZLIB_LEVEL = 9


class PngError(ValueError):
    pass


def _chunk(tag: bytes, body: bytes) -> bytes:
    return struct.pack(">I", len(body)) + tag + body + struct.pack(">I", zlib.crc32(tag + body) & 0xFFFFFFFF)


def paeth_predictor(a, b, c):
    """Elementwise Paeth predictor on int arrays (left, up, upper-left)."""
    p = a + b - c
    pa = np.abs(p - a)
    pb = np.abs(p - b)
    pc = np.abs(p - c)
    return np.where((pa <= pb) & (pa <= pc), a, np.where(pb <= pc, b, c))


def paeth_filter(img: np.ndarray) -> np.ndarray:
    """Filter an ``(H, W)`` uint8 image; returns ``(H, W)`` filtered bytes."""
    x = img.astype(np.int16)
    up = np.zeros_like(x)
    up[1:] = x[:-1]
    left = np.zeros_like(x)
    left[:, 1:] = x[:, :-1]
    ul = np.zeros_like(x)
    ul[1:, 1:] = x[:-1, :-1]
    return ((x - paeth_predictor(left, up, ul)) & 0xFF).astype(np.uint8)


def _unfilter(raw: bytes, height: int, width: int) -> np.ndarray:
    stride = width + 1
    if len(raw) != height * stride:
        raise PngError(f"decompressed size {len(raw)} does not match {height}x{width} image")
    out = np.zeros((height, width), dtype=np.uint8)
    prev = [0] * width
    for y in range(height):
        ftype = raw[y * stride]
        line = raw[y * stride + 1 : (y + 1) * stride]
        cur = [0] * width
        if ftype == 0:
            cur = list(line)
        elif ftype == 1:
            left = 0
            for i in range(width):
                left = (line[i] + left) & 0xFF
                cur[i] = left
        elif ftype == 2:
            cur = [(line[i] + prev[i]) & 0xFF for i in range(width)]
        elif ftype == 3:
            left = 0
            for i in range(width):
                left = (line[i] + ((left + prev[i]) >> 1)) & 0xFF
                cur[i] = left
        elif ftype == 4:
            left = 0
            ul = 0
            for i in range(width):
                up = prev[i]
                p = left + up - ul
                pa, pb, pc = abs(p - left), abs(p - up), abs(p - ul)
                pred = left if (pa <= pb and pa <= pc) else (up if pb <= pc else ul)
                left = (line[i] + pred) & 0xFF
                cur[i] = left
                ul = up
        else:
            raise PngError(f"row {y}: unknown filter type {ftype}")
        out[y] = cur
        prev = cur
    return out


def encode_png_gray8(img) -> bytes:
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be a non-empty 2-D array")
    if np.any(img < 0) or np.any(img > 255) or np.any(np.round(img) != img):
        raise ValueError("pixel values must be integers in [0, 255]")
    img = img.astype(np.uint8)
    h, w = img.shape
    filtered = paeth_filter(img)
    rows = np.concatenate([np.full((h, 1), 4, dtype=np.uint8), filtered], axis=1)
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 0, 0, 0, 0)
    idat = zlib.compress(rows.tobytes(), ZLIB_LEVEL)
    return SIGNATURE + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", idat) + _chunk(b"IEND", b"")


def decode_png_gray8(data: bytes) -> np.ndarray:
    data = bytes(data)
    if not data.startswith(SIGNATURE):
        raise PngError("bad PNG signature")
    pos = len(SIGNATURE)
    header = None
    idat = []
    seen_end = False
    while pos < len(data):
        if pos + 8 > len(data):
            raise PngError(f"truncated chunk header at offset {pos}")
        (length,) = struct.unpack_from(">I", data, pos)
        tag = data[pos + 4 : pos + 8]
        body_end = pos + 8 + length
        if body_end + 4 > len(data):
            raise PngError(f"truncated {tag!r} chunk at offset {pos}")
        body = data[pos + 8 : body_end]
        (crc,) = struct.unpack_from(">I", data, body_end)
        if crc != zlib.crc32(tag + body) & 0xFFFFFFFF:
            raise PngError(f"CRC mismatch in {tag!r} chunk")
        if header is None and tag != b"IHDR":
            raise PngError("first chunk must be IHDR")
        if tag == b"IHDR":
            if header is not None or length != 13:
                raise PngError("malformed IHDR")
            header = struct.unpack(">IIBBBBB", body)
        elif tag == b"IDAT":
            idat.append(body)
        elif tag == b"IEND":
            seen_end = True
            pos = body_end + 4
            break
        elif not (tag[0] & 0x20):
            raise PngError(f"unsupported critical chunk {tag!r}")
        pos = body_end + 4
    if header is None or not seen_end:
        raise PngError("missing IHDR or IEND")
    if not idat:
        raise PngError("missing IDAT")
    w, h, depth, ctype, comp, filt, interlace = header
    if (depth, ctype, comp, filt, interlace) != (8, 0, 0, 0, 0):
        raise PngError("only 8-bit grayscale, non-interlaced PNG is supported")
    if w == 0 or h == 0:
        raise PngError("zero image dimension")
    try:
        raw = zlib.decompress(b"".join(idat))
    except zlib.error as exc:
        raise PngError(f"corrupt IDAT stream: {exc}") from exc
    return _unfilter(raw, h, w)


def encode_rate_map(k_map) -> bytes:
    """PNG-encode a grid of rate-set indices (each must fit in 8 bits)."""
    return encode_png_gray8(k_map)


def decode_rate_map(data: bytes) -> np.ndarray:
    return decode_png_gray8(data).astype(np.int64)
