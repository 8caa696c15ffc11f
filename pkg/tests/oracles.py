"""Independent reference implementations shared by the test modules."""

from __future__ import annotations

import math
import struct
import zlib

import mpmath
import numpy as np
from scipy.interpolate import PchipInterpolator

SIGMA_FLOOR = 0.11
BITS_MAX = 32.0


def mp_bits(ybar, sigma, floor=SIGMA_FLOOR, dps=50):
    """High-precision codelength of a unit bin under N(0, sigma), clamped to [0, 32]."""
    with mpmath.workdps(dps):
        s = max(sigma, floor)
        p = mpmath.ncdf((ybar + 0.5) / s) - mpmath.ncdf((ybar - 0.5) / s)
        if p <= 0:
            return BITS_MAX
        return float(min(max(-mpmath.log(p, 2), 0), BITS_MAX))


def validate_png(data: bytes):
    """Structural check: signature, chunk CRCs, IHDR first, IDAT present, IEND last.

    Returns ``(width, height)`` from IHDR.
    """
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    pos, tags = 8, []
    while pos < len(data):
        (n,) = struct.unpack(">I", data[pos : pos + 4])
        tag = data[pos + 4 : pos + 8]
        body = data[pos + 8 : pos + 8 + n]
        (crc,) = struct.unpack(">I", data[pos + 8 + n : pos + 12 + n])
        assert crc == zlib.crc32(tag + body) & 0xFFFFFFFF
        tags.append(tag)
        pos += 12 + n
    assert pos == len(data)
    assert tags[0] == b"IHDR" and tags[-1] == b"IEND" and b"IDAT" in tags
    idat = [i for i, t in enumerate(tags) if t == b"IDAT"]
    assert idat == list(range(idat[0], idat[-1] + 1))
    w, h, depth, ctype, comp, filt, lace = struct.unpack(">IIBBBBB", data[16:29])
    assert (depth, ctype, comp, filt, lace) == (8, 0, 0, 0, 0)
    return w, h


def shannon_bits(sym, tables, idx, escape_bits):
    """Codelength from the quantized frequencies; escaped values add their bypass bits."""
    total = 0.0
    for s, t in zip(sym, idx):
        size = int(tables.sizes[t])
        row = tables.cdf[t]
        if 0 <= s < size - 1:
            total += 16 - math.log2(int(row[s + 1] - row[s]))
        else:
            total += 16 - math.log2(int(row[size] - row[size - 1]))
            total += escape_bits(int(s), size)
    return total


def bd_dense(anchor, test, n=200001):
    """BD-CBR by trapezoid integration of scipy's PCHIP on a dense quality grid."""

    def curve(c):
        q = np.asarray(c.quality)
        return q, PchipInterpolator(q, np.log10(c.cbr))

    qa, fa = curve(anchor)
    qt, ft = curve(test)
    lo, hi = max(qa.min(), qt.min()), min(qa.max(), qt.max())
    g = np.linspace(lo, hi, n)
    diff = ft(g) - fa(g)
    delta = np.sum((diff[1:] + diff[:-1]) / 2 * np.diff(g)) / (hi - lo)
    return 100 * (10 ** delta - 1)


def ceil_half(k):
    return -(-np.asarray(k, dtype=np.int64) // 2)
