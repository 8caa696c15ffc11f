"""Range coding of integer symbols against 16-bit quantized CDF tables.

The coding kernels live in a compiled extension (``_rangecoder_ext``) when it
has been built, otherwise in the pure-Python module ``_rangecoder_py``. Both
produce identical bytes. ``BACKEND`` names the one selected at import; set
``PVSC_PURE_PYTHON=1`` to force the fallback.

Stream format: the coder's bytes only, ending with a 4-byte flush of the
state. The symbol count travels out of band.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _rangecoder_py

PREC = 16
TOTAL = 1 << PREC

_ext = None
if not os.environ.get("PVSC_PURE_PYTHON"):
    try:
        from . import _rangecoder_ext as _ext
    except ImportError:  # extension not built
        _ext = None

BACKEND = "cython" if _ext is not None else "python"
_kernels = _ext if _ext is not None else _rangecoder_py


def kernels(backend: Optional[str] = None):
    """Return the kernel module for ``backend`` ("cython", "python" or default)."""
    if backend is None:
        return _kernels
    if backend == "python":
        return _rangecoder_py
    if backend == "cython":
        if _ext is None:
            raise RuntimeError("compiled range coder extension is not available")
        return _ext
    raise ValueError(f"unknown backend {backend!r}")


@dataclass(frozen=True)
class CdfTables:
    """A stack of CDF tables.

    ``cdf[t, :sizes[t] + 1]`` is the cumulative frequency table of table ``t``
    (starting at 0, ending at 65536); entries past that are padding. Symbol
    ``sizes[t] - 1`` of every table is the escape.
    """

    cdf: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        cdf = np.asarray(self.cdf)
        sizes = np.asarray(self.sizes)
        if cdf.ndim != 2 or sizes.ndim != 1 or cdf.shape[0] != sizes.shape[0]:
            raise ValueError("cdf must be (n_tables, L) and sizes (n_tables,)")
        for t, size in enumerate(sizes):
            row = cdf[t, : size + 1]
            if size < 1 or row[0] != 0 or row[-1] != TOTAL or np.any(np.diff(row) <= 0):
                raise ValueError(f"cdf table {t} is not a strictly increasing 16-bit CDF")

    @property
    def n_tables(self) -> int:
        return int(self.sizes.shape[0])

    def freq(self, t: int, s: int) -> int:
        return int(self.cdf[t, s + 1] - self.cdf[t, s])


def pmf_to_cdf(pmf, escape_mass: float = 0.0) -> np.ndarray:
    """Quantize a PMF to an integer CDF of total 65536 with an escape slot appended.

    Every symbol (and the escape) gets frequency >= 1. Rounding residue goes
    to the most probable symbol.
    """
    p = np.asarray(pmf, dtype=np.float64)
    if p.ndim != 1 or p.size < 1 or np.any(p < 0) or not np.isfinite(p).all():
        raise ValueError("pmf must be a finite, non-negative 1-D array")
    m = p.size + 1
    if m > TOTAL:
        raise ValueError("alphabet too large for 16-bit precision")
    p = np.append(p, max(escape_mass, 0.0))
    s = p.sum()
    p = p / s if s > 0 else np.full(m, 1.0 / m)
    spare = TOTAL - m
    freq = 1 + np.floor(p * spare).astype(np.int64)
    freq[int(np.argmax(p))] += TOTAL - int(freq.sum())
    return np.concatenate([[0], np.cumsum(freq)]).astype(np.int64)


def stack_cdfs(cdfs) -> CdfTables:
    cdfs = [np.asarray(c, dtype=np.int64) for c in cdfs]
    width = max(c.size for c in cdfs)
    out = np.full((len(cdfs), width), TOTAL, dtype=np.int64)
    for t, c in enumerate(cdfs):
        out[t, : c.size] = c
    return CdfTables(out, np.array([c.size - 1 for c in cdfs], dtype=np.int64))


def _tables(cdfs) -> CdfTables:
    if isinstance(cdfs, CdfTables):
        return cdfs
    arr = np.asarray(cdfs)
    if arr.ndim == 1:
        return stack_cdfs([arr])
    return stack_cdfs(list(arr))


def _indexes(indexes, n: int, tables: CdfTables) -> np.ndarray:
    if indexes is None:
        if tables.n_tables != 1:
            raise ValueError("indexes are required with more than one CDF table")
        return np.zeros(n, dtype=np.int64)
    idx = np.asarray(indexes, dtype=np.int64).reshape(-1)
    if idx.size != n:
        raise ValueError(f"{idx.size} indexes for {n} symbols")
    if n and (idx.min() < 0 or idx.max() >= tables.n_tables):
        raise ValueError("cdf index out of range")
    return idx


def range_encode(symbols, cdfs, indexes=None, backend: Optional[str] = None) -> bytes:
    """Encode ``symbols[i]`` with table ``indexes[i]`` (table 0 if only one).

    Symbols outside a table's direct support ``[0, size - 1)`` are escape-coded.
    """
    tables = _tables(cdfs)
    sym = np.asarray(symbols, dtype=np.int64).reshape(-1)
    idx = _indexes(indexes, sym.size, tables)
    return kernels(backend).encode(sym, idx, tables.cdf, tables.sizes)


def range_decode(data: bytes, cdfs, n: int, indexes=None, backend: Optional[str] = None) -> np.ndarray:
    tables = _tables(cdfs)
    idx = _indexes(indexes, n, tables)
    out = kernels(backend).decode(data, idx, tables.cdf, tables.sizes, int(n))
    return np.asarray(out, dtype=np.int64)


def escape_bits(v: int, size: int) -> int:
    """Bypass bits spent on one escaped value (excluding the escape symbol)."""
    zz = (-2 * v - 1 if v < 0 else 2 * (v - (size - 1))) + 1
    return 2 * (zz.bit_length() - 1) + 1


def cross_entropy_bits(symbols, cdfs, indexes=None) -> float:
    """Ideal codelength of ``symbols`` under the quantized tables, escapes included."""
    tables = _tables(cdfs)
    sym = np.asarray(symbols, dtype=np.int64).reshape(-1)
    idx = _indexes(indexes, sym.size, tables)
    sizes = tables.sizes[idx]
    direct = (sym >= 0) & (sym < sizes - 1)
    s_eff = np.where(direct, sym, sizes - 1)
    freq = tables.cdf[idx, s_eff + 1] - tables.cdf[idx, s_eff]
    bits = float(np.sum(PREC - np.log2(freq)))
    for v, size in zip(sym[~direct], sizes[~direct]):
        bits += escape_bits(int(v), int(size))
    return bits
