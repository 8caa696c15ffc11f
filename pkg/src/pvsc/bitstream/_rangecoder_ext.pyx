# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled range coder kernels. Byte-identical to ``_rangecoder_py``."""

from libc.stdint cimport uint32_t, uint64_t, int64_t
from libc.stdlib cimport malloc, realloc, free

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    PREC = 16
    TOTAL = 65536
    HALF = 32768
    TOP = 16777216
    BOT = 65536
    MAX_EG_PREFIX = 62


cdef struct Enc:
    uint32_t low
    uint32_t rng
    unsigned char* buf
    Py_ssize_t n
    Py_ssize_t cap


cdef int _emit(Enc* e) except -1:
    cdef unsigned char* nb
    if e.n == e.cap:
        e.cap = e.cap * 2 + 64
        nb = <unsigned char*> realloc(e.buf, e.cap)
        if nb == NULL:
            raise MemoryError()
        e.buf = nb
    e.buf[e.n] = <unsigned char>(e.low >> 24)
    e.n += 1
    return 0


cdef int _put(Enc* e, uint32_t cum, uint32_t freq) except -1:
    cdef uint32_t r = e.rng >> PREC
    e.low = e.low + cum * r
    e.rng = freq * r
    while True:
        if (e.low ^ <uint32_t>(e.low + e.rng)) < TOP:
            pass
        elif e.rng < BOT:
            e.rng = (<uint32_t>(-e.low)) & (BOT - 1)
        else:
            break
        _emit(e)
        e.low = e.low << 8
        e.rng = e.rng << 8
    return 0


def encode(symbols, indexes, cdf, sizes):
    cdef const int64_t[:] sym = np.ascontiguousarray(symbols, dtype=np.int64)
    cdef const int64_t[:] idx = np.ascontiguousarray(indexes, dtype=np.int64)
    cdef const int64_t[:, :] tab = np.ascontiguousarray(cdf, dtype=np.int64)
    cdef const int64_t[:] sz = np.ascontiguousarray(sizes, dtype=np.int64)
    cdef Py_ssize_t i, n = sym.shape[0]
    cdef int64_t v, t, size, b
    cdef uint64_t zz
    cdef int nbits
    cdef uint32_t c0
    cdef Enc e
    e.low = 0
    e.rng = 0xFFFFFFFF
    e.cap = n // 2 + 64
    e.n = 0
    e.buf = <unsigned char*> malloc(e.cap)
    if e.buf == NULL:
        raise MemoryError()
    try:
        for i in range(n):
            v = sym[i]
            t = idx[i]
            size = sz[t]
            if 0 <= v < size - 1:
                c0 = <uint32_t> tab[t, v]
                _put(&e, c0, <uint32_t> tab[t, v + 1] - c0)
                continue
            c0 = <uint32_t> tab[t, size - 1]
            _put(&e, c0, TOTAL - c0)
            if v < 0:
                zz = <uint64_t>(-2 * v - 1) + 1
            else:
                zz = <uint64_t>(2 * (v - (size - 1))) + 1
            nbits = 0
            while (zz >> (nbits + 1)) != 0:
                nbits += 1
            if nbits > MAX_EG_PREFIX:
                raise OverflowError("escape value too large")
            for b in range(nbits):
                _put(&e, HALF, HALF)
            _put(&e, 0, HALF)
            for b in range(nbits - 1, -1, -1):
                _put(&e, <uint32_t>((zz >> b) & 1) * HALF, HALF)
        for b in range(4):
            _emit(&e)
            e.low = e.low << 8
        return bytes(e.buf[:e.n])
    finally:
        free(e.buf)


cdef struct Dec:
    uint32_t low
    uint32_t rng
    uint32_t code
    const unsigned char* buf
    Py_ssize_t n
    Py_ssize_t pos


cdef inline uint32_t _next(Dec* d):
    cdef uint32_t c = 0
    if d.pos < d.n:
        c = d.buf[d.pos]
    d.pos += 1
    return c


cdef int64_t _get(Dec* d, const int64_t* row, int64_t size) except -1:
    cdef uint32_t r = d.rng >> PREC
    cdef uint32_t value = (<uint32_t>(d.code - d.low)) // r
    cdef int64_t lo = 0, hi = size, mid
    if value >= TOTAL:
        raise ValueError("corrupt range-coded stream")
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if row[mid] <= value:
            lo = mid
        else:
            hi = mid
    d.low = d.low + <uint32_t> row[lo] * r
    d.rng = <uint32_t>(row[lo + 1] - row[lo]) * r
    while True:
        if (d.low ^ <uint32_t>(d.low + d.rng)) < TOP:
            pass
        elif d.rng < BOT:
            d.rng = (<uint32_t>(-d.low)) & (BOT - 1)
        else:
            break
        d.code = (d.code << 8) | _next(d)
        d.low = d.low << 8
        d.rng = d.rng << 8
    return lo


def decode(data, indexes, cdf, sizes, Py_ssize_t n):
    cdef const unsigned char[:] raw = bytes(data) if len(data) else b"\x00"
    cdef const int64_t[:] idx = np.ascontiguousarray(indexes, dtype=np.int64)
    cdef const int64_t[:, :] tab = np.ascontiguousarray(cdf, dtype=np.int64)
    cdef const int64_t[:] sz = np.ascontiguousarray(sizes, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.zeros(n, dtype=np.int64)
    cdef int64_t bypass[3]
    cdef Py_ssize_t i, k
    cdef int64_t t, size, s
    cdef uint64_t zz
    cdef int nbits
    cdef Dec d
    bypass[0] = 0
    bypass[1] = HALF
    bypass[2] = TOTAL
    d.buf = &raw[0]
    d.n = len(data)
    d.pos = 0
    d.code = 0
    d.low = 0
    d.rng = 0xFFFFFFFF
    for k in range(4):
        d.code = (d.code << 8) | _next(&d)
    for i in range(n):
        t = idx[i]
        size = sz[t]
        s = _get(&d, &tab[t, 0], size)
        if s < size - 1:
            out[i] = s
            continue
        nbits = 0
        while _get(&d, bypass, 2) == 1:
            nbits += 1
            if nbits > MAX_EG_PREFIX:
                raise ValueError("corrupt escape code")
        zz = 1
        for k in range(nbits):
            zz = (zz << 1) | <uint64_t> _get(&d, bypass, 2)
        zz -= 1
        if zz & 1:
            out[i] = -<int64_t>((zz + 1) >> 1)
        else:
            out[i] = <int64_t>(zz >> 1) + size - 1
    return out
