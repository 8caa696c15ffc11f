"""Pure-Python range coder kernels (fallback for the compiled extension).

Carry-less 32-bit range coder with 16-bit cumulative frequencies. Each table
row holds a CDF ``cdf[0] = 0 < ... < cdf[size] = 65536``; the last symbol of
every table is the escape. Values outside ``[0, size - 1)`` are sent as the
escape followed by a bypass-coded Exp-Golomb word.

The byte stream produced here is the reference; the extension must match it
bit for bit.
"""

PREC = 16
TOTAL = 1 << PREC
TOP = 1 << 24
BOT = 1 << 16
MASK32 = 0xFFFFFFFF
HALF = TOTAL >> 1
MAX_EG_PREFIX = 62


def _zigzag_escape(v, size):
    # Maps out-of-range values onto 0, 1, 2, ...
    if v < 0:
        return -2 * v - 1
    return 2 * (v - (size - 1))


def _unzigzag_escape(zz, size):
    if zz & 1:
        return -((zz + 1) >> 1)
    return (zz >> 1) + size - 1


def _rows(cdf, sizes):
    return [[int(c) for c in cdf[t][: int(sizes[t]) + 1]] for t in range(len(sizes))]


def encode(symbols, indexes, cdf, sizes):
    rows = _rows(cdf, sizes)
    out = bytearray()
    low = 0
    rng = MASK32

    def put(cum, freq):
        nonlocal low, rng
        r = rng >> PREC
        low = (low + cum * r) & MASK32
        rng = freq * r
        while True:
            if (low ^ (low + rng)) < TOP:
                pass
            elif rng < BOT:
                rng = (-low) & (BOT - 1)
            else:
                break
            out.append(low >> 24)
            low = (low << 8) & MASK32
            rng = (rng << 8) & MASK32

    for i in range(len(symbols)):
        v = int(symbols[i])
        t = int(indexes[i])
        row = rows[t]
        size = len(row) - 1
        if 0 <= v < size - 1:
            c0 = row[v]
            put(c0, row[v + 1] - c0)
            continue
        c0 = row[size - 1]
        put(c0, TOTAL - c0)
        zz = _zigzag_escape(v, size) + 1
        nbits = zz.bit_length() - 1
        if nbits > MAX_EG_PREFIX:
            raise OverflowError("escape value too large")
        for _ in range(nbits):
            put(HALF, HALF)
        put(0, HALF)
        for b in range(nbits - 1, -1, -1):
            put(((zz >> b) & 1) * HALF, HALF)

    for _ in range(4):
        out.append(low >> 24)
        low = (low << 8) & MASK32
    return bytes(out)


def decode(data, indexes, cdf, sizes, n):
    rows = _rows(cdf, sizes)
    buf = bytes(data)
    nbuf = len(buf)
    pos = 0
    code = 0
    for _ in range(4):
        code = (code << 8) | (buf[pos] if pos < nbuf else 0)
        pos += 1
    low = 0
    rng = MASK32
    out = [0] * n

    def get(row, size):
        # Returns the decoded symbol index within ``row``.
        nonlocal low, rng, code, pos
        r = rng >> PREC
        value = ((code - low) & MASK32) // r
        if value >= TOTAL:
            raise ValueError("corrupt range-coded stream")
        lo, hi = 0, size
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if row[mid] <= value:
                lo = mid
            else:
                hi = mid
        c0 = row[lo]
        c1 = row[lo + 1]
        low = (low + c0 * r) & MASK32
        rng = (c1 - c0) * r
        while True:
            if (low ^ (low + rng)) < TOP:
                pass
            elif rng < BOT:
                rng = (-low) & (BOT - 1)
            else:
                break
            code = ((code << 8) & MASK32) | (buf[pos] if pos < nbuf else 0)
            pos += 1
            low = (low << 8) & MASK32
            rng = (rng << 8) & MASK32
        return lo

    bypass = (0, HALF, TOTAL)
    for i in range(n):
        t = int(indexes[i])
        row = rows[t]
        size = len(row) - 1
        s = get(row, size)
        if s < size - 1:
            out[i] = s
            continue
        nbits = 0
        while get(bypass, 2) == 1:
            nbits += 1
            if nbits > MAX_EG_PREFIX:
                raise ValueError("corrupt escape code")
        zz = 1
        for _ in range(nbits):
            zz = (zz << 1) | get(bypass, 2)
        out[i] = _unzigzag_escape(zz - 1, size)
    return out
