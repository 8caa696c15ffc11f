"""Discrete rate sets, rate matching and masked feature-to-symbol mapping.

A spatial unit is the ``C_y``-vector of the feature grid at one ``(i, j)``.
Its symbol-length factor ``k`` (a rate-set level) fixes how many real
coefficients survive the mask; coefficient pairs become complex channel
symbols, so a unit occupies ``ceil(k / 2)`` channel uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

PAPER_RATE_SET = (0, 4, 8, 12, 16, 20, 24, 28, 36, 44, 52, 60, 68, 84, 100, 128)
PRESETS = {"paper_iv_a": PAPER_RATE_SET}


@dataclass(frozen=True)
class RateSet:
    levels: Tuple[int, ...]

    def __post_init__(self):
        lv = tuple(int(v) for v in self.levels)
        object.__setattr__(self, "levels", lv)
        if not lv:
            raise ValueError("rate set is empty")
        if lv[0] != 0:
            raise ValueError("rate set must contain level 0")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise ValueError("rate set levels must be strictly increasing")
        if len(lv) > 256:
            raise ValueError("rate set may hold at most 256 levels")

    @classmethod
    def parse(cls, value: Union[str, Sequence[int], "RateSet"]) -> "RateSet":
        if isinstance(value, RateSet):
            return value
        if isinstance(value, str):
            if value not in PRESETS:
                raise ValueError(f"unknown rate-set preset {value!r}")
            return cls(PRESETS[value])
        return cls(tuple(value))

    @classmethod
    def full(cls, c_y: int) -> "RateSet":
        return cls(tuple(range(c_y + 1)))

    def __len__(self):
        return len(self.levels)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.levels, dtype=np.int64)

    def check_fits(self, c_y: int):
        if self.levels[-1] > c_y:
            raise ValueError(f"rate set top level {self.levels[-1]} exceeds C_y={c_y}")


def rate_match(k_raw, rs: RateSet):
    """Quantize raw factors to the nearest level (ties to the smaller one).

    Works elementwise; returns ``(k, index)`` with the same shape as ``k_raw``
    (plain ints for scalar input). Values above the top level clamp to it.
    """
    if not isinstance(rs, RateSet):
        rs = RateSet.parse(rs)
    x = np.asarray(k_raw, dtype=np.float64)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("k_raw must be finite and >= 0")
    lv = rs.array
    hi = np.clip(np.searchsorted(lv, x, side="left"), 0, lv.size - 1)
    lo = np.maximum(hi - 1, 0)
    pick_hi = (lv[hi] - x) < (x - lv[lo])
    idx = np.where(pick_hi, hi, lo)
    # x at or below the first level, or above the last one.
    idx = np.where(x <= lv[0], 0, idx)
    idx = np.where(x >= lv[-1], lv.size - 1, idx)
    k = lv[idx]
    if np.ndim(k_raw) == 0:
        return int(k), int(idx)
    return k, idx


def build_mask(k: int, c_y: int) -> np.ndarray:
    if not 0 <= k <= c_y:
        raise ValueError(f"k={k} outside [0, {c_y}]")
    m = np.zeros(c_y, dtype=np.float64)
    m[:k] = 1.0
    return m


def _orthonormal(c: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((c, c)))
    return q * np.sign(np.diag(r))


@dataclass
class UnitProjector:
    """Per-level encode/decode matrices and rate embeddings.

    ``enc[i]`` is orthonormal, so ``dec[i] = enc[i].T`` is its exact inverse.
    With ``subspace`` (a ``(C_y, d)`` matrix with orthonormal columns) each
    rotation sends that subspace onto the first ``d`` coefficients and its
    complement onto the rest, so the mask drops out-of-subspace energy first.
    With ``ordered=True`` the subspace columns are used as given (in order)
    instead of being randomly rotated, so the mask also respects their order.
    """

    rate_set: RateSet
    c_y: int
    seed: int = 0
    use_embeddings: bool = False
    subspace: Optional[np.ndarray] = field(default=None, repr=False)
    ordered: bool = False
    enc: np.ndarray = field(init=False, repr=False)
    dec: np.ndarray = field(init=False, repr=False)
    embed: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.rate_set.check_fits(self.c_y)
        rng = np.random.default_rng([self.seed, 0x5EED])
        if self.subspace is None:
            self.enc = np.stack([_orthonormal(self.c_y, rng) for _ in self.rate_set.levels])
        else:
            b = np.asarray(self.subspace, dtype=np.float64)
            if b.ndim != 2 or b.shape[0] != self.c_y or b.shape[1] > self.c_y:
                raise ValueError(f"subspace must be (C_y={self.c_y}, d <= C_y)")
            d = b.shape[1]
            full, _ = np.linalg.qr(np.concatenate([b, rng.standard_normal((self.c_y, self.c_y - d))], axis=1))
            comp = full[:, d:]
            mats = []
            for _ in self.rate_set.levels:
                top = b.T.copy() if self.ordered else _orthonormal(d, rng) @ b.T
                rest = _orthonormal(self.c_y - d, rng) @ comp.T if d < self.c_y else np.zeros((0, self.c_y))
                mats.append(np.concatenate([top, rest], axis=0))
            self.enc = np.stack(mats)
        self.dec = np.ascontiguousarray(np.transpose(self.enc, (0, 2, 1)))
        if self.use_embeddings:
            self.embed = 0.1 * rng.standard_normal((len(self.rate_set), self.c_y))
        else:
            self.embed = np.zeros((len(self.rate_set), self.c_y))

    @classmethod
    def identity(cls, rate_set: RateSet, c_y: int) -> "UnitProjector":
        p = cls(rate_set, c_y)
        p.enc = np.broadcast_to(np.eye(c_y), (len(rate_set), c_y, c_y)).copy()
        p.dec = p.enc.copy()
        return p

    def level(self, index: int) -> int:
        return self.rate_set.levels[index]


def symbol_count(k) -> np.ndarray:
    """Channel uses of units with factor ``k``: ``ceil(k / 2)``."""
    return (np.asarray(k, dtype=np.int64) + 1) // 2


def _pack(r: np.ndarray, k: int) -> np.ndarray:
    # r: (..., C_y) masked reals -> (..., ceil(k/2)) complex
    n = (k + 1) // 2
    buf = np.zeros(r.shape[:-1] + (2 * n,), dtype=np.float64)
    buf[..., :k] = r[..., :k]
    return buf[..., 0::2] + 1j * buf[..., 1::2]


def _unpack(s: np.ndarray, k: int, c_y: int) -> np.ndarray:
    r = np.zeros(s.shape[:-1] + (c_y,), dtype=np.float64)
    inter = np.empty(s.shape[:-1] + (2 * s.shape[-1],), dtype=np.float64)
    inter[..., 0::2] = s.real
    inter[..., 1::2] = s.imag
    r[..., :k] = inter[..., :k]
    return r


def map_unit(unit, level_index: int, proj: UnitProjector) -> np.ndarray:
    """Project one unit and keep its first ``k`` coefficients as ``ceil(k/2)`` complex symbols."""
    u = np.asarray(unit, dtype=np.float64)
    k = proj.level(level_index)
    r = proj.enc[level_index] @ (u + proj.embed[level_index])
    return _pack(r, k)


def unmap_unit(symbols, level_index: int, proj: UnitProjector) -> np.ndarray:
    s = np.asarray(symbols, dtype=np.complex128).reshape(-1)
    k = proj.level(level_index)
    if s.size != (k + 1) // 2:
        raise ValueError(f"expected {(k + 1) // 2} symbols for k={k}, got {s.size}")
    r = _unpack(s, k, proj.c_y)
    return proj.dec[level_index] @ r - proj.embed[level_index]


def map_units(grid, index_map, proj: UnitProjector) -> Tuple[np.ndarray, np.ndarray]:
    """Map every unit of an ``(H, W, C_y)`` grid, concatenated in raster order.

    Returns ``(symbols, lengths)`` with ``lengths`` the ``(H, W)`` per-unit
    channel-use counts.
    """
    grid = np.asarray(grid, dtype=np.float64)
    idx = np.asarray(index_map, dtype=np.int64)
    h, w, c = grid.shape
    units = grid.reshape(-1, c)
    flat_idx = idx.reshape(-1)
    ks = proj.rate_set.array[flat_idx]
    lengths = symbol_count(ks)
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    out = np.zeros(int(offsets[-1]), dtype=np.complex128)
    for li in np.unique(flat_idx):
        k = proj.level(int(li))
        if k == 0:
            continue
        sel = np.nonzero(flat_idx == li)[0]
        r = (units[sel] + proj.embed[li]) @ proj.enc[li].T
        packed = _pack(r, k)
        n = packed.shape[1]
        pos = offsets[sel][:, None] + np.arange(n)[None, :]
        out[pos] = packed
    return out, lengths.reshape(h, w)


def unmap_units(symbols, index_map, proj: UnitProjector) -> np.ndarray:
    """Inverse of :func:`map_units`; the symbol count must match the rate map exactly."""
    s = np.asarray(symbols, dtype=np.complex128).reshape(-1)
    idx = np.asarray(index_map, dtype=np.int64)
    h, w = idx.shape
    flat_idx = idx.reshape(-1)
    lengths = symbol_count(proj.rate_set.array[flat_idx])
    total = int(lengths.sum())
    if s.size != total:
        raise ValueError(f"rate map requires {total} symbols, got {s.size}")
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    units = np.empty((flat_idx.size, proj.c_y), dtype=np.float64)
    for li in np.unique(flat_idx):
        k = proj.level(int(li))
        sel = np.nonzero(flat_idx == li)[0]
        n = (k + 1) // 2
        pos = offsets[sel][:, None] + np.arange(n)[None, :]
        r = _unpack(s[pos], k, proj.c_y)
        units[sel] = r @ proj.dec[li].T - proj.embed[li]
    return units.reshape(h, w, proj.c_y)


def distill_rate_set(usage_histogram: Iterable[float], k: int) -> RateSet:
    """Prune a full ``0..C_y`` usage histogram to ``k`` levels.

    Keeps 0 and ``C_y``, then the ``k - 2`` most used interior levels (ties to
    the smaller level). If too few interior levels were ever used, the set is
    padded with levels closest to an even spacing of ``[0, C_y]``.
    """
    hist = np.asarray(list(usage_histogram), dtype=np.float64)
    c_y = hist.size - 1
    if k < 2:
        raise ValueError("K must be >= 2")
    if c_y < 1 or k > c_y + 1:
        raise ValueError(f"K={k} incompatible with histogram over 0..{c_y}")
    chosen = {0, c_y}
    interior = np.arange(1, c_y)
    used = interior[hist[1:c_y] > 0]
    order = sorted(used, key=lambda lv: (-hist[lv], lv))
    for lv in order[: k - 2]:
        chosen.add(int(lv))
    targets = list(np.linspace(0, c_y, k)[1:-1])
    while len(chosen) < k:
        target = targets.pop(0) if targets else c_y / 2
        free = [v for v in range(c_y + 1) if v not in chosen]
        chosen.add(min(free, key=lambda v: (abs(v - target), v)))
    return RateSet(tuple(sorted(chosen)))
