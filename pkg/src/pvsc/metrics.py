"""Quality and efficiency metrics, rate loss and BD-CBR."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

DEFAULT_SIDE_SPECTRAL_EFF = 2.0


@dataclass
class LinkReport:
    frame_index: int
    l_t: int
    side_bits: int
    cbr: float
    psnr: float
    mse: float
    l1: float
    sum_k: int = 0
    rate_loss: float = 0.0
    diagnostics: Dict[str, float] = field(default_factory=dict)


def side_channel_uses(side_bits: int, side_spectral_eff: float = DEFAULT_SIDE_SPECTRAL_EFF) -> int:
    if not side_spectral_eff > 0:
        raise ValueError("side spectral efficiency must be > 0")
    return int(math.ceil(side_bits / side_spectral_eff))


def cbr(l_list: Sequence[int], side_bits: Sequence[int], dims: Tuple[int, int, int, int],
        side_spectral_eff: float = DEFAULT_SIDE_SPECTRAL_EFF) -> float:
    """Channel uses per source sample, side information included.

    Args:
        l_list: symbol channel uses per frame.
        side_bits: framed side-information bits per frame.
        dims: ``(T, H, W, C)``.
        side_spectral_eff: bits carried per side-link channel use.
    """
    t, h, w, c = (int(d) for d in dims)
    if min(t, h, w, c) <= 0:
        raise ValueError(f"dims must be positive, got {dims}")
    if len(l_list) != len(side_bits):
        raise ValueError("l_list and side_bits must have the same length")
    total = sum(int(l) + side_channel_uses(int(b), side_spectral_eff) for l, b in zip(l_list, side_bits))
    return total / (t * h * w * c)


def _pair(x, x_hat) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {x_hat.shape}")
    return x, x_hat


def mse(x, x_hat) -> float:
    x, x_hat = _pair(x, x_hat)
    return float(np.mean((x - x_hat) ** 2))


def psnr(x, x_hat) -> float:
    """PSNR for a peak of 1; ``inf`` for identical inputs."""
    m = mse(x, x_hat)
    return math.inf if m == 0 else 10.0 * math.log10(1.0 / m)


def l1(x, x_hat) -> float:
    x, x_hat = _pair(x, x_hat)
    return float(np.mean(np.abs(x - x_hat)))


def rate_loss(k_values, ratemap_bits: float, hyper_neg_log2_prob: float, eta: float) -> float:
    """Realized per-frame rate loss: ``sum(k) + eta * (ratemap_bits + hyper_bits)``."""
    k = np.asarray(k_values, dtype=np.float64)
    if np.any(k < 0) or ratemap_bits < 0 or hyper_neg_log2_prob < 0:
        raise ValueError("rate-loss inputs must be nonnegative")
    return float(k.sum()) + eta * float(ratemap_bits) + eta * float(hyper_neg_log2_prob)


# -- BD-CBR -------------------------------------------------------------------


@dataclass(frozen=True)
class RateQualityCurve:
    cbr: Tuple[float, ...]
    quality: Tuple[float, ...]
    metric: str = "psnr"

    def __post_init__(self):
        r = tuple(float(v) for v in self.cbr)
        q = tuple(float(v) for v in self.quality)
        if len(r) != len(q):
            raise ValueError("cbr and quality must have the same length")
        if len(r) < 2:
            raise ValueError("a curve needs at least 2 points")
        if any(not (v > 0 and math.isfinite(v)) for v in r):
            raise ValueError("cbr values must be positive and finite")
        if any(not math.isfinite(v) for v in q):
            raise ValueError("quality values must be finite")
        order = sorted(range(len(r)), key=lambda i: r[i])
        r = tuple(r[i] for i in order)
        q = tuple(q[i] for i in order)
        if any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("cbr values must be distinct")
        object.__setattr__(self, "cbr", r)
        object.__setattr__(self, "quality", q)

    @classmethod
    def from_points(cls, points, metric: str = "psnr") -> "RateQualityCurve":
        points = list(points)
        return cls(tuple(p[0] for p in points), tuple(p[1] for p in points), metric)


def pchip_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Fritsch-Butland node derivatives (the shape-preserving PCHIP rule)."""
    h = np.diff(x)
    d = np.diff(y) / h
    n = x.size
    m = np.zeros(n)
    if n == 2:
        m[:] = d[0]
        return m
    for k in range(1, n - 1):
        if d[k - 1] * d[k] > 0:
            w1 = 2 * h[k] + h[k - 1]
            w2 = h[k] + 2 * h[k - 1]
            m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k])

    def edge(h0, h1, d0, d1):
        v = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1)
        if np.sign(v) != np.sign(d0):
            return 0.0
        if np.sign(d0) != np.sign(d1) and abs(v) > abs(3 * d0):
            return 3 * d0
        return v

    m[0] = edge(h[0], h[1], d[0], d[1])
    m[-1] = edge(h[-1], h[-2], d[-1], d[-2])
    return m


def _hermite_integral(x, y, m, a: float, b: float) -> float:
    """Exact integral over ``[a, b]`` of the cubic Hermite interpolant."""

    def basis_antideriv(t):
        t2, t3, t4 = t * t, t ** 3, t ** 4
        return (t - t3 + t4 / 2, t2 / 2 - 2 * t3 / 3 + t4 / 4, t3 - t4 / 2, -t3 / 3 + t4 / 4)

    total = 0.0
    for k in range(x.size - 1):
        lo, hi = max(a, x[k]), min(b, x[k + 1])
        if hi <= lo:
            continue
        h = x[k + 1] - x[k]
        t0, t1 = (lo - x[k]) / h, (hi - x[k]) / h
        p0, p1 = basis_antideriv(t1), basis_antideriv(t0)
        c = (y[k], h * m[k], y[k + 1], h * m[k + 1])
        total += h * sum(ci * (u - v) for ci, u, v in zip(c, p0, p1))
    return total


def _log_rate_vs_quality(curve: RateQualityCurve):
    q = np.asarray(curve.quality)
    r = np.log10(np.asarray(curve.cbr))
    order = np.argsort(q, kind="stable")
    q, r = q[order], r[order]
    if np.any(np.diff(q) <= 0):
        raise ValueError("quality values must be distinct")
    return q, r


def bd_cbr(anchor: RateQualityCurve, test: RateQualityCurve) -> float:
    """Average CBR difference of ``test`` against ``anchor`` at equal quality, in percent.

    Negative values mean ``test`` needs fewer channel uses.
    """
    qa, ra = _log_rate_vs_quality(anchor)
    qt, rt = _log_rate_vs_quality(test)
    lo = max(qa[0], qt[0])
    hi = min(qa[-1], qt[-1])
    if not hi > lo:
        raise ValueError("disjoint quality ranges")
    ia = _hermite_integral(qa, ra, pchip_slopes(qa, ra), lo, hi)
    it = _hermite_integral(qt, rt, pchip_slopes(qt, rt), lo, hi)
    delta = (it - ia) / (hi - lo)
    return 100.0 * (10.0 ** delta - 1.0)


def summarize(reports: List[LinkReport]) -> Dict[str, float]:
    """Mean CBR and PSNR over frames (PSNR averaged in dB, infinities skipped)."""
    finite = [r.psnr for r in reports if math.isfinite(r.psnr)]
    return {
        "mean_cbr": float(np.mean([r.cbr for r in reports])) if reports else 0.0,
        "mean_psnr": float(np.mean(finite)) if finite else math.inf,
    }
