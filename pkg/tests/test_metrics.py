from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.interpolate import PchipInterpolator

from oracles import bd_dense
from pvsc.metrics import (
    LinkReport, RateQualityCurve, bd_cbr, cbr, l1, mse, pchip_slopes, psnr, rate_loss,
    side_channel_uses, summarize,
)


def test_cbr_fixtures():
    assert cbr([3], [0], (1, 2, 2, 3)) == 0.25
    assert cbr([3], [24], (1, 2, 2, 3), 2.0) == 1.25
    assert cbr([0], [0], (1, 2, 2, 3)) == 0.0
    assert side_channel_uses(25, 2.0) == 13
    with pytest.raises(ValueError):
        cbr([1], [0], (0, 2, 2, 3))
    with pytest.raises(ValueError):
        side_channel_uses(8, 0.0)
    with pytest.raises(ValueError):
        cbr([1, 2], [0], (2, 2, 2, 3))


def test_cbr_additive_and_homogeneous():
    l, b = [10, 20, 30], [8, 16, 0]
    dims = (3, 4, 4, 1)
    assert cbr([2 * v for v in l], [0, 0, 0], dims) == 2 * cbr(l, [0, 0, 0], dims)
    per_frame = sum(cbr([li], [bi], (1, 4, 4, 1)) for li, bi in zip(l, b)) / 3
    assert cbr(l, b, dims) == pytest.approx(per_frame, rel=1e-15)


def test_quality_examples():
    x = np.random.default_rng(0).uniform(0.2, 0.8, (4, 5, 3))
    assert psnr(x, x) == math.inf and l1(x, x) == 0.0
    assert mse(x, x + 0.1) == pytest.approx(0.01, rel=1e-12)
    assert psnr(x, x + 0.1) == pytest.approx(20.0, abs=1e-9)
    assert l1(x, x - 0.1) == pytest.approx(0.1, rel=1e-12)
    with pytest.raises(ValueError):
        mse(x, x[:2])


def test_quality_against_loop_oracle():
    rng = np.random.default_rng(1)
    x, y = rng.random((6, 7, 3)), rng.random((6, 7, 3))
    sq = ab = 0.0
    n = 0
    for a, b in zip(x.ravel().tolist(), y.ravel().tolist()):
        sq += (a - b) ** 2
        ab += abs(a - b)
        n += 1
    assert abs(mse(x, y) - sq / n) <= 1e-12
    assert abs(l1(x, y) - ab / n) <= 1e-12
    assert abs(psnr(x, y) - 10 * math.log10(n / sq)) <= 1e-12


def test_rate_loss():
    assert rate_loss([], 0, 0, 0.2) == 0.0
    assert rate_loss([12], 100, 50, 0.2) == pytest.approx(42.0, abs=1e-12)
    assert rate_loss([4, 8], 100, 50, 0.0) == 12
    a, b = rate_loss([4, 8], 10, 30, 0.1), rate_loss([4, 8], 10, 30, 0.3)
    assert b - 12 == pytest.approx(3 * (a - 12), rel=1e-12)
    with pytest.raises(ValueError):
        rate_loss([-1], 0, 0, 0.2)


def test_curve_validation():
    c = RateQualityCurve((0.3, 0.1, 0.2), (33, 30, 31))
    assert c.cbr == (0.1, 0.2, 0.3) and c.quality == (30, 31, 33)
    for r, q in (((0.1,), (30,)), ((0.1, 0.1), (30, 31)), ((0.0, 0.1), (30, 31)), ((0.1, 0.2), (30,))):
        with pytest.raises(ValueError):
            RateQualityCurve(r, q)


ANCHOR = RateQualityCurve((0.05, 0.1, 0.2, 0.4), (28.0, 31.5, 34.2, 36.0))


def test_bd_identical_and_half_rate():
    assert bd_cbr(ANCHOR, ANCHOR) == 0.0
    half = RateQualityCurve(tuple(r / 2 for r in ANCHOR.cbr), ANCHOR.quality)
    assert abs(bd_cbr(ANCHOR, half) - (-50.0)) <= 0.01
    double = RateQualityCurve(tuple(r * 2 for r in ANCHOR.cbr), ANCHOR.quality)
    assert bd_cbr(ANCHOR, double) == pytest.approx(100.0, abs=1e-9)


def test_bd_disjoint():
    other = RateQualityCurve((0.1, 0.2), (40.0, 42.0))
    with pytest.raises(ValueError, match="disjoint quality ranges"):
        bd_cbr(ANCHOR, other)


def test_pchip_slopes_match_scipy():
    rng = np.random.default_rng(2)
    for _ in range(50):
        x = np.sort(rng.choice(np.linspace(0, 10, 200), int(rng.integers(2, 8)), replace=False))
        y = rng.normal(size=x.size)
        ref = PchipInterpolator(x, y).derivative()(x)
        np.testing.assert_allclose(pchip_slopes(x, y), ref, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_bd_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    ra = np.sort(rng.uniform(0.02, 0.5, 4))
    qa = np.sort(rng.uniform(25, 40, 4))
    rt = np.sort(ra * rng.uniform(0.6, 1.4, 4))
    qt = np.sort(qa + rng.uniform(-1.5, 1.5, 4))
    a, t = RateQualityCurve(tuple(ra), tuple(qa)), RateQualityCurve(tuple(rt), tuple(qt))
    try:
        ref = bd_dense(a, t)
    except ValueError:
        pytest.skip("degenerate draw")
    assert abs(bd_cbr(a, t) - ref) <= 0.1


def test_bd_reciprocal():
    test = RateQualityCurve((0.04, 0.09, 0.17, 0.33), (28.5, 31.8, 34.0, 36.4))
    a, b = bd_cbr(ANCHOR, test), bd_cbr(test, ANCHOR)
    assert (1 + a / 100) * (1 + b / 100) == pytest.approx(1.0, rel=5e-3)


def test_summarize():
    reps = [LinkReport(0, 1, 0, 0.1, 30.0, 0.001, 0.01), LinkReport(1, 1, 0, 0.3, math.inf, 0, 0)]
    s = summarize(reps)
    assert s["mean_cbr"] == pytest.approx(0.2) and s["mean_psnr"] == 30.0
