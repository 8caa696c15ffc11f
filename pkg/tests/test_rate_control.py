from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pvsc.rate_control import (
    PAPER_RATE_SET, RateSet, UnitProjector, build_mask, distill_rate_set, map_unit, map_units,
    rate_match, symbol_count, unmap_unit, unmap_units,
)

PAPER = RateSet.parse("paper_iv_a")


def test_rate_set_validation():
    assert PAPER.levels == PAPER_RATE_SET and len(PAPER) == 16
    assert RateSet.parse([0, 4, 8]).levels == (0, 4, 8)
    for bad in ([], [1, 2], [0, 4, 4], [0, 8, 4], list(range(300))):
        with pytest.raises(ValueError):
            RateSet(tuple(bad))
    with pytest.raises(ValueError):
        RateSet.parse("nope")
    with pytest.raises(ValueError):
        PAPER.check_fits(64)


def test_rate_match_examples():
    assert rate_match(13.4, PAPER) == (12, 3)
    assert rate_match(14.0, PAPER)[0] == 12
    assert rate_match(300, PAPER) == (128, 15)
    assert rate_match(0.0, PAPER) == (0, 0)
    assert rate_match(2.0, PAPER)[0] == 0
    assert rate_match(2.01, PAPER)[0] == 4
    with pytest.raises(ValueError):
        rate_match(-1, PAPER)
    k, idx = rate_match(np.array([[1.9, 33.0], [92.0, 114.5]]), PAPER)
    assert k.tolist() == [[0, 36], [84, 128]]
    assert np.array_equal(PAPER.array[idx], k)


def nearest_oracle(x, levels):
    best = None
    for lv in levels:
        if best is None or abs(lv - x) < abs(best - x):
            best = lv
    return best


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 400), st.floats(0, 400))
def test_rate_match_nearest_and_monotone(a, b):
    ka, _ = rate_match(a, PAPER)
    kb, _ = rate_match(b, PAPER)
    assert ka == nearest_oracle(min(a, 128), PAPER.levels)
    if a <= b:
        assert ka <= kb


def test_build_mask():
    assert build_mask(4, 8).tolist() == [1, 1, 1, 1, 0, 0, 0, 0]
    assert build_mask(0, 8).sum() == 0
    assert build_mask(8, 8).sum() == 8
    for k in (-1, 9):
        with pytest.raises(ValueError):
            build_mask(k, 8)


def test_map_unit_pairing_identity():
    rs = RateSet((0, 4, 5, 8))
    proj = UnitProjector.identity(rs, 8)
    u = np.arange(1, 9, dtype=float)
    assert map_unit(u, 1, proj).tolist() == [1 + 2j, 3 + 4j]
    assert map_unit(u, 2, proj).tolist() == [1 + 2j, 3 + 4j, 5 + 0j]
    assert map_unit(u, 0, proj).size == 0


def test_unmap_unit_cases():
    rs = RateSet(tuple(range(0, 17, 2)))
    proj = UnitProjector(rs, 16, seed=3, use_embeddings=True)
    u = np.random.default_rng(0).normal(size=16)
    top = len(rs) - 1
    np.testing.assert_allclose(unmap_unit(map_unit(u, top, proj), top, proj), u, atol=1e-9)
    np.testing.assert_allclose(unmap_unit([], 0, proj), -proj.embed[0], atol=1e-15)
    with pytest.raises(ValueError):
        unmap_unit(np.zeros(3), top, proj)


def test_projector_is_orthonormal():
    proj = UnitProjector(PAPER, 128, seed=1)
    for i in range(len(PAPER)):
        np.testing.assert_allclose(proj.enc[i] @ proj.dec[i], np.eye(128), atol=1e-12)
    again = UnitProjector(PAPER, 128, seed=1)
    assert np.array_equal(proj.enc, again.enc)
    assert not np.array_equal(proj.enc, UnitProjector(PAPER, 128, seed=2).enc)


@pytest.mark.parametrize("seed", range(10))
def test_masked_energy_loss(seed):
    rng = np.random.default_rng(seed)
    c_y = 32
    rs = RateSet(tuple(range(c_y + 1)))
    proj = UnitProjector(rs, c_y, seed=seed)
    u = rng.normal(size=c_y)
    k = c_y // 2
    u_hat = unmap_unit(map_unit(u, k, proj), k, proj)
    # oracle: energy of the coefficients the mask removes
    coeffs = proj.enc[k] @ u
    dropped = float(np.sum(coeffs[k:] ** 2))
    assert float(np.sum((u - u_hat) ** 2)) == pytest.approx(dropped, rel=1e-9)


def test_subspace_projector_drops_complement_first():
    rng = np.random.default_rng(4)
    c_y, d = 16, 6
    b, _ = np.linalg.qr(rng.normal(size=(c_y, d)))
    rs = RateSet(tuple(range(c_y + 1)))
    for ordered in (False, True):
        proj = UnitProjector(rs, c_y, seed=0, subspace=b, ordered=ordered)
        u = b @ rng.normal(size=d)  # lies in the subspace
        np.testing.assert_allclose(unmap_unit(map_unit(u, d, proj), d, proj), u, atol=1e-12)
        for i in range(len(rs)):
            np.testing.assert_allclose(proj.enc[i] @ proj.dec[i], np.eye(c_y), atol=1e-12)
    proj = UnitProjector(rs, c_y, subspace=b, ordered=True)
    np.testing.assert_allclose(proj.enc[3][:d], b.T, atol=1e-15)
    with pytest.raises(ValueError):
        UnitProjector(rs, c_y, subspace=np.zeros((c_y + 1, 2)))


def test_map_units_grid_matches_per_unit():
    rng = np.random.default_rng(5)
    proj = UnitProjector(PAPER, 128, seed=7, use_embeddings=True)
    grid = rng.normal(size=(3, 4, 128))
    idx = rng.integers(0, len(PAPER), (3, 4))
    sym, lengths = map_units(grid, idx, proj)
    assert np.array_equal(lengths, symbol_count(PAPER.array[idx]))
    assert sym.size == int(np.sum((PAPER.array[idx] + 1) // 2))
    ref = np.concatenate([map_unit(grid[i, j], idx[i, j], proj) for i in range(3) for j in range(4)])
    np.testing.assert_allclose(sym, ref, rtol=1e-12, atol=1e-12)
    back = unmap_units(sym, idx, proj)
    for i in range(3):
        for j in range(4):
            np.testing.assert_allclose(back[i, j], unmap_unit(map_unit(grid[i, j], idx[i, j], proj),
                                                              idx[i, j], proj), atol=1e-12)
    with pytest.raises(ValueError):
        unmap_units(sym[:-1], idx, proj)


def test_symbol_count():
    assert symbol_count([0, 1, 4, 5, 128]).tolist() == [0, 1, 2, 3, 64]


def test_distill_examples():
    hist = np.zeros(129)
    hist[8], hist[16] = 50, 30
    assert distill_rate_set(hist, 4).levels == (0, 8, 16, 128)
    assert distill_rate_set(np.ones(129), 129).levels == tuple(range(129))
    padded = distill_rate_set(np.zeros(129), 5)
    assert padded.levels == (0, 32, 64, 96, 128)
    with pytest.raises(ValueError):
        distill_rate_set(np.ones(9), 1)
    with pytest.raises(ValueError):
        distill_rate_set(np.ones(9), 10)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=3, max_size=40), st.integers(2, 40))
def test_distill_properties(hist, k):
    k = min(k, len(hist))
    rs = distill_rate_set(hist, k)
    assert rs.levels[0] == 0 and rs.levels[-1] == len(hist) - 1
    assert len(rs) == k
    assert all(b > a for a, b in zip(rs.levels, rs.levels[1:]))
