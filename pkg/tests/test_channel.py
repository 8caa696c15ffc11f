from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pvsc.channel import (
    ChannelConfig, complex_normal, corrupt_csi, fading_gains, measure_nmse, measure_snr,
    mmse_equalize, transmit, zf_equalize,
)
from pvsc.rng import substream


def unit_symbols(n, seed=0):
    rng = np.random.default_rng(seed)
    return np.exp(2j * np.pi * rng.random(n))


def test_noiseless_awgn_is_identity():
    cfg = ChannelConfig(kind="awgn", snr_db=math.inf)
    r, real = transmit(np.array([1 + 0j]), cfg, substream(0))
    assert r.tolist() == [1 + 0j]
    assert measure_snr(np.array([1 + 0j]), r, real) == math.inf


def test_noise_variance_algebra():
    assert ChannelConfig(snr_db=10.0, power=1.0).noise_var == pytest.approx(0.1, rel=1e-15)
    assert ChannelConfig(snr_db=0.0, power=2.0).noise_var == pytest.approx(2.0, rel=1e-15)
    assert ChannelConfig(snr_db=math.inf).noise_var == 0.0


def test_rayleigh_block_structure():
    cfg = ChannelConfig(kind="rayleigh_block", coherence_len=2)
    h = fading_gains(4, cfg, substream(3))
    assert h[0] == h[1] and h[2] == h[3] and h[0] != h[2]
    h = fading_gains(7, ChannelConfig(kind="rayleigh_block", coherence_len=3), substream(4))
    assert h.size == 7 and h[6] != h[5] and h[3] == h[5]


def test_rayleigh_unit_mean_power():
    cfg = ChannelConfig(kind="rayleigh_block", coherence_len=1)
    h = fading_gains(10**6, cfg, substream(5))
    assert abs(np.mean(np.abs(h) ** 2) - 1.0) < 0.01


def test_complex_normal_component_split():
    z = complex_normal(substream(6), 10**6, 0.5)
    assert abs(np.var(z.real) - 0.25) < 0.005 and abs(np.var(z.imag) - 0.25) < 0.005


@pytest.mark.parametrize("kind", ["awgn", "rayleigh_block"])
def test_measured_snr_close_to_configured(kind):
    s = unit_symbols(10**6)
    cfg = ChannelConfig(kind=kind, snr_db=6.0, coherence_len=4)
    r, real = transmit(s, cfg, substream(7))
    assert abs(measure_snr(s, r, real) - 6.0) < 0.1


def test_measure_snr_hand_case():
    s = np.ones(4, dtype=complex)
    noise = np.full(4, math.sqrt(0.1) + 0j)
    from pvsc.channel import ChannelRealization
    real = ChannelRealization(h=np.ones(4, complex), h_est=np.ones(4, complex), noise=noise)
    assert measure_snr(s, s + noise, real) == pytest.approx(10.0, abs=1e-12)


def test_csi_perfect_and_variance():
    h = fading_gains(1000, ChannelConfig(kind="rayleigh_block"), substream(1))
    assert np.array_equal(corrupt_csi(h, None, substream(2)), h)
    assert np.array_equal(corrupt_csi(h, "perfect", substream(2)), h)
    h = fading_gains(10**6, ChannelConfig(kind="rayleigh_block"), substream(8))
    est = corrupt_csi(h, -20.0, substream(9))
    assert abs(np.mean(np.abs(est - h) ** 2) - 0.01) < 0.0002


@pytest.mark.parametrize("nmse", [-20.0, -10.0])
def test_measured_nmse(nmse):
    h = fading_gains(10**6, ChannelConfig(kind="rayleigh_block"), substream(10))
    assert abs(measure_nmse(h, corrupt_csi(h, nmse, substream(11))) - nmse) < 0.2


def test_realization_err_field():
    cfg = ChannelConfig(kind="rayleigh_block", csi_nmse_db=-10.0)
    _, real = transmit(unit_symbols(50), cfg, substream(12))
    assert np.array_equal(real.err, real.h_est - real.h)


def test_zf_examples():
    out, n = zf_equalize(np.array([4 + 0j]), np.array([2 + 0j]))
    assert out.tolist() == [2 + 0j] and n == 0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 300), st.sampled_from(["awgn", "rayleigh_block"]))
def test_zf_undoes_noiseless_channel(seed, n, kind):
    s = np.random.default_rng(seed).standard_normal((n, 2)) @ np.array([1, 1j])
    cfg = ChannelConfig(kind=kind, snr_db=math.inf, coherence_len=3)
    r, real = transmit(s, cfg, substream(seed))
    out, _ = zf_equalize(r, real.h_est)
    np.testing.assert_allclose(out, s, rtol=1e-12, atol=1e-300)


def test_zf_against_closed_form_with_csi_error():
    s = unit_symbols(1000, 1)
    cfg = ChannelConfig(kind="awgn", snr_db=10.0, csi_nmse_db=-10.0)
    r, real = transmit(s, cfg, substream(13))
    out, _ = zf_equalize(r, real.h_est)
    oracle = np.array([(1.0 * si + ni) * np.conj(he) / abs(he) ** 2
                       for si, ni, he in zip(s, real.noise, real.h_est)])
    np.testing.assert_allclose(out, oracle, rtol=1e-12)
    # worse estimates leave larger residual error, on average
    errs = []
    for nmse in (-30.0, -10.0, 0.0):
        h_est = corrupt_csi(np.ones(s.size, complex), nmse, substream(14))
        errs.append(np.mean(np.abs(zf_equalize(s, h_est)[0] - s) ** 2))
    assert errs[0] < errs[1] < errs[2]


def test_zf_clamp_keeps_phase():
    h = np.array([1e-9 * np.exp(1j * 0.7), 0.0 + 0j, 1.0 + 0j])
    out, n = zf_equalize(np.array([1 + 0j, 1 + 0j, 1 + 0j]), h)
    assert n == 2
    assert np.all(np.isfinite(out))
    assert abs(out[0]) == pytest.approx(1e6, rel=1e-9)
    assert np.angle(out[0]) == pytest.approx(-0.7, abs=1e-9)
    assert out[1] == pytest.approx(1e6)


def test_mmse_examples_and_oracle():
    assert mmse_equalize(np.array([2 + 0j]), np.array([1 + 0j]), 1.0).tolist() == [1 + 0j]
    rng = np.random.default_rng(2)
    r = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    h = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    np.testing.assert_array_equal(mmse_equalize(r, h, 0.0), zf_equalize(r, h)[0])
    nv = 0.3
    oracle = [complex(hi.conjugate() / (abs(hi) ** 2 + nv) * ri) for ri, hi in zip(r, h)]
    np.testing.assert_allclose(mmse_equalize(r, h, nv), oracle, rtol=1e-13)
    with pytest.raises(ValueError):
        mmse_equalize(r, h, -1.0)


def test_transmit_edge_cases():
    r, real = transmit(np.array([], dtype=complex), ChannelConfig(snr_db=3.0), substream(0))
    assert r.size == 0 and real.h.size == 0
    with pytest.raises(ValueError):
        transmit(np.array([np.nan + 0j]), ChannelConfig(), substream(0))


def test_transmit_deterministic():
    s = unit_symbols(100)
    cfg = ChannelConfig(kind="rayleigh_block", snr_db=3.0, csi_nmse_db=-10.0)
    a, ra = transmit(s, cfg, substream(42, 3, "x"))
    b, rb = transmit(s, cfg, substream(42, 3, "x"))
    assert np.array_equal(a, b) and np.array_equal(ra.h_est, rb.h_est)
    c, _ = transmit(s, cfg, substream(42, 4, "x"))
    assert not np.array_equal(a, c)


def test_config_parsing():
    cfg = ChannelConfig.from_dict({"kind": "rayleigh_block", "snr_db": "inf", "csi_nmse_db": "perfect",
                                   "coherence_len": 2})
    assert cfg.snr_db == math.inf and cfg.csi_nmse_db is None
    assert ChannelConfig.from_dict(cfg.to_dict()) == cfg
    for bad in ({"kind": "ricean"}, {"coherence_len": 0}, {"power": 0}, {"bogus": 1},
                {"csi_nmse_db": "good"}):
        with pytest.raises(ValueError):
            ChannelConfig.from_dict(bad)
