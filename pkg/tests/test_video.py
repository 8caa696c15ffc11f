from __future__ import annotations

import numpy as np
import pytest

from pvsc.video import SyntheticSpec, generate, read_raw, write_raw


def test_static_frames_identical():
    f = generate(SyntheticSpec(frames=4, motion="static"))
    assert all(np.array_equal(f[0], x) for x in f[1:])
    assert f[0].shape == (64, 64, 1) and f[0].min() >= 0 and f[0].max() <= 1
    assert np.array_equal(np.round(f[0] * 255) / 255, f[0])


def test_shift_is_cyclic_column_shift():
    f = generate(SyntheticSpec(frames=5, motion="shift", dx=1, dy=0, channels=3))
    for t in range(1, 5):
        assert np.array_equal(f[t], np.roll(f[t - 1], 1, axis=1))
    g = generate(SyntheticSpec(frames=2, motion="shift", dx=0, dy=2))
    assert np.array_equal(g[1], np.roll(g[0], 2, axis=0))


def test_noise_frames_iid_and_reproducible():
    spec = SyntheticSpec(frames=3, motion="noise", sigma=0.1, seed=4)
    a, b = generate(spec), generate(spec)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.array_equal(a[0], a[1])
    assert abs(np.std(a[0]) - 0.1) < 0.01
    c = generate(SyntheticSpec(frames=3, motion="noise", sigma=0.1, seed=5))
    assert not np.array_equal(a[0], c[0])


def test_spec_validation():
    for bad in ({"motion": "zoom"}, {"frames": 0}, {"sigma": -1.0}):
        with pytest.raises(ValueError):
            SyntheticSpec(**bad)
    with pytest.raises(ValueError):
        SyntheticSpec.from_dict({"fps": 30})
    s = SyntheticSpec(height=16, motion="shift")
    assert SyntheticSpec.from_dict(s.to_dict()) == s


def test_raw_round_trip(tmp_path):
    frames = generate(SyntheticSpec(height=8, width=12, channels=3, frames=3, motion="shift"))
    p = tmp_path / "v.raw"
    write_raw(str(p), frames)
    assert p.stat().st_size == 3 * 8 * 12 * 3
    # planar layout: the first plane is channel 0 of frame 0
    head = np.frombuffer(p.read_bytes()[: 8 * 12], dtype=np.uint8).reshape(8, 12)
    assert np.array_equal(head, np.round(frames[0][..., 0] * 255).astype(np.uint8))
    back = read_raw(str(p), 8, 12, 3)
    assert all(np.array_equal(a, b) for a, b in zip(frames, back))
    assert len(read_raw(str(p), 8, 12, 3, max_frames=2)) == 2
