import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from strcf.errors import DimNotDivisible, EmptyRegion, ImageDecodeError
from strcf.features import (
    FeatureConfig,
    Region,
    cosine_window,
    extract_features,
    extract_hog,
    hann_window,
    load_image,
    luminance,
    sample_patch,
    search_region,
)


def _whole_image(h, w):
    return Region((w - 1) / 2, (h - 1) / 2, w, h)


def test_region_box_round_trip():
    r = Region.from_box((10, 20, 30, 40))
    assert (r.cx, r.cy) == (24.5, 39.5)
    assert r.to_box() == (10, 20, 30, 40)
    with pytest.raises(EmptyRegion):
        Region(0, 0, 0, 5)


def test_sample_patch_identity(rng):
    img = rng.integers(0, 256, size=(7, 9, 3)).astype(np.uint8)
    out = sample_patch(img, _whole_image(7, 9), (9, 7))
    np.testing.assert_array_equal(out, img.astype(np.float64))


def test_sample_patch_outside_is_corner():
    img = np.arange(12, dtype=np.uint8).reshape(3, 4)
    out = sample_patch(img, Region(-50, -50, 6, 6), (5, 5))
    np.testing.assert_array_equal(out, np.full((5, 5), float(img[0, 0])))
    out = sample_patch(img, Region(80, 90, 6, 6), (5, 5))
    np.testing.assert_array_equal(out, np.full((5, 5), float(img[-1, -1])))


def test_sample_patch_checkerboard_upsample():
    img = np.array([[0, 255], [255, 0]], dtype=np.uint8)
    out = sample_patch(img, _whole_image(2, 2), (4, 4))
    # samples fall at -0.25, 0.25, 0.75, 1.25 (clamped to 0 and 1); each value is
    # 255 * (x (1 - y) + y (1 - x)) evaluated by hand
    expected = np.array([
        [0.0, 63.75, 191.25, 255.0],
        [63.75, 95.625, 159.375, 191.25],
        [191.25, 159.375, 95.625, 63.75],
        [255.0, 191.25, 63.75, 0.0],
    ])
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_sample_patch_empty_region():
    with pytest.raises(EmptyRegion):
        sample_patch(np.zeros((5, 5)), Region(2, 2, 0.4, 0.4), (4, 4))


def test_sample_patch_deterministic(rng):
    img = rng.integers(0, 256, size=(30, 40)).astype(np.uint8)
    regions = [Region(10.3, 12.7, 15.2, 9.9), Region(35, 2, 20, 20)]
    first = [sample_patch(img, r, (16, 16)) for r in regions]
    second = [sample_patch(img, r, (16, 16)) for r in reversed(regions)][::-1]
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize(
    "w,h,side",
    [(20, 20, math.sqrt(2000)), (5, 80, math.sqrt(2000)), (1, 1, math.sqrt(5))],
)
def test_search_region(w, h, side):
    r = search_region(Region(3.0, 4.0, w, h))
    assert (r.cx, r.cy) == (3.0, 4.0)
    assert r.width == pytest.approx(side, rel=1e-15)
    assert r.height == r.width
    assert round(math.sqrt(2000), 2) == 44.72


def test_luminance_weights():
    px = np.array([[[255, 0, 0], [0, 255, 0], [0, 0, 255]]], dtype=np.uint8)
    np.testing.assert_allclose(luminance(px), [[0.299 * 255, 0.587 * 255, 0.114 * 255]])


def test_hog_constant_patch():
    out = extract_hog(np.full((16, 16), 90.0))
    assert out.shape == (10, 4, 4)
    np.testing.assert_array_equal(out[:9], 0.0)
    np.testing.assert_allclose(out[9], 90 / 255 - 0.5)


def test_hog_vertical_edge():
    patch = np.zeros((16, 16))
    patch[:, 8:] = 200.0
    out = extract_hog(patch, FeatureConfig(include_gray=False))
    # horizontal gradient means orientation 0, i.e. bin 0
    assert np.all(out[1:] == 0.0)
    assert np.all(out[0][:, 1:3] > 0)
    # uniform along the edge
    np.testing.assert_array_equal(out, np.repeat(out[:, :1], 4, axis=1))


def test_hog_rotation_permutes_orientations(rng):
    cfg = FeatureConfig(orientation_bins=8)
    patch = rng.uniform(0, 255, size=(32, 32))
    rotated = extract_hog(np.rot90(patch), cfg)
    reference = np.rot90(extract_hog(patch, cfg), axes=(1, 2))
    # 90 degrees is half of the unsigned orientation range
    expected = np.concatenate([np.roll(reference[:8], 4, axis=0), reference[8:]])
    np.testing.assert_allclose(rotated, expected, atol=1e-10)


def test_hog_cyclic_shift_covariance():
    cfg = FeatureConfig()
    cell = cfg.cell_size
    ii, jj = np.mgrid[0:32, 0:40]
    # periodic over the patch so the wrapped shift has no seam
    patch = 120 + 60 * np.sin(2 * np.pi * 3 * jj / 40) * np.cos(2 * np.pi * 2 * ii / 32) + 30 * np.cos(
        2 * np.pi * (ii / 16 + jj / 20)
    )
    a = extract_hog(patch, cfg)
    b = extract_hog(np.roll(patch, cell, axis=1), cfg)
    cw = a.shape[2]
    # cells two or more away from either border see identical neighbourhoods
    np.testing.assert_allclose(b[:, :, 3:cw - 2], a[:, :, 2:cw - 3], atol=1e-12)


def test_hog_not_divisible():
    with pytest.raises(DimNotDivisible):
        extract_hog(np.zeros((10, 12)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.0, 255.0))
def test_hog_value_ranges(seed, scale):
    patch = np.random.default_rng(seed).uniform(0, 1, size=(24, 24)) * scale
    out = extract_hog(patch)
    assert np.all(out[:9] >= 0) and np.all(out[:9] <= 1)
    assert np.all(out[9] >= -0.5) and np.all(out[9] <= 0.5)


def test_cosine_window_borders_and_centre():
    out = cosine_window(np.ones((2, 5, 5)))
    for ch in out:
        assert np.all(ch[0] == 0) and np.all(ch[-1] == 0)
        assert np.all(ch[:, 0] == 0) and np.all(ch[:, -1] == 0)
        assert ch[2, 2] == 1.0


def test_cosine_window_twice_is_square(rng):
    f = rng.standard_normal((3, 6, 7))
    np.testing.assert_allclose(cosine_window(cosine_window(f)), f * hann_window(6, 7) ** 2, atol=1e-15)


def test_hann_degenerate_axis():
    np.testing.assert_allclose(hann_window(1, 5)[0], 0.5 * (1 - np.cos(2 * np.pi * np.arange(5) / 4)))
    assert hann_window(1, 1)[0, 0] == 1.0


def test_extract_features_shape(rng):
    img = rng.integers(0, 256, size=(60, 80, 3)).astype(np.uint8)
    feats = extract_features(img, Region(40, 30, 50, 50), 200, FeatureConfig())
    assert feats.shape == (10, 50, 50)
    assert np.all(feats[:, 0, :] == 0)


def test_load_image(tmp_path, rng):
    arr = rng.integers(0, 256, size=(5, 6, 3)).astype(np.uint8)
    Image.fromarray(arr).save(tmp_path / "a.png")
    np.testing.assert_array_equal(load_image(tmp_path / "a.png"), arr)
    (tmp_path / "bad.png").write_bytes(b"not an image")
    with pytest.raises(ImageDecodeError):
        load_image(tmp_path / "bad.png")
