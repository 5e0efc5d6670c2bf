import numpy as np
import pytest
from scipy import ndimage

from pansharp.baselines import (
    BaselineConfig,
    box_blur,
    fuse_bicubic,
    fuse_hpf,
    fuse_lbf,
    fuse_lmvm,
    fuse_sfim,
    local_mean_std,
)
from pansharp.sampling import BlurSpec, SamplingSpec, bicubic_upsample, blur_downsample


@pytest.fixture
def data(rng):
    pan = rng.uniform(20, 200, (16, 16))
    low = rng.uniform(20, 200, (4, 4))
    return pan, low, bicubic_upsample(low, 4)


def test_box_blur_matches_scipy(rng):
    img = rng.normal(size=(9, 11))
    # scipy's "reflect" mode is the same half-sample symmetric extension
    np.testing.assert_allclose(box_blur(img, 5), ndimage.uniform_filter(img, 5, mode="reflect"), atol=1e-12)


def test_hpf_formula(data):
    pan, low, up = data
    expected = up + pan - ndimage.uniform_filter(pan, 5, mode="reflect")
    np.testing.assert_allclose(fuse_hpf(pan, low), expected, atol=1e-10)


def test_sfim_formula_and_scale_invariance(data):
    pan, low, up = data
    expected = up * pan / ndimage.uniform_filter(pan, 5, mode="reflect")
    np.testing.assert_allclose(fuse_sfim(pan, low), expected, atol=1e-10)
    np.testing.assert_allclose(fuse_sfim(3.7 * pan, low), fuse_sfim(pan, low), atol=1e-10)


def test_lbf_formula(data):
    pan, low, up = data
    pan_low = bicubic_upsample(blur_downsample(pan, BlurSpec(1.3), SamplingSpec(4)), 4)
    fused = fuse_lbf(pan, low)
    np.testing.assert_allclose(fused, up * pan / pan_low, atol=1e-10)
    np.testing.assert_allclose(fused * pan_low, up * pan, rtol=1e-12)


def lmvm_loops(pan, up, n):
    r = n // 2
    H, W = pan.shape
    padp = np.pad(pan, r, mode="symmetric")
    padu = np.pad(up, r, mode="symmetric")
    out = np.empty_like(pan)
    for i in range(H):
        for j in range(W):
            wp = padp[i:i + n, j:j + n]
            wu = padu[i:i + n, j:j + n]
            out[i, j] = (pan[i, j] - wp.mean()) * wu.std() / wp.std() + wu.mean()
    return out


def test_lmvm_matches_loops(data):
    pan, low, up = data
    np.testing.assert_allclose(fuse_lmvm(pan, low), lmvm_loops(pan, up, 9), atol=1e-9)


def test_lmvm_affine_invariance(data):
    pan, low, _ = data
    np.testing.assert_allclose(fuse_lmvm(2.5 * pan + 30, low), fuse_lmvm(pan, low), atol=1e-9)


def test_constant_pan_gives_upsampled_band(data):
    _, low, up = data
    pan = np.full((16, 16), 90.0)
    for fuse in (fuse_hpf, fuse_sfim, fuse_lbf):
        np.testing.assert_allclose(fuse(pan, low), up, atol=1e-10)
    # with a flat pan only the local mean of the band survives
    m_up, _ = local_mean_std(up, 9)
    np.testing.assert_allclose(fuse_lmvm(pan, low), m_up, atol=1e-10)


def test_zero_pan_is_finite(data):
    _, low, _ = data
    pan = np.zeros((16, 16))
    pan[3, 3] = 1.0
    for fuse in (fuse_sfim, fuse_lbf, fuse_lmvm):
        assert np.all(np.isfinite(fuse(pan, low)))


def test_bicubic_baseline(rng):
    low = rng.normal(size=(2, 3, 3))
    np.testing.assert_array_equal(fuse_bicubic(low, 4), bicubic_upsample(low, 4))


def test_validation(data):
    pan, low, _ = data
    with pytest.raises(ValueError):
        fuse_hpf(pan, low[:3])
    with pytest.raises(ValueError):
        BaselineConfig(hpf_box=4)
    with pytest.raises(ValueError):
        BaselineConfig(ratio_epsilon=0)
