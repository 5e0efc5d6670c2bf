import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pansharp.sampling import (
    BlurSpec,
    SamplingSpec,
    adjoint_upsample_blur,
    bicubic_translate,
    bicubic_upsample,
    blur_downsample,
    box_kernel,
    convolve,
    convolve_adjoint,
    decimate,
    gaussian_kernel,
    mirror_index,
    replicate_upsample,
    zero_fill,
)

from conftest import conv_matrix_1d, mirror


@given(st.integers(-50, 50), st.integers(1, 9))
def test_mirror_index_matches_loop(i, n):
    assert mirror_index(i, n) == mirror(i, n)


def test_gaussian_center_weight_oracle():
    z = sum(math.exp(-x * x / (2 * 1.3**2)) for x in range(-4, 5))
    k = gaussian_kernel(BlurSpec(1.3))
    assert len(k) == 9
    assert k[4] == pytest.approx(1.0 / z, abs=1e-15)
    np.testing.assert_allclose(k, k[::-1], atol=0)
    assert k.sum() == pytest.approx(1.0, abs=1e-15)


def test_gaussian_tiny_sigma_is_delta():
    img = np.random.default_rng(0).normal(size=(6, 6))
    np.testing.assert_allclose(convolve(img, gaussian_kernel(BlurSpec(0.1))), img, atol=1e-12)


@pytest.mark.parametrize("kwargs", [dict(sigma=0.0), dict(sigma=-1.0), dict(sigma=1.3, radius=3), dict(kind="box")])
def test_blur_spec_rejects(kwargs):
    with pytest.raises(ValueError):
        BlurSpec(**kwargs)


@pytest.mark.parametrize("kwargs", [dict(factor=1), dict(factor=2.5), dict(factor=4, phase=(4, 0))])
def test_sampling_spec_rejects(kwargs):
    with pytest.raises(ValueError):
        SamplingSpec(**kwargs)


def test_box_kernel():
    np.testing.assert_array_equal(box_kernel(3), [1 / 3] * 3)
    with pytest.raises(ValueError):
        box_kernel(4)


def test_convolve_constant_and_delta():
    k = gaussian_kernel(BlurSpec(1.3))
    np.testing.assert_allclose(convolve(np.full((10, 12), 7.0), k), 7.0, atol=1e-13)
    img = np.zeros((21, 21))
    img[10, 10] = 1.0
    out = convolve(img, k)
    np.testing.assert_allclose(out[6:15, 6:15], np.outer(k, k), atol=1e-16)


def test_convolve_matches_dense_oracle(rng):
    k = gaussian_kernel(BlurSpec(1.1))
    img = rng.normal(size=(7, 9))
    expected = conv_matrix_1d(k, 7) @ img @ conv_matrix_1d(k, 9).T
    np.testing.assert_allclose(convolve(img, k), expected, atol=1e-13)
    expected_adj = conv_matrix_1d(k, 7).T @ img @ conv_matrix_1d(k, 9)
    np.testing.assert_allclose(convolve_adjoint(img, k), expected_adj, atol=1e-13)


def test_stack_equals_per_band(rng):
    k = gaussian_kernel(BlurSpec(1.3))
    stack = rng.normal(size=(3, 8, 8))
    np.testing.assert_array_equal(convolve(stack, k)[1], convolve(stack[1], k))


def test_decimate_examples():
    spec = SamplingSpec(2)
    np.testing.assert_array_equal(decimate(np.array([[1.0, 2.0], [3.0, 4.0]]), spec), [[1.0]])
    assert decimate(np.full((8, 12), 5.0), SamplingSpec(4)).shape == (2, 3)
    np.testing.assert_array_equal(decimate(np.full((8, 12), 5.0), SamplingSpec(4)), 5.0)
    v = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(decimate(replicate_upsample(v, 4), SamplingSpec(4)), v)
    np.testing.assert_array_equal(decimate(np.arange(16.0).reshape(4, 4), SamplingSpec(2, (1, 0))), [[4, 6], [12, 14]])
    with pytest.raises(ValueError):
        decimate(np.zeros((6, 8)), SamplingSpec(4))


def test_zero_fill_is_decimate_transpose():
    spec = SamplingSpec(2, (0, 1))
    y = np.array([[1.0, 2.0]])
    np.testing.assert_array_equal(zero_fill(y, spec), [[0, 1, 0, 2], [0, 0, 0, 0]])


def test_replicate_upsample():
    np.testing.assert_array_equal(replicate_upsample(np.array([[1.0]]), 2), np.ones((2, 2)))
    v = np.random.default_rng(3).normal(size=(3, 4))
    assert replicate_upsample(v, 4).mean() == pytest.approx(v.mean(), abs=1e-14)


def test_bicubic_constant_and_nodes(rng):
    np.testing.assert_allclose(bicubic_upsample(np.full((5, 6), 3.5), 4), 3.5, atol=1e-13)
    low = rng.normal(size=(6, 6))
    up = bicubic_upsample(low, 4)
    np.testing.assert_allclose(up[::4, ::4], low, atol=1e-14)
    up = bicubic_upsample(low, 4, phase=(1, 2))
    np.testing.assert_allclose(up[1::4, 2::4], low, atol=1e-14)


def test_bicubic_linear_on_interior():
    # symmetric extension is not linear, so only points whose four taps are
    # inside the grid are reproduced exactly
    n, s = 8, 4
    yy, xx = np.mgrid[0:n, 0:n].astype(float)
    low = 2.0 + 0.5 * yy - 1.25 * xx
    up = bicubic_upsample(low, s)
    pos = np.arange(n * s) / s
    inner = (pos >= 1) & (pos <= n - 2)
    expected = 2.0 + 0.5 * pos[:, None] - 1.25 * pos[None, :]
    np.testing.assert_allclose(up[np.ix_(inner, inner)], expected[np.ix_(inner, inner)], atol=1e-10)


def test_translate_identity_and_integer(rng):
    img = rng.normal(size=(12, 12))
    np.testing.assert_array_equal(bicubic_translate(img, 0.0, 0.0), img)
    moved = bicubic_translate(img, 1.0, 0.0)
    np.testing.assert_allclose(moved[:, 1:], img[:, :-1], atol=1e-14)
    moved = bicubic_translate(img, 0.0, -2.0)
    np.testing.assert_allclose(moved[:-2], img[2:], atol=1e-14)


def test_translate_round_trip_smooth():
    yy, xx = np.mgrid[0:32, 0:32]
    img = 100 + 40 * np.sin(xx / 5.0) * np.cos(yy / 7.0)
    back = bicubic_translate(bicubic_translate(img, 0.5, 0.3), -0.5, -0.3)
    inner = (slice(4, -4), slice(4, -4))
    assert np.abs(back - img)[inner].max() < 0.02 * np.ptp(img)


def test_translate_sanity_bound():
    with pytest.raises(ValueError):
        bicubic_translate(np.zeros((8, 8)), 2.0, 0.0)


def test_blur_downsample_composition(rng):
    blur, spec = BlurSpec(1.3), SamplingSpec(4)
    img = rng.normal(size=(16, 16))
    np.testing.assert_array_equal(blur_downsample(img, blur, spec), decimate(convolve(img, gaussian_kernel(blur)), spec))
    np.testing.assert_allclose(blur_downsample(np.full((16, 16), 9.0), blur, spec), 9.0, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4), st.integers(1, 4), st.integers(0, 3), st.integers(0, 3),
       st.floats(0.3, 2.5))
def test_blur_downsample_adjoint_property(seed, hb, wb, p1, p2, sigma):
    rng = np.random.default_rng(seed)
    blur, spec = BlurSpec(sigma), SamplingSpec(4, (p1, p2))
    x = rng.normal(size=(4 * hb, 4 * wb))
    y = rng.normal(size=(hb, wb))
    lhs = np.vdot(blur_downsample(x, blur, spec), y)
    rhs = np.vdot(x, adjoint_upsample_blur(y, blur, spec))
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), abs(rhs), 1e-300) + 1e-13


def test_adjoint_of_zero_and_linearity(rng):
    blur, spec = BlurSpec(1.3), SamplingSpec(4)
    np.testing.assert_array_equal(adjoint_upsample_blur(np.zeros((3, 3)), blur, spec), 0.0)
    a, b = rng.normal(size=(2, 12, 12))
    np.testing.assert_allclose(
        blur_downsample(2 * a - 3 * b, blur, spec),
        2 * blur_downsample(a, blur, spec) - 3 * blur_downsample(b, blur, spec),
        atol=1e-12,
    )
