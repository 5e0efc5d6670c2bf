import numpy as np
import pytest

from pansharp.sampling import BlurSpec, SamplingSpec, blur_downsample
from pansharp.simulate import (
    ALPHAS_BGRI,
    ALPHAS_BGRI_NO_BLUE,
    MixingWeights,
    SimulationSpec,
    coregister_lowres,
    default_shifts,
    make_dataset,
    procedural_scene,
    simulate_lowres,
    synthesize_pan,
    unwarp_bands,
    warp_pan_per_band,
)


def test_synthesize_pan_examples():
    ref = np.stack([np.full((2, 2), v) for v in (10.0, 20.0, 30.0, 40.0)])
    np.testing.assert_allclose(synthesize_pan(ref, ALPHAS_BGRI), 0.1 * 10 + 0.4 * 20 + 0.25 * 30 + 0.25 * 40)
    np.testing.assert_allclose(synthesize_pan(ref, ALPHAS_BGRI_NO_BLUE), 0.4 * 20 + 0.35 * 30 + 0.25 * 40)
    with pytest.raises(ValueError):
        synthesize_pan(ref, (0.5, 0.5))
    with pytest.raises(ValueError):
        MixingWeights((0.5, -0.1))


def test_presets_are_convex():
    assert MixingWeights(ALPHAS_BGRI).is_convex
    assert MixingWeights(ALPHAS_BGRI_NO_BLUE).is_convex


def test_zero_shift_lowres_is_blur_downsample(rng):
    ref = rng.uniform(0, 255, (3, 16, 16))
    spec = SimulationSpec()
    np.testing.assert_array_equal(simulate_lowres(ref, spec), blur_downsample(ref, BlurSpec(1.3), SamplingSpec(4)))
    assert simulate_lowres(ref, spec).shape == (3, 4, 4)


def test_pan_commutes_with_degradation(rng):
    ref = rng.uniform(0, 255, (4, 16, 16))
    blur, samp = BlurSpec(1.3), SamplingSpec(4)
    np.testing.assert_allclose(
        synthesize_pan(blur_downsample(ref, blur, samp), ALPHAS_BGRI),
        blur_downsample(synthesize_pan(ref, ALPHAS_BGRI), blur, samp),
        atol=1e-12,
    )


def test_wide_blur_flattens_smooth_bands():
    yy, xx = np.mgrid[0:64, 0:64]
    ref = np.stack([100 + 2 * np.sin(xx / 10.0), 60 + np.cos(yy / 9.0)])
    low = simulate_lowres(ref, SimulationSpec(sigma=30.0))
    for band, orig in zip(low, ref):
        assert np.abs(band - orig.mean()).max() < 0.01 * orig.mean()


def aliased_fraction(low):
    spec = np.abs(np.fft.fft2(low - low.mean())) ** 2
    f = np.abs(np.fft.fftfreq(low.shape[0]))
    high = (f[:, None] > 0.25) | (f[None, :] > 0.25)
    return spec[high].sum() / spec.sum()


def test_larger_sigma_aliases_less():
    scene = procedural_scene(128, 1, seed=3)
    sharp = simulate_lowres(scene, SimulationSpec(sigma=1.3))[0]
    soft = simulate_lowres(scene, SimulationSpec(sigma=1.7))[0]
    assert aliased_fraction(sharp) > aliased_fraction(soft)


def test_noise_is_seeded(rng):
    ref = rng.uniform(0, 255, (2, 16, 16))
    a = simulate_lowres(ref, SimulationSpec(noise_sigma=2.0, seed=7))
    b = simulate_lowres(ref, SimulationSpec(noise_sigma=2.0, seed=7))
    c = simulate_lowres(ref, SimulationSpec(noise_sigma=2.0, seed=8))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_default_shifts():
    assert default_shifts(3) == ((0.0, -0.0), (0.6, -0.4), (1.2, -0.8))


def test_coregister_integer_shift(rng):
    ref = rng.uniform(0, 255, (1, 64, 64))
    spec = SimulationSpec(shifts=((4.0, 0.0),))
    low = simulate_lowres(ref, spec)
    back = coregister_lowres(low, spec)
    direct = blur_downsample(ref, spec.blur, spec.sampling)
    np.testing.assert_allclose(back[:, :, 2:-2], direct[:, :, 2:-2], atol=1e-10)
    none = SimulationSpec()
    np.testing.assert_array_equal(coregister_lowres(low, none), low)


def test_warp_and_unwarp(rng):
    yy, xx = np.mgrid[0:32, 0:32]
    pan = 100 + 30 * np.sin(xx / 6.0 + yy / 8.0)
    spec = SimulationSpec(shifts=default_shifts(3))
    warped = warp_pan_per_band(pan, spec, 3)
    np.testing.assert_array_equal(warped[0], pan)
    back = unwarp_bands(warped, spec)
    assert np.abs(back - pan)[:, 4:-4, 4:-4].max() < 0.01 * np.ptp(pan)


def test_procedural_scene_and_dataset():
    scene = procedural_scene(64, 4, seed=1)
    assert scene.shape == (4, 64, 64)
    assert scene.min() >= 15 and scene.max() <= 240
    np.testing.assert_array_equal(scene, procedural_scene(64, 4, seed=1))
    pan, low, ref = make_dataset(scene, SimulationSpec(shifts=default_shifts(4), alphas=ALPHAS_BGRI))
    assert pan.shape == (64, 64) and low.shape == (4, 16, 16)
    assert ref is scene or np.array_equal(ref, scene)


@pytest.mark.parametrize("kwargs", [dict(sigma=0), dict(factor=1), dict(noise_sigma=-1)])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        SimulationSpec(**kwargs)
    with pytest.raises(ValueError):
        SimulationSpec(shifts=((0, 0),)).band_shifts(2)
