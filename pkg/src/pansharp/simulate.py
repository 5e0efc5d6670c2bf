"""Reduced-resolution test problems built from a reference image.

The panchromatic is a convex combination of the reference bands; each
low-resolution band is the reference band translated by a subpixel
amount, blurred by a Gaussian and decimated.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from pansharp.raster import check_image
from pansharp.sampling import BlurSpec, SamplingSpec, bicubic_translate, blur_downsample

ALPHAS_RGB = (1 / 3, 1 / 3, 1 / 3)
ALPHAS_BGRI = (0.1, 0.4, 0.25, 0.25)
ALPHAS_BGRI_NO_BLUE = (0.0, 0.4, 0.35, 0.25)


@dataclass(frozen=True)
class MixingWeights:
    alphas: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(x) for x in self.alphas)
        if not a or any(x < 0 for x in a):
            raise ValueError(f"mixing weights must be nonnegative, got {a}")
        object.__setattr__(self, "alphas", a)

    @property
    def is_convex(self):
        return abs(sum(self.alphas) - 1.0) <= 1e-12

    def __len__(self):
        return len(self.alphas)


def default_shifts(n_bands):
    """Band ``k`` moves by ``(0.6 k, -0.4 k)`` high-resolution pixels."""
    return tuple((0.6 * k, -0.4 * k) for k in range(n_bands))


@dataclass(frozen=True)
class SimulationSpec:
    sigma: float = 1.3
    factor: int = 4
    shifts: tuple[tuple[float, float], ...] | None = None
    alphas: tuple[float, ...] | None = None
    noise_sigma: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.factor < 2:
            raise ValueError("factor must be >= 2")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.shifts is not None:
            object.__setattr__(self, "shifts", tuple((float(dx), float(dy)) for dx, dy in self.shifts))
        if self.alphas is not None:
            object.__setattr__(self, "alphas", MixingWeights(self.alphas).alphas)

    @property
    def blur(self):
        return BlurSpec(self.sigma)

    @property
    def sampling(self):
        return SamplingSpec(self.factor)

    def band_shifts(self, n_bands):
        shifts = self.shifts if self.shifts is not None else tuple((0.0, 0.0) for _ in range(n_bands))
        if len(shifts) != n_bands:
            raise ValueError(f"{len(shifts)} shifts given for {n_bands} bands")
        return shifts

    def to_dict(self):
        return asdict(self)


def synthesize_pan(reference, alphas) -> np.ndarray:
    ref = check_image(reference, "reference")
    a = np.asarray(MixingWeights(tuple(np.atleast_1d(alphas))).alphas)
    if len(a) != ref.shape[0]:
        raise ValueError(f"{len(a)} mixing weights for {ref.shape[0]} bands")
    return np.tensordot(a, ref, axes=1)


def simulate_lowres(reference, spec: SimulationSpec, rng=None) -> np.ndarray:
    """Translate, blur and decimate every band; add Gaussian noise if requested."""
    ref = check_image(reference, "reference")
    shifts = spec.band_shifts(ref.shape[0])
    bands = []
    for band, (dx, dy) in zip(ref, shifts):
        moved = bicubic_translate(band, dx, dy) if (dx or dy) else band
        bands.append(blur_downsample(moved, spec.blur, spec.sampling))
    low = np.stack(bands)
    if spec.noise_sigma > 0:
        rng = rng if rng is not None else np.random.default_rng(spec.seed)
        low = low + rng.normal(0.0, spec.noise_sigma, size=low.shape)
    return low


def coregister_lowres(lowres, spec: SimulationSpec) -> np.ndarray:
    """Undo each band's translation at low resolution (shift divided by the factor)."""
    low = check_image(lowres, "lowres")
    out = []
    for band, (dx, dy) in zip(low, spec.band_shifts(low.shape[0])):
        out.append(bicubic_translate(band, -dx / spec.factor, -dy / spec.factor) if (dx or dy) else band)
    return np.stack(out)


def warp_pan_to_band(pan, shift) -> np.ndarray:
    dx, dy = shift
    return bicubic_translate(pan, dx, dy)


def warp_pan_per_band(pan, spec: SimulationSpec, n_bands) -> np.ndarray:
    return np.stack([warp_pan_to_band(pan, s) for s in spec.band_shifts(n_bands)])


def unwarp_bands(fused, spec: SimulationSpec) -> np.ndarray:
    """Bring per-band results back to the common (reference) geometry."""
    img = check_image(fused, "fused")
    return np.stack([
        bicubic_translate(band, -dx, -dy) if (dx or dy) else band
        for band, (dx, dy) in zip(img, spec.band_shifts(img.shape[0]))
    ])


def procedural_scene(size=128, n_bands=4, seed=0) -> np.ndarray:
    """Synthetic reference: smooth gradients, flat rectangles and a zone plate.

    Each band sees the same geometry with its own reflectances; values stay
    roughly inside [15, 240].
    """
    rng = np.random.default_rng(seed)
    h = w = size
    yy, xx = np.mgrid[0:h, 0:w] / size
    bands = np.empty((n_bands, h, w))
    base = rng.uniform(60, 140, n_bands)
    tilt = rng.uniform(-40, 40, (n_bands, 2))
    for k in range(n_bands):
        bands[k] = base[k] + tilt[k, 0] * (yy - 0.5) + tilt[k, 1] * (xx - 0.5)
    for _ in range(max(6, size // 8)):
        r0, c0 = rng.integers(0, size - size // 8, 2)
        rh, rw = rng.integers(size // 16 + 2, size // 4 + 2, 2)
        level = rng.uniform(-60, 60, n_bands)
        bands[:, r0:r0 + rh, c0:c0 + rw] += level[:, None, None]
    # zone plate in one quadrant, frequency increasing outwards
    cy, cx = 0.75 * h, 0.25 * w
    rad2 = ((np.mgrid[0:h, 0:w][0] - cy) ** 2 + (np.mgrid[0:h, 0:w][1] - cx) ** 2)
    plate = np.cos(np.pi * rad2 / (1.5 * size)) * np.exp(-rad2 / (2 * (0.18 * size) ** 2))
    gain = rng.uniform(15, 35, n_bands)
    bands += gain[:, None, None] * plate
    return np.clip(bands, 15.0, 240.0)


def make_dataset(reference, spec: SimulationSpec):
    """Panchromatic, low-resolution bands and ground truth for one reference image."""
    ref = check_image(reference, "reference")
    alphas = spec.alphas if spec.alphas is not None else tuple([1.0 / ref.shape[0]] * ref.shape[0])
    pan = synthesize_pan(ref, alphas)
    low = simulate_lowres(ref, spec)
    return pan, low, ref
