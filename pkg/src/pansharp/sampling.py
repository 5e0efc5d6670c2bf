"""Linear operators of the image formation model.

Every operator acts on the last two axes, so it accepts a single band
``(H, W)`` as well as a stack ``(C, H, W)``. Boundaries use half-sample
symmetric extension (``d c b a | a b c d | d c b a``). Sums over kernel
taps run in a fixed order so results do not depend on threading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KEYS_A = -0.5


@dataclass(frozen=True)
class BlurSpec:
    """Truncated, renormalized Gaussian point spread function.

    ``radius`` defaults to ``ceil(3 * sigma)``.
    """

    sigma: float = 1.3
    radius: int | None = None
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ValueError(f"unsupported blur kind {self.kind!r}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.radius is not None and self.radius < math.ceil(3 * self.sigma):
            raise ValueError(f"radius {self.radius} < ceil(3*sigma) = {math.ceil(3 * self.sigma)}")

    @property
    def support(self) -> int:
        return math.ceil(3 * self.sigma) if self.radius is None else int(self.radius)


@dataclass(frozen=True)
class SamplingSpec:
    """Decimation by ``factor`` keeping the lattice that starts at ``phase``."""

    factor: int = 4
    phase: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if int(self.factor) != self.factor or self.factor < 2:
            raise ValueError(f"sampling factor must be an integer >= 2, got {self.factor}")
        if len(self.phase) != 2 or not all(0 <= p < self.factor for p in self.phase):
            raise ValueError(f"phase must lie in [0, {self.factor})^2, got {self.phase}")
        object.__setattr__(self, "phase", tuple(int(p) for p in self.phase))


def mirror_index(idx, n):
    """Map arbitrary integer indices into ``[0, n)`` by half-sample symmetry."""
    r = np.mod(idx, 2 * n)
    return np.where(r >= n, 2 * n - 1 - r, r)


def gaussian_kernel(spec: BlurSpec) -> np.ndarray:
    """1-D taps of the separable Gaussian; the 2-D kernel is their outer product."""
    r = spec.support
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(x**2) / (2.0 * spec.sigma**2))
    return k / k.sum()


def box_kernel(size: int) -> np.ndarray:
    if size < 1 or size % 2 == 0:
        raise ValueError(f"box size must be odd and positive, got {size}")
    return np.full(size, 1.0 / size)


def _conv_axis(x, k, axis):
    x = np.moveaxis(x, axis, 0)
    n = x.shape[0]
    r = len(k) // 2
    out = np.zeros_like(x)
    base = np.arange(n)
    for t, kt in enumerate(k):
        out += kt * x[mirror_index(base - (t - r), n)]
    return np.moveaxis(out, 0, axis)


def _conv_axis_adjoint(y, k, axis):
    y = np.moveaxis(y, axis, 0)
    n = y.shape[0]
    r = len(k) // 2
    out = np.zeros_like(y)
    base = np.arange(n)
    for t, kt in enumerate(k):
        np.add.at(out, mirror_index(base - (t - r), n), kt * y)
    return np.moveaxis(out, 0, axis)


def convolve(img, kernel) -> np.ndarray:
    """Separable 2-D convolution with symmetric boundary extension.

    ``kernel`` is the 1-D tap vector applied along rows and columns.
    """
    k = np.asarray(kernel, dtype=np.float64)
    x = np.asarray(img, dtype=np.float64)
    return _conv_axis(_conv_axis(x, k, -2), k, -1)


def convolve_adjoint(img, kernel) -> np.ndarray:
    """Exact transpose of :func:`convolve`, boundary folding included."""
    k = np.asarray(kernel, dtype=np.float64)
    y = np.asarray(img, dtype=np.float64)
    return _conv_axis_adjoint(_conv_axis_adjoint(y, k, -1), k, -2)


def _check_divisible(shape, s):
    h, w = shape[-2:]
    if h % s or w % s:
        raise ValueError(f"image size {h}x{w} is not divisible by sampling factor {s}")


def decimate(img, spec: SamplingSpec) -> np.ndarray:
    x = np.asarray(img, dtype=np.float64)
    s = spec.factor
    _check_divisible(x.shape, s)
    p1, p2 = spec.phase
    return np.ascontiguousarray(x[..., p1::s, p2::s])


def zero_fill(lowres, spec: SamplingSpec) -> np.ndarray:
    """Transpose of :func:`decimate`: place samples on the lattice, zeros elsewhere."""
    y = np.asarray(lowres, dtype=np.float64)
    s = spec.factor
    out = np.zeros(y.shape[:-2] + (y.shape[-2] * s, y.shape[-1] * s))
    p1, p2 = spec.phase
    out[..., p1::s, p2::s] = y
    return out


def sampling_mask(shape, spec: SamplingSpec) -> np.ndarray:
    """Indicator of the decimation lattice on a high-resolution grid."""
    return zero_fill(np.ones((shape[0] // spec.factor, shape[1] // spec.factor)), spec)


def replicate_upsample(img, s: int) -> np.ndarray:
    """Copy every pixel into an ``s x s`` block."""
    x = np.asarray(img, dtype=np.float64)
    return np.repeat(np.repeat(x, s, axis=-2), s, axis=-1)


def keys_weights(frac):
    """Keys cubic-convolution weights for taps at offsets -1, 0, 1, 2."""
    a = KEYS_A
    d = np.stack([1.0 + frac, frac, 1.0 - frac, 2.0 - frac])
    near = ((a + 2) * d - (a + 3)) * d * d + 1
    far = ((a * d - 5 * a) * d + 8 * a) * d - 4 * a
    return np.where(d <= 1.0, near, np.where(d < 2.0, far, 0.0))


def _resample_axis(x, positions, axis):
    x = np.moveaxis(x, axis, 0)
    n = x.shape[0]
    base = np.floor(positions)
    w = keys_weights(positions - base)
    base = base.astype(np.int64)
    shape = (-1,) + (1,) * (x.ndim - 1)
    out = np.zeros((len(positions),) + x.shape[1:])
    for t in range(4):
        out += w[t].reshape(shape) * x[mirror_index(base + (t - 1), n)]
    return np.moveaxis(out, 0, axis)


def bicubic_upsample(img, s: int, phase=(0, 0)) -> np.ndarray:
    """Keys bicubic interpolation onto an ``s`` times finer grid.

    Low-resolution sample ``(i, j)`` sits at high-resolution pixel
    ``(s*i + phase[0], s*j + phase[1])`` and is reproduced exactly there.
    """
    x = np.asarray(img, dtype=np.float64)
    h, w = x.shape[-2:]
    rows = (np.arange(h * s) - phase[0]) / s
    cols = (np.arange(w * s) - phase[1]) / s
    return _resample_axis(_resample_axis(x, rows, -2), cols, -1)


def bicubic_translate(img, dx: float, dy: float) -> np.ndarray:
    """Shift content by ``dx`` columns and ``dy`` rows: ``out(p) = img(p - (dy, dx))``."""
    x = np.asarray(img, dtype=np.float64)
    h, w = x.shape[-2:]
    bound = min(h, w) / 4.0
    if abs(dx) >= bound or abs(dy) >= bound:
        raise ValueError(f"shift ({dx}, {dy}) exceeds the sanity bound {bound}")
    out = x
    if dy != 0:
        out = _resample_axis(out, np.arange(h) - float(dy), -2)
    if dx != 0:
        out = _resample_axis(out, np.arange(w) - float(dx), -1)
    return np.array(out, dtype=np.float64, copy=True)


def blur_downsample(img, blur: BlurSpec, spec: SamplingSpec) -> np.ndarray:
    """Forward operator of the data term: blur, then keep the sampling lattice."""
    return decimate(convolve(img, gaussian_kernel(blur)), spec)


def adjoint_upsample_blur(lowres, blur: BlurSpec, spec: SamplingSpec) -> np.ndarray:
    """Transpose of :func:`blur_downsample`."""
    return convolve_adjoint(zero_fill(lowres, spec), gaussian_kernel(blur))
