"""Classical band-wise fusion baselines.

All functions take the panchromatic already expressed in the band's
geometry and return one high-resolution band. ``ut`` below denotes the
bicubic upsampling of the low-resolution band.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pansharp.raster import check_band, check_image
from pansharp.sampling import BlurSpec, SamplingSpec, bicubic_upsample, blur_downsample, box_kernel, convolve


@dataclass(frozen=True)
class BaselineConfig:
    hpf_box: int = 5
    lmvm_window: int = 9
    ratio_epsilon: float = 1e-6

    def __post_init__(self):
        for name in ("hpf_box", "lmvm_window"):
            size = getattr(self, name)
            if size < 3 or size % 2 == 0:
                raise ValueError(f"{name} must be odd and >= 3, got {size}")
        if not self.ratio_epsilon > 0:
            raise ValueError("ratio_epsilon must be positive")


def _prepare(pan, lowres, sampling):
    pan = check_band(pan, "pan")
    low = check_band(lowres, "lowres")
    s = sampling.factor
    if pan.shape != (low.shape[0] * s, low.shape[1] * s):
        raise ValueError(f"pan {pan.shape} does not match lowres {low.shape} at factor {s}")
    return pan, bicubic_upsample(low, s, sampling.phase)


def _floor(pan, eps):
    return eps * float(np.mean(pan))


def box_blur(img, size):
    return convolve(img, box_kernel(size))


def fuse_bicubic(lowres, s=4) -> np.ndarray:
    """Bicubic upsampling of every band, no panchromatic."""
    return bicubic_upsample(check_image(lowres, "lowres"), s)


def fuse_hpf(pan, lowres, cfg=None, sampling=None) -> np.ndarray:
    """``ut + (P - box(P))``."""
    cfg = cfg or BaselineConfig()
    pan, up = _prepare(pan, lowres, sampling or SamplingSpec())
    return up + (pan - box_blur(pan, cfg.hpf_box))


def fuse_sfim(pan, lowres, cfg=None, sampling=None) -> np.ndarray:
    """``ut * P / box(P)``, denominator clamped at ``eps * mean(P)``."""
    cfg = cfg or BaselineConfig()
    pan, up = _prepare(pan, lowres, sampling or SamplingSpec())
    low = np.maximum(box_blur(pan, cfg.hpf_box), _floor(pan, cfg.ratio_epsilon))
    return up * pan / low


def fuse_lbf(pan, lowres, blur=None, sampling=None, cfg=None) -> np.ndarray:
    """``ut * P / Pt`` with ``Pt`` the bicubic upsampling of the blurred, decimated pan."""
    cfg = cfg or BaselineConfig()
    blur = blur or BlurSpec()
    sampling = sampling or SamplingSpec()
    pan, up = _prepare(pan, lowres, sampling)
    pan_low = bicubic_upsample(blur_downsample(pan, blur, sampling), sampling.factor, sampling.phase)
    return up * pan / np.maximum(pan_low, _floor(pan, cfg.ratio_epsilon))


def local_mean_std(img, size):
    """Windowed mean and population standard deviation (symmetric boundaries)."""
    mean = box_blur(img, size)
    var = box_blur(img * img, size) - mean * mean
    return mean, np.sqrt(np.maximum(var, 0.0))


def fuse_lmvm(pan, lowres, cfg=None, sampling=None) -> np.ndarray:
    """Match the local mean and standard deviation of ``P`` to those of ``ut``."""
    cfg = cfg or BaselineConfig()
    pan, up = _prepare(pan, lowres, sampling or SamplingSpec())
    m_pan, s_pan = local_mean_std(pan, cfg.lmvm_window)
    m_up, s_up = local_mean_std(up, cfg.lmvm_window)
    return (pan - m_pan) * s_up / np.maximum(s_pan, _floor(pan, cfg.ratio_epsilon)) + m_up
