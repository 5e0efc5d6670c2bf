"""Full-reference and no-reference fusion quality indices.

The structural index is the stabilizer-free universal quality index
computed on non-overlapping 8x8 blocks; trailing partial blocks are
dropped and blocks with a zero denominator are skipped.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from pansharp.raster import check_band, check_image, check_same_shape

BLOCK = 8


def rmse(ref, test) -> float:
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    check_same_shape(ref, test, ("ref", "test"))
    d = ref - test
    return float(np.sqrt(np.mean(d * d)))


def ergas(ref, test, s=4) -> float:
    ref = check_image(ref, "ref")
    test = check_image(test, "test")
    check_same_shape(ref, test, ("ref", "test"))
    means = ref.mean(axis=(1, 2))
    if np.any(means == 0):
        raise ValueError("ERGAS is undefined for a reference band with zero mean")
    ratios = np.array([rmse(r, t) for r, t in zip(ref, test)]) / means
    return float(100.0 / s * np.sqrt(np.mean(ratios**2)))


def sam(ref, test, return_skipped=False):
    """Mean spectral angle in degrees over pixels where both vectors are nonzero."""
    ref = check_image(ref, "ref")
    test = check_image(test, "test")
    check_same_shape(ref, test, ("ref", "test"))
    nr = np.sqrt(np.sum(ref * ref, axis=0))
    nt = np.sqrt(np.sum(test * test, axis=0))
    valid = (nr > 0) & (nt > 0)
    a = ref[:, valid] / nr[valid]
    b = test[:, valid] / nt[valid]
    # half-angle form stays accurate near 0 and 180 degrees, unlike arccos
    diff = np.sqrt(np.sum((a - b) ** 2, axis=0))
    summ = np.sqrt(np.sum((a + b) ** 2, axis=0))
    angles = 2.0 * np.arctan2(diff, summ)
    angle = float(np.degrees(np.mean(angles))) if angles.size else float("nan")
    if return_skipped:
        return angle, int(np.count_nonzero(~valid))
    return angle


def _blocks(img):
    # (..., H, W) -> (..., n_blocks, BLOCK*BLOCK)
    h, w = img.shape[-2:]
    if h < BLOCK or w < BLOCK:
        raise ValueError(f"image {h}x{w} is smaller than one {BLOCK}x{BLOCK} block")
    nh, nw = h // BLOCK, w // BLOCK
    x = img[..., : nh * BLOCK, : nw * BLOCK]
    x = x.reshape(x.shape[:-2] + (nh, BLOCK, nw, BLOCK))
    x = np.moveaxis(x, -3, -2)
    return x.reshape(x.shape[:-4] + (nh * nw, BLOCK * BLOCK))


def _average_defined(num, den):
    ok = den != 0
    if not np.any(ok):
        return float("nan")
    return float(np.mean(num[ok] / den[ok]))


def ssim_band(ref, test) -> float:
    """Universal quality index averaged over 8x8 blocks; range [-1, 1]."""
    x = _blocks(check_band(ref, "ref"))
    y = _blocks(check_band(test, "test"))
    if x.shape != y.shape:
        raise ValueError("shape mismatch")
    mx, my = x.mean(axis=1), y.mean(axis=1)
    dx, dy = x - mx[:, None], y - my[:, None]
    vx, vy = np.mean(dx * dx, axis=1), np.mean(dy * dy, axis=1)
    cxy = np.mean(dx * dy, axis=1)
    return _average_defined(4 * cxy * mx * my, (vx + vy) * (mx * mx + my * my))


def cd_conj(x):
    """Cayley-Dickson conjugate along the last axis."""
    out = -x
    out[..., 0] = x[..., 0]
    return out


def cd_mul(x, y):
    """Cayley-Dickson product ``(a, b)(c, d) = (ac - d*b, da + bc*)`` along the last axis."""
    n = x.shape[-1]
    if n == 1:
        return x * y
    h = n // 2
    a, b = x[..., :h], x[..., h:]
    c, d = y[..., :h], y[..., h:]
    return np.concatenate([cd_mul(a, c) - cd_mul(cd_conj(d), b), cd_mul(d, a) + cd_mul(b, cd_conj(c))], axis=-1)


def q2n(ref, test) -> float:
    """Hypercomplex extension of the block quality index to multiband images.

    Bands are padded with zeros up to the next power of two. A single band
    falls back to :func:`ssim_band`.
    """
    ref = check_image(ref, "ref")
    test = check_image(test, "test")
    check_same_shape(ref, test, ("ref", "test"))
    c = ref.shape[0]
    if c == 1:
        return ssim_band(ref[0], test[0])
    dim = 1 << (c - 1).bit_length()
    pad = ((0, dim - c), (0, 0), (0, 0))
    # (n_blocks, 64, dim) hypercomplex samples
    x = np.moveaxis(_blocks(np.pad(ref, pad)), 0, -1)
    y = np.moveaxis(_blocks(np.pad(test, pad)), 0, -1)
    mx, my = x.mean(axis=1), y.mean(axis=1)
    vx = np.sum(x * x, axis=2).mean(axis=1) - np.sum(mx * mx, axis=1)
    vy = np.sum(y * y, axis=2).mean(axis=1) - np.sum(my * my, axis=1)
    cxy = cd_mul(x, cd_conj(y)).mean(axis=1) - cd_mul(mx, cd_conj(my))
    nmx = np.sqrt(np.sum(mx * mx, axis=1))
    nmy = np.sqrt(np.sum(my * my, axis=1))
    num = 4 * np.sqrt(np.sum(cxy * cxy, axis=1)) * nmx * nmy
    return _average_defined(num, (vx + vy) * (nmx**2 + nmy**2))


def d_lambda(fused, lowres_up) -> float:
    """Spectral distortion: change of inter-band similarity w.r.t. the upsampled bands."""
    u = check_image(fused, "fused")
    ut = check_image(lowres_up, "lowres_up")
    check_same_shape(u, ut, ("fused", "lowres_up"))
    c = u.shape[0]
    if c < 2:
        raise ValueError("spectral distortion needs at least two bands")
    total = 0.0
    for k in range(c):
        for l in range(c):
            if k != l:
                total += abs(ssim_band(ut[k], ut[l]) - ssim_band(u[k], u[l]))
    return total / (c * (c - 1))


def d_s(fused, lowres_up, pan, pan_low) -> float:
    """Spatial distortion between pan/fused and low-pass pan/upsampled similarities.

    ``pan`` and ``pan_low`` may be single images or per-band stacks.
    """
    u = check_image(fused, "fused")
    ut = check_image(lowres_up, "lowres_up")
    check_same_shape(u, ut, ("fused", "lowres_up"))
    c = u.shape[0]
    pans = np.broadcast_to(check_image(pan, "pan"), u.shape)
    lows = np.broadcast_to(check_image(pan_low, "pan_low"), u.shape)
    return sum(abs(ssim_band(pans[k], u[k]) - ssim_band(lows[k], ut[k])) for k in range(c)) / c


def qnr(d_lam, d_sp) -> float:
    return (1.0 - d_lam) * (1.0 - d_sp)


@dataclass
class MetricReport:
    rmse_per_band: list[float]
    rmse: float
    ergas: float
    sam_degrees: float
    ssim_per_band: list[float]
    ssim: float
    q2n: float

    CSV_FIELDS = ("rmse", "ergas", "sam", "ssim", "q2n")

    def row(self):
        return [self.rmse, self.ergas, self.sam_degrees, self.ssim, self.q2n]

    def to_dict(self):
        return asdict(self)


def full_reference_report(ref, test, s=4) -> MetricReport:
    ref = check_image(ref, "ref")
    test = check_image(test, "test")
    check_same_shape(ref, test, ("ref", "test"))
    per_rmse = [rmse(r, t) for r, t in zip(ref, test)]
    per_ssim = [ssim_band(r, t) for r, t in zip(ref, test)]
    return MetricReport(
        rmse_per_band=per_rmse,
        rmse=float(np.mean(per_rmse)),
        ergas=ergas(ref, test, s),
        sam_degrees=sam(ref, test),
        ssim_per_band=per_ssim,
        ssim=float(np.mean(per_ssim)),
        q2n=q2n(ref, test),
    )
