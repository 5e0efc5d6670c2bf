"""Raster data model and file I/O.

Images are plain numpy arrays. A multispectral image is ``(C, H, W)``
float64, band-sequential and row-major, so ``img[k, p1, p2]`` lives at
linear offset ``k*W*H + p1*W + p2``. A single band (and a panchromatic
image) is ``(H, W)``.
"""

from __future__ import annotations

import os
import re

import numpy as np

MBF_MAGIC = b"MBF1"
_MBF_HEADER = re.compile(rb"MBF1 ([0-9]+) ([0-9]+) ([0-9]+)\n")


class RasterFormatError(ValueError):
    """Malformed or unsupported raster header."""


def check_band(band, name="band"):
    """Validate a single-band raster and return it as float64 ``(H, W)``."""
    arr = np.asarray(band, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[0] == 1:
        arr = arr[0]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be at least 1x1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_image(img, name="image"):
    """Validate a multispectral raster and return it as float64 ``(C, H, W)``.

    A 2-D input is promoted to a single-band image.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[np.newaxis]
    if arr.ndim != 3:
        raise ValueError(f"{name} must be (C, H, W), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ValueError(f"{name} has an empty dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_same_shape(a, b, names=("a", "b")):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {names[0]} {a.shape} vs {names[1]} {b.shape}")


def to_uint8(img):
    """Clamp to [0, 255] and round half away from zero."""
    clamped = np.clip(np.asarray(img, dtype=np.float64), 0.0, 255.0)
    return np.floor(clamped + 0.5).astype(np.uint8)


def _read_pnm_token(data, pos):
    # skips whitespace and '#' comments
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise RasterFormatError("truncated PNM header")
    return data[start:pos], pos


def _parse_pnm(data):
    magic, pos = _read_pnm_token(data, 0)
    if magic not in (b"P5", b"P6"):
        raise RasterFormatError(f"unsupported PNM magic {magic!r}")
    fields = []
    for _ in range(3):
        tok, pos = _read_pnm_token(data, pos)
        if not tok.isdigit():
            raise RasterFormatError(f"non-numeric PNM header field {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width < 1 or height < 1 or not 0 < maxval < 256:
        raise RasterFormatError(f"unsupported PNM geometry {width}x{height} maxval {maxval}")
    pos += 1  # single whitespace byte before the payload
    channels = 1 if magic == b"P5" else 3
    count = width * height * channels
    payload = data[pos:pos + count]
    if len(payload) != count:
        raise OSError(f"truncated PNM payload: expected {count} bytes, got {len(payload)}")
    arr = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    arr = arr.reshape(height, width, channels)
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def _parse_mbf(data):
    m = _MBF_HEADER.match(data)
    if m is None:
        raise RasterFormatError("malformed MBF header")
    width, height, bands = (int(g) for g in m.groups())
    if width < 1 or height < 1 or bands < 1:
        raise RasterFormatError(f"invalid MBF dimensions {width}x{height}x{bands}")
    count = width * height * bands
    payload = data[m.end():]
    if len(payload) < 4 * count:
        raise OSError(f"truncated MBF payload: expected {4 * count} bytes, got {len(payload)}")
    arr = np.frombuffer(payload[:4 * count], dtype="<f4").astype(np.float64)
    return arr.reshape(bands, height, width)


def read_image(path):
    """Read an MBF, PGM (P5) or PPM (P6) file as a ``(C, H, W)`` float64 array.

    8-bit samples are returned in [0, 255] without rescaling.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if data.startswith(MBF_MAGIC):
        img = _parse_mbf(data)
    elif data[:2] in (b"P5", b"P6"):
        img = _parse_pnm(data)
    else:
        raise RasterFormatError(f"{path}: unrecognized raster format")
    if not np.all(np.isfinite(img)):
        raise RasterFormatError(f"{path}: non-finite samples")
    return img


def _infer_format(path):
    ext = os.path.splitext(str(path))[1].lower()
    return {".mbf": "MBF", ".pgm": "PGM", ".ppm": "PPM"}.get(ext, "MBF")


def write_image(img, path, format=None):
    """Write ``img`` as MBF (float32), PGM or PPM.

    PGM needs one band and PPM three; 8-bit formats clamp to [0, 255] and
    round half away from zero. ``format`` defaults to the file extension.
    """
    arr = check_image(img)
    fmt = (format or _infer_format(path)).upper()
    bands, height, width = arr.shape
    if fmt == "MBF":
        if np.any(np.abs(arr) > np.finfo(np.float32).max):
            raise ValueError("sample magnitude exceeds the float32 range of MBF")
        header = f"MBF1 {width} {height} {bands}\n".encode("ascii")
        payload = arr.astype("<f4").tobytes(order="C")
    elif fmt == "PGM":
        if bands != 1:
            raise ValueError(f"PGM requires 1 band, got {bands}")
        header = f"P5\n{width} {height}\n255\n".encode("ascii")
        payload = to_uint8(arr[0]).tobytes()
    elif fmt == "PPM":
        if bands != 3:
            raise ValueError(f"PPM requires 3 bands, got {bands}")
        header = f"P6\n{width} {height}\n255\n".encode("ascii")
        payload = to_uint8(arr.transpose(1, 2, 0)).tobytes()
    else:
        raise ValueError(f"unknown raster format {format!r}")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def difference_visualization(a, b, span=20.0):
    """Map ``a - b`` linearly from [-span, span] to [0, 255], saturating outside."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b)
    return np.clip((a - b + span) * 255.0 / (2.0 * span), 0.0, 255.0)
